#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "rhgn/sim/world.hpp"
#include "rhgn/types.hpp"

namespace rhgn::behaviours {

using sim::AgentMemory;
using sim::Vec2;
using sim::World;

using Corridor = std::pair<std::uint32_t, std::uint32_t>;  // (origin, destination)

// Flows of the current stage in (origin, destination) order.
inline std::vector<Corridor> stage_flows(const World& w) {
  std::vector<Corridor> flows;
  const auto& nodes = w.spec().nodes;
  for (std::uint32_t o = 0; o < nodes.size(); ++o)
    for (std::uint32_t d = 0; d < nodes.size(); ++d)
      if (o != d && nodes[o].stages[w.stage()].out_pct > 0.0 && nodes[d].stages[w.stage()].in_pct > 0.0)
        flows.push_back({o, d});
  if (flows.empty()) flows.push_back({0, 1});
  return flows;
}

// Oldest held packet's flow, else the last one held, else a flow assigned by id.
inline Corridor current_corridor(const World& w, std::size_t a) {
  const auto& agent = w.agents()[a];
  if (!agent.buffer.empty()) {
    const auto& p = w.packet(agent.buffer.front());
    return {p.origin, p.destination};
  }
  if (agent.memory.corridor) return *agent.memory.corridor;
  const auto flows = stage_flows(w);
  return flows[a % flows.size()];
}

inline bool same_corridor(Corridor x, Corridor y) noexcept {
  return x == y || (x.first == y.second && x.second == y.first);
}

inline std::vector<std::size_t> visible_agents(const World& w, std::size_t a) {
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < w.agents().size(); ++b)
    if (b != a && w.viable(w.agent_device(b), w.agent_device(a))) out.push_back(b);
  return out;
}

struct Mb1Terms {
  // Keep-out disc bending the corridor line around a marked noise source.
  std::optional<Vec2> avoid_centre;
};

// Even spacing along the corridor; walls repel and deflect the goal tangentially.
inline Vec2 mb1_force(const World& w, std::size_t a, AgentMemory& mem, Mb1Terms terms = {}) {
  const auto& bp = w.params().behaviour;
  const Vec2 p = w.agents()[a].position;
  const Corridor c = current_corridor(w, a);
  mem.corridor = c;
  const Vec2 po = w.nodes()[c.first].position, pd = w.nodes()[c.second].position;
  const double len = sim::distance(po, pd);
  const Vec2 u = len > 0.0 ? (pd - po) * (1.0 / len) : Vec2{1.0, 0.0};
  const double t_me = sim::dot(p - po, u);

  // Springs act along the corridor axis between the nearest corridor mates ahead
  // and behind (the nodes when none); the rest length cancels in the sum.
  const auto visible = visible_agents(w, a);
  double t_fwd = len, t_back = 0.0;
  for (std::size_t b = 0; b < w.agents().size(); ++b) {
    if (b == a) continue;
    if (!same_corridor(current_corridor(w, b), c)) continue;
    const double t = sim::dot(w.agents()[b].position - po, u);
    const bool ahead = t > t_me || (t == t_me && b > a);
    if (ahead && t < t_fwd) t_fwd = t;
    if (!ahead && t > t_back) t_back = t;
  }
  Vec2 goal = u * (bp.spring_gain * ((t_fwd - t_me) - (t_me - t_back)));
  const Vec2 on_line = sim::closest_point(sim::Segment{po, pd}, p);
  if (terms.avoid_centre && sim::distance(on_line, *terms.avoid_centre) < bp.avoid_radius) {
    const Vec2 out = on_line == *terms.avoid_centre ? sim::perp(u) : sim::unit(on_line - *terms.avoid_centre);
    goal += (*terms.avoid_centre + out * bp.avoid_radius - p) * bp.avoid_gain;
  } else {
    goal += (on_line - p) * bp.lateral_gain;
  }
  for (auto b : visible) {
    const Vec2 q = w.agents()[b].position;
    const double d = sim::distance(p, q);
    if (d < bp.separation_distance) goal += sim::unit(p - q) * (bp.separation_gain * (bp.separation_distance - d));
  }
  // A wall hit by the goal ray within range turns the goal along its face;
  // openings the ray passes through leave it untouched.
  const Vec2 dir = sim::unit(goal);
  std::optional<std::pair<double, const sim::Wall*>> hit;
  if (sim::norm(goal) > 0.0)
    for (const auto& wall : w.walls())
      if (const auto t = sim::ray_hit(p, dir, wall.segment); t && *t < bp.obstacle_range && (!hit || *t < hit->first))
        hit = {{*t, &wall}};
  if (hit) {
    const Vec2 n = sim::unit(p - sim::closest_point(hit->second->segment, p + dir * hit->first));
    const Vec2 t = sim::perp(n);
    const double into = -sim::dot(goal, n);
    if (into > 0.0) {
      if (mem.deflect_sign == 0) {
        mem.deflect_sign = sim::dot(goal, t) < 0.0 ? -1 : 1;
      } else if (mem.last_move >= 0.0 && mem.last_move < bp.reverse_fraction * w.params().agent.max_speed) {
        mem.deflect_sign = -mem.deflect_sign;  // cornered
      }
      // Sliding into a second wall while the other side is open: turn round.
      auto blocked = [&](Vec2 along) {
        for (const auto& wall : w.walls())
          if (&wall != hit->second)
            if (const auto d = sim::ray_hit(p, along, wall.segment); d && *d < bp.obstacle_range) return true;
        return false;
      };
      if (blocked(t * mem.deflect_sign) && !blocked(t * -mem.deflect_sign)) mem.deflect_sign = -mem.deflect_sign;
      goal += n * into + t * (mem.deflect_sign * into);
    }
  } else if (!w.closest_obstacle(p, 2.0 * bp.obstacle_range)) {
    mem.deflect_sign = 0;  // hysteresis keeps the side while hovering at the range edge
  }
  for (const auto& wall : w.walls()) {
    const Vec2 cp = sim::closest_point(wall.segment, p);
    const double d = sim::distance(cp, p);
    if (d < bp.obstacle_range) goal += sim::unit(p - cp) * (bp.repulsion_k / std::max(d * d, 1e-6));
  }
  return sim::clamp_length(goal, w.params().agent.max_speed);
}

struct Mb2Target {
  Vec2 position;
  bool in_range = false;
};

// Loaded: the oldest packet's destination. Empty: the nearest node with packets
// waiting, else the nearest visible agent.
inline std::optional<Mb2Target> mb2_target(const World& w, std::size_t a) {
  const auto& me = w.agents()[a];
  const std::size_t self = w.agent_device(a);
  if (!me.buffer.empty()) {
    const auto dest = w.packet(me.buffer.front()).destination;
    return Mb2Target{w.nodes()[dest].position, w.viable(self, w.node_device(dest))};
  }
  std::optional<std::size_t> best;
  double best_d = 0.0;
  for (std::size_t n = 0; n < w.nodes().size(); ++n) {
    if (!w.node_pending(n)) continue;
    const double d = sim::distance(w.nodes()[n].position, me.position);
    if (!best || d < best_d) best = n, best_d = d;
  }
  if (best) return Mb2Target{w.nodes()[*best].position, w.viable(w.node_device(*best), self)};
  std::optional<std::size_t> near;
  for (auto b : visible_agents(w, a)) {
    const double d = sim::distance(w.agents()[b].position, me.position);
    if (!near || d < best_d) near = b, best_d = d;
  }
  if (near) return Mb2Target{w.agents()[*near].position, true};
  return std::nullopt;
}

// Ferrying: head for the target; orbit obstacles until the target is reachable.
inline Vec2 mb2_force(const World& w, std::size_t a, AgentMemory& mem) {
  const auto& bp = w.params().behaviour;
  const double vmax = w.params().agent.max_speed;
  const Vec2 p = w.agents()[a].position;
  const auto target = mb2_target(w, a);
  Vec2 goal{};
  if (target && !target->in_range) goal = sim::unit(target->position - p) * vmax;
  const auto obs = w.closest_obstacle(p, bp.obstacle_range);
  if (!obs || !target || target->in_range) {
    mem.orbiting = false;
    return sim::clamp_length(goal, vmax);
  }
  const auto [cp, d] = *obs;
  const Vec2 n = sim::unit(p - cp);
  const Vec2 tangent = sim::perp(n);
  if (sim::dot(goal, n) > 0.0) {
    // obstacle is behind relative to the target
    mem.orbiting = false;
    return sim::clamp_length(goal + n * (bp.repulsion_k / std::max(d * d, 1e-6)), vmax);
  }
  if (mem.orbit_sign == 0) mem.orbit_sign = sim::dot(tangent, goal) < 0.0 ? -1 : 1;
  if (!mem.orbiting) {
    mem.orbiting = true;
  } else if (mem.last_move >= 0.0 && mem.last_move < bp.reverse_fraction * vmax) {
    mem.orbit_sign = -mem.orbit_sign;
  }
  const double radial = bp.repulsion_k / std::max(d * d, 1e-6) + bp.orbit_radial_gain * (bp.orbit_standoff - d);
  return sim::clamp_length(n * std::max(radial, 0.0) + tangent * (bp.orbit_gain * mem.orbit_sign), vmax);
}

// Position of the strongest active jammer heard above the detection level.
inline std::optional<Vec2> detected_jammer(const World& w, std::size_t a) {
  const std::size_t self = w.agent_device(a);
  if (!(w.jammer_dbm(self) >= w.params().behaviour.jam_detect_dbm)) return std::nullopt;
  const auto& r = w.params().radio;
  const Vec2 p = w.agents()[a].position;
  std::optional<Vec2> best;
  double best_rx = 0.0;
  for (std::size_t j = 0; j < w.spec().jammers.size(); ++j) {
    if (!w.jammer_active(j)) continue;
    const Vec2 at = w.spec().jammers[j].position;
    const double rx = sim::mean_received(r, r.jammer_power_dbm, at, p, w.walls());
    if (!best || rx > best_rx) best = at, best_rx = rx;
  }
  return best;
}

// MB-1 plus avoidance of a marked noise source until a quiet period passes.
inline Vec2 mb3_force(const World& w, std::size_t a, AgentMemory& mem) {
  const auto& bp = w.params().behaviour;
  if (const auto j = detected_jammer(w, a)) {
    mem.jammer_mark = *j;
    mem.avoid_until = w.step() + bp.quiet_steps;
  }
  Mb1Terms terms;
  if (mem.jammer_mark && w.step() < mem.avoid_until) terms.avoid_centre = mem.jammer_mark;
  return mb1_force(w, a, mem, terms);
}

inline Vec2 behaviour_force(BehaviourId b, const World& w, std::size_t a, AgentMemory& mem) {
  switch (b) {
    case BehaviourId::MB1: return mb1_force(w, a, mem);
    case BehaviourId::MB2: return mb2_force(w, a, mem);
    case BehaviourId::MB3: return mb3_force(w, a, mem);
  }
  return {};
}

}  // namespace rhgn::behaviours
