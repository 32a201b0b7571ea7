#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "rhgn/classifier/schema.hpp"
#include "rhgn/env/spec.hpp"
#include "rhgn/io.hpp"
#include "rhgn/sim/geometry.hpp"
#include "rhgn/sim/params.hpp"
#include "rhgn/sim/radio.hpp"
#include "rhgn/types.hpp"

namespace rhgn::sim {

namespace field = classifier::field;

using PacketId = std::uint32_t;
using Observation = std::array<double, field::kWidth>;

inline constexpr double kSentinelDistance = 5.0;
inline constexpr double kSentinelSignal = -95.0;
inline constexpr std::array<std::size_t, 4> kHistoryWindows{10, 100, 500, 1000};

struct Holder {
  enum class Kind : std::uint8_t { Node, Agent };
  Kind kind = Kind::Node;
  std::uint32_t index = 0;

  bool is_agent() const noexcept { return kind == Kind::Agent; }
  friend bool operator==(const Holder&, const Holder&) = default;
};

struct Packet {
  PacketId id = 0;
  std::uint32_t origin = 0;
  std::uint32_t destination = 0;
  std::uint64_t created = 0;
  std::optional<std::uint64_t> delivered;
  Holder holder;
  std::uint64_t arrived = 0;  // step the current holder took it
};

// Distinct values and value changes over the last `window` pushes.
class WindowCounter {
 public:
  explicit WindowCounter(std::size_t window = 10) : window_(window) {}

  void push(int v) {
    if (!values_.empty() && values_.back() != v) ++changes_;
    values_.push_back(v);
    if (count_[slot(v)]++ == 0) ++unique_;
    if (values_.size() > window_) {
      const int old = values_.front();
      values_.pop_front();
      if (old != values_.front()) --changes_;
      if (--count_[slot(old)] == 0) --unique_;
    }
  }
  std::size_t unique() const noexcept { return unique_; }
  std::size_t changes() const noexcept { return changes_; }

 private:
  std::size_t slot(int v) {
    const auto s = static_cast<std::size_t>(v + 1);
    if (s >= count_.size()) count_.resize(s + 1, 0);
    return s;
  }
  std::size_t window_;
  std::deque<int> values_;
  std::vector<std::size_t> count_;
  std::size_t unique_ = 0;
  std::size_t changes_ = 0;
};

struct AgentMemory {
  bool orbiting = false;
  int orbit_sign = 0;  // kept across obstacles once chosen
  int deflect_sign = 0;  // MB-1 slide direction while a wall is in range; 0 when none
  std::optional<Vec2> jammer_mark;
  std::uint64_t avoid_until = 0;
  std::optional<std::pair<std::uint32_t, std::uint32_t>> corridor;  // (origin, destination) nodes
  double last_move = -1.0;                                          // length of last applied move; <0 before the first
  bool last_clamped = false;                                        // last move was cut by a wall
};

struct AgentState {
  Vec2 position;
  std::vector<PacketId> buffer;  // FIFO, oldest first
  BehaviourId behaviour = BehaviourId::MB1;
  bool sent = false;
  bool received = false;
  int sink = -1;
  int source = -1;
  std::array<WindowCounter, 4> sinks{WindowCounter(10), WindowCounter(100), WindowCounter(500), WindowCounter(1000)};
  std::array<WindowCounter, 4> sources{WindowCounter(10), WindowCounter(100), WindowCounter(500), WindowCounter(1000)};
  AgentMemory memory;
};

struct NodeState {
  std::string name;
  Vec2 position;
  std::deque<PacketId> queue;
  std::size_t waypoint = 0;
  bool sent = false;
};

inline double fitness(std::uint64_t p_s, std::uint64_t p, std::uint64_t t_s, std::uint64_t t) {
  if (p == 0 || t == 0 || p_s > p || t_s == 0 || t_s > t) throw Error(Errc::DomainError, "fitness arguments out of range");
  return static_cast<double>(p_s) / static_cast<double>(p) - static_cast<double>(t_s) / static_cast<double>(t);
}

inline double round1(double v) noexcept { return std::round(v * 10.0) / 10.0; }

class World {
 public:
  World(const env::EnvironmentSpec& spec, const SimParams& params, std::uint64_t seed)
      : spec_(spec), params_(params), seed_(seed), radio_rng_(stream(seed, 1)), traffic_rng_(stream(seed, 2)) {
    params_.validate();
    spec_.validate();
    walls_ = spec_.walls;
    total_packets_ = params_.run.scaled_packets(spec_.packets);
    if (total_packets_ == 0) throw Error(Errc::InvalidArgument, "scaled packet total is zero");
    if (total_packets_ > std::numeric_limits<PacketId>::max()) throw Error(Errc::InvalidArgument, "too many packets");
    max_steps_ = params_.run.scaled_steps();
    for (const auto& n : spec_.nodes) nodes_.push_back(NodeState{n.name, n.start, {}, 0, false});
    place_agents(stream(seed, 3));
    const std::size_t devices = agents_.size() + nodes_.size();
    mean_rx_.assign(devices * devices, 0.0);
    in_dbm_.assign(devices, params_.radio.noise_floor_dbm);
    jam_dbm_.assign(devices, -std::numeric_limits<double>::infinity());
    for (std::size_t s = 0; s < spec_.stages; ++s) {
      const auto base = total_packets_ / spec_.stages;
      quota_.push_back(s + 1 == spec_.stages ? total_packets_ - base * (spec_.stages - 1) : base);
    }
    open_stage();
    refresh_links();
  }

  // Independent engine per stochastic subsystem.
  static std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(id), 0x9e3779b9u};
    return std::mt19937_64(seq);
  }

  const env::EnvironmentSpec& spec() const noexcept { return spec_; }
  const SimParams& params() const noexcept { return params_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t step() const noexcept { return step_; }
  std::uint64_t max_steps() const noexcept { return max_steps_; }
  bool terminated() const noexcept { return terminated_; }
  std::size_t stage() const noexcept { return stage_; }
  std::uint64_t total_packets() const noexcept { return total_packets_; }
  std::uint64_t delivered() const noexcept { return delivered_; }
  std::optional<std::uint64_t> completion_step() const noexcept { return completed_at_; }
  std::span<const Wall> walls() const noexcept { return walls_; }
  const std::vector<AgentState>& agents() const noexcept { return agents_; }
  std::vector<AgentState>& agents() noexcept { return agents_; }
  const std::vector<NodeState>& nodes() const noexcept { return nodes_; }
  const std::vector<Packet>& packets() const noexcept { return packets_; }
  const Packet& packet(PacketId id) const { return packets_.at(id); }

  std::size_t agent_device(std::size_t a) const noexcept { return a; }
  std::size_t node_device(std::size_t n) const noexcept { return agents_.size() + n; }
  Vec2 device_position(std::size_t d) const noexcept {
    return d < agents_.size() ? agents_[d].position : nodes_[d - agents_.size()].position;
  }

  bool jammer_active(std::size_t j) const noexcept { return spec_.jammers[j].active[stage_]; }

  // Mean received power (dBm) between devices, walls included, no shadowing.
  double mean_rx(std::size_t from, std::size_t to) const noexcept { return mean_rx_[from * device_count() + to]; }
  double interference_dbm(std::size_t d) const noexcept { return in_dbm_[d]; }
  double jammer_dbm(std::size_t d) const noexcept { return jam_dbm_[d]; }
  double mean_sinr(std::size_t from, std::size_t to) const noexcept { return mean_rx(from, to) - in_dbm_[to]; }
  bool viable(std::size_t from, std::size_t to) const noexcept {
    return from != to && mean_sinr(from, to) >= params_.radio.snr_threshold_db;
  }

  // Sub-step 1.
  void move_nodes() {
    for (std::size_t n = 0; n < nodes_.size(); ++n) {
      auto& node = nodes_[n];
      const auto& wps = spec_.nodes[n].stages[stage_].waypoints;
      double budget = params_.node_speed;
      while (node.waypoint < wps.size() && budget > 0.0) {
        const Vec2 to = wps[node.waypoint];
        const double d = distance(node.position, to);
        if (d <= budget) {
          node.position = to;
          budget -= d;
          ++node.waypoint;
          break;  // one segment per step keeps the bound exact
        }
        node.position += unit(to - node.position) * budget;
        budget = 0.0;
      }
    }
  }

  void refresh_links() {
    const std::size_t n = device_count();
    const auto& r = params_.radio;
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 pi = device_position(i);
      for (std::size_t j = i + 1; j < n; ++j) {
        const double v = mean_received(r, r.tx_power_dbm, pi, device_position(j), walls_);
        mean_rx_[i * n + j] = mean_rx_[j * n + i] = v;
      }
      double jam_mw = 0.0;
      for (std::size_t k = 0; k < spec_.jammers.size(); ++k)
        if (jammer_active(k)) jam_mw += dbm_to_mw(mean_received(r, r.jammer_power_dbm, spec_.jammers[k].position, pi, walls_));
      jam_dbm_[i] = jam_mw > 0.0 ? mw_to_dbm(jam_mw) : -std::numeric_limits<double>::infinity();
      in_dbm_[i] = mw_to_dbm(dbm_to_mw(r.noise_floor_dbm) + jam_mw);
    }
  }

  // Sub-step 2 bookkeeping: current sink/source and their window counters.
  void record_history() {
    for (auto& a : agents_) {
      if (!a.buffer.empty()) {
        const auto& p = packets_[a.buffer.front()];
        a.sink = static_cast<int>(p.destination);
        a.source = static_cast<int>(p.origin);
      }
      for (std::size_t w = 0; w < kHistoryWindows.size(); ++w) {
        a.sinks[w].push(a.sink);
        a.sources[w].push(a.source);
      }
    }
  }

  double lidar_min(Vec2 p) const {
    const std::size_t rays = params_.agent.lidar_rays;
    double best = params_.agent.lidar_range;
    for (std::size_t k = 0; k < rays; ++k) {
      const double th = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(rays);
      const Vec2 dir{std::cos(th), std::sin(th)};
      for (const auto& w : walls_)
        if (const auto t = ray_hit(p, dir, w.segment); t && *t < best) best = *t;
    }
    return best;
  }

  // Closest point on any wall within range, with its distance.
  std::optional<std::pair<Vec2, double>> closest_obstacle(Vec2 p, double range) const {
    std::optional<std::pair<Vec2, double>> best;
    for (const auto& w : walls_) {
      const Vec2 c = closest_point(w.segment, p);
      const double d = distance(c, p);
      if (d < range && (!best || d < best->second)) best = {{c, d}};
    }
    return best;
  }

  Observation sense(std::size_t a) const {
    Observation o{};
    const auto& me = agents_[a];
    const std::size_t self = agent_device(a);
    std::vector<std::size_t> swarm, others;
    for (std::size_t b = 0; b < agents_.size(); ++b)
      if (viable(agent_device(b), self)) swarm.push_back(agent_device(b));
    for (std::size_t n = 0; n < nodes_.size(); ++n)
      if (viable(node_device(n), self)) others.push_back(node_device(n));
    o[field::kNeighbourhoodSize] = static_cast<double>(swarm.size() + others.size());
    o[field::kSinkId] = me.sink;
    o[field::kSourceId] = me.source;
    for (std::size_t w = 0; w < kHistoryWindows.size(); ++w) {
      const std::size_t at = field::kWindowCounters + 4 * w;
      o[at] = static_cast<double>(me.sinks[w].unique());
      o[at + 1] = static_cast<double>(me.sinks[w].changes());
      o[at + 2] = static_cast<double>(me.sources[w].unique());
      o[at + 3] = static_cast<double>(me.sources[w].changes());
    }
    const double jam = jam_dbm_[self];
    o[field::kJammingStrength] = jam >= params_.radio.noise_floor_dbm ? round1(jam) : 0.0;
    o[field::kNoiseState] = in_dbm_[self];
    o[field::kPacketsHeld] = static_cast<double>(me.buffer.size());

    const std::optional<Vec2> sink = me.sink >= 0 ? std::optional(nodes_[me.sink].position) : std::nullopt;
    const std::optional<Vec2> source = me.source >= 0 ? std::optional(nodes_[me.source].position) : std::nullopt;
    o[field::kSourceSinkDistance] = sink && source ? round1(distance(*sink, *source)) : 0.0;

    const double cos_rough = std::cos(params_.behaviour.rough_sinkward_deg * M_PI / 180.0);
    auto fill = [&](const std::vector<std::size_t>& group, std::size_t flags, std::size_t closest_d,
                    std::size_t sinkward_d, std::size_t sourceward_d, std::optional<std::size_t> rough_d) {
      auto pick = [&](auto&& admit) {
        std::optional<std::size_t> best;
        double best_d = 0.0;
        for (auto d : group) {
          if (d == self || !admit(d)) continue;
          const double dist = distance(device_position(d), me.position);
          if (!best || dist < best_d) best = d, best_d = dist;
        }
        return best;
      };
      auto closer_to = [&](std::optional<Vec2> target) {
        return [&, target](std::size_t d) {
          return target && distance(device_position(d), *target) < distance(me.position, *target);
        };
      };
      const std::array<std::optional<std::size_t>, 3> chosen{
          pick([](std::size_t) { return true; }), pick(closer_to(sink)), pick(closer_to(source))};
      const std::array<std::size_t, 3> dist_slot{closest_d, sinkward_d, sourceward_d};
      for (std::size_t k = 0; k < 3; ++k) {
        const auto d = chosen[k];
        o[flags + 2 * k] = d ? has_packets(*d) : 0.0;
        o[flags + 2 * k + 1] = d ? is_full(*d) : 0.0;
        o[dist_slot[k]] = d ? round1(distance(device_position(*d), me.position)) : kSentinelDistance;
        o[dist_slot[k] + 1] = d ? round1(mean_rx(*d, self)) : kSentinelSignal;
      }
      if (rough_d) {
        const auto d = pick([&](std::size_t d) {
          if (!sink) return false;
          const Vec2 to_sink = unit(*sink - me.position), to_n = unit(device_position(d) - me.position);
          return dot(to_sink, to_n) >= cos_rough;
        });
        o[*rough_d] = d ? round1(distance(device_position(*d), me.position)) : kSentinelDistance;
      }
    };
    fill(swarm, field::kPacketFlags, field::kClosestSwarmDistance, field::kSinkwardSwarmDistance,
         field::kSourcewardSwarmDistance, field::kRoughSinkwardSwarmDistance);
    fill(others, field::kPacketFlags + 6, field::kClosestNonSwarmDistance, field::kSinkwardNonSwarmDistance,
         field::kSourcewardNonSwarmDistance, std::nullopt);
    o[field::kClosestWallDistance] = round1(lidar_min(me.position));
    return o;
  }

  // Sub-step 6 for one agent: clamp to speed, slide along walls, stay in the arena.
  Vec2 apply_move(std::size_t a, Vec2 move) {
    auto& agent = agents_[a];
    move = clamp_length(move, params_.agent.max_speed);
    const Vec2 from = agent.position;
    Vec2 to = from + move;
    bool clamped = false;
    if (const auto hit = first_blocking_wall(from, to)) {
      clamped = true;
      const Vec2 along = unit(walls_[*hit].segment.b - walls_[*hit].segment.a);
      to = from + along * dot(move, along);
      if (first_blocking_wall(from, to)) to = from;
    }
    to.x = std::clamp(to.x, 0.0, spec_.width);
    to.y = std::clamp(to.y, 0.0, spec_.height);
    agent.position = to;
    agent.memory.last_move = distance(from, to);
    agent.memory.last_clamped = clamped;
    return to - from;
  }

  // Sub-step 7: node sourcing, then agents in id order.
  void transfer_packets(std::ostream* trace = nullptr) {
    for (auto& a : agents_) a.sent = a.received = false;
    for (auto& n : nodes_) n.sent = false;
    for (std::size_t n = 0; n < nodes_.size(); ++n) {
      auto& node = nodes_[n];
      if (node.queue.empty()) continue;
      const PacketId pid = node.queue.front();
      const Vec2 dest = nodes_[packets_[pid].destination].position;
      std::optional<std::size_t> best;
      double best_d = 0.0;
      for (std::size_t b = 0; b < agents_.size(); ++b) {
        if (!can_accept_from_node(b) || !viable(node_device(n), agent_device(b))) continue;
        const double d = distance(agents_[b].position, dest);
        if (!best || d < best_d) best = b, best_d = d;
      }
      if (!best) continue;
      node.sent = true;
      const bool ok = attempt(node_device(n), agent_device(*best));
      if (ok) {
        node.queue.pop_front();
        give_to_agent(pid, *best);
      }
      if (trace) trace_transfer(*trace, pid, Holder{Holder::Kind::Node, static_cast<std::uint32_t>(n)},
                                Holder{Holder::Kind::Agent, static_cast<std::uint32_t>(*best)}, ok);
    }
    for (std::size_t a = 0; a < agents_.size(); ++a) {
      auto choice = next_hop(a);
      if (!choice) {
        if (const auto sw = find_swap(a)) exchange(a, *sw, trace);
        continue;
      }
      auto& me = agents_[a];
      me.sent = true;
      const auto [pid, to] = *choice;
      const bool ok = attempt(agent_device(a), to);
      if (ok) {
        me.buffer.erase(std::find(me.buffer.begin(), me.buffer.end(), pid));
        if (to < agents_.size()) {
          give_to_agent(pid, to);
        } else {
          deliver(pid);
        }
      }
      if (trace) {
        const Holder dst = to < agents_.size() ? Holder{Holder::Kind::Agent, static_cast<std::uint32_t>(to)}
                                               : Holder{Holder::Kind::Node, static_cast<std::uint32_t>(to - agents_.size())};
        trace_transfer(*trace, pid, Holder{Holder::Kind::Agent, static_cast<std::uint32_t>(a)}, dst, ok);
      }
    }
  }

  // Greedy geographic choice: oldest routable packet, destination first, else the
  // viable neighbour strictly closer to the destination that is closest to it.
  std::optional<std::pair<PacketId, std::size_t>> next_hop(std::size_t a) const {
    const auto& me = agents_[a];
    if (me.sent) return std::nullopt;
    const std::size_t self = agent_device(a);
    for (const PacketId pid : me.buffer) {
      const auto& p = packets_[pid];
      if (p.arrived == step_) continue;
      const std::size_t dest_dev = node_device(p.destination);
      if (viable(self, dest_dev)) return std::pair{pid, dest_dev};
      const Vec2 dest = nodes_[p.destination].position;
      const double mine = distance(me.position, dest);
      std::optional<std::size_t> best;
      double best_d = mine;
      for (std::size_t b = 0; b < agents_.size(); ++b) {
        if (b == a || !can_accept(b) || !viable(self, agent_device(b))) continue;
        const double d = distance(agents_[b].position, dest);
        if (d < best_d) best = b, best_d = d;
      }
      if (best) return std::pair{pid, agent_device(*best)};
    }
    return std::nullopt;
  }

  struct Swap {
    PacketId mine;
    std::size_t peer;
    PacketId theirs;
  };

  // Two full neighbours each holding a packet the other is closer to trade them,
  // which breaks head-on deadlocks between opposing flows.
  std::optional<Swap> find_swap(std::size_t a) const {
    const auto& me = agents_[a];
    if (me.sent || me.received) return std::nullopt;
    const std::size_t self = agent_device(a);
    for (const PacketId pid : me.buffer) {
      const auto& p = packets_[pid];
      if (p.arrived == step_) continue;
      const Vec2 dest = nodes_[p.destination].position;
      const double mine = distance(me.position, dest);
      std::optional<Swap> best;
      double best_d = mine;
      for (std::size_t b = 0; b < agents_.size(); ++b) {
        const auto& peer = agents_[b];
        if (b == a || peer.sent || peer.received || peer.buffer.size() < params_.agent.buffer_capacity) continue;
        if (!viable(self, agent_device(b)) || !viable(agent_device(b), self)) continue;
        const double d = distance(peer.position, dest);
        if (!(d < best_d)) continue;
        for (const PacketId qid : peer.buffer) {
          const auto& q = packets_[qid];
          if (q.arrived == step_) continue;
          const Vec2 qdest = nodes_[q.destination].position;
          if (distance(me.position, qdest) < distance(peer.position, qdest)) {
            best = Swap{pid, b, qid};
            best_d = d;
            break;
          }
        }
      }
      if (best) return best;
    }
    return std::nullopt;
  }

  void exchange(std::size_t a, const Swap& sw, std::ostream* trace) {
    auto& me = agents_[a];
    auto& peer = agents_[sw.peer];
    me.sent = peer.sent = true;
    const bool ok = attempt(agent_device(a), agent_device(sw.peer)) && attempt(agent_device(sw.peer), agent_device(a));
    if (ok) {
      me.buffer.erase(std::find(me.buffer.begin(), me.buffer.end(), sw.mine));
      peer.buffer.erase(std::find(peer.buffer.begin(), peer.buffer.end(), sw.theirs));
      give_to_agent(sw.mine, sw.peer);
      give_to_agent(sw.theirs, a);
    }
    if (trace) {
      const Holder ha{Holder::Kind::Agent, static_cast<std::uint32_t>(a)};
      const Holder hb{Holder::Kind::Agent, static_cast<std::uint32_t>(sw.peer)};
      trace_transfer(*trace, sw.mine, ha, hb, ok);
      trace_transfer(*trace, sw.theirs, hb, ha, ok);
    }
  }

  // Sub-steps 8 and 9, then the clock advances.
  void finish_step(std::ostream* trace = nullptr) {
    if (stage_delivered_ >= quota_[stage_] && stage_ + 1 < spec_.stages) {
      ++stage_;
      stage_delivered_ = 0;
      for (auto& n : nodes_) n.waypoint = 0;
      open_stage();
      if (trace) {
        nlohmann::json j{{"event", "stage"}, {"step", step_}, {"stage", stage_}};
        *trace << j.dump() << '\n';
      }
    }
    hash_state(digest_);
    ++step_;
    if (delivered_ == total_packets_) {
      terminated_ = true;
      completed_at_ = step_;
    } else if (step_ >= max_steps_) {
      terminated_ = true;
    }
  }

  // Digest of the trajectory so far.
  std::uint64_t run_digest() const noexcept { return digest_.digest(); }

  std::uint64_t state_digest() const {
    io::Fnv1a h;
    hash_state(h);
    return h.digest();
  }

  std::uint64_t steps_taken() const noexcept { return completed_at_.value_or(max_steps_); }

  double fitness_value() const { return fitness(delivered_, total_packets_, steps_taken(), max_steps_); }

  bool can_accept(std::size_t agent) const noexcept {
    const auto& b = agents_[agent];
    return !b.received && b.buffer.size() < params_.agent.buffer_capacity;
  }

  // Nodes leave one slot free so packets moving in opposite directions can still pass.
  bool can_accept_from_node(std::size_t agent) const noexcept {
    return can_accept(agent) && agents_[agent].buffer.size() + 1 < params_.agent.buffer_capacity;
  }

  // Nodes with packets waiting to be sourced.
  bool node_pending(std::size_t n) const noexcept { return !nodes_[n].queue.empty(); }

 private:
  std::size_t device_count() const noexcept { return agents_.size() + nodes_.size(); }

  double has_packets(std::size_t d) const noexcept {
    return d < agents_.size() ? !agents_[d].buffer.empty() : !nodes_[d - agents_.size()].queue.empty();
  }
  double is_full(std::size_t d) const noexcept {
    return d < agents_.size() ? agents_[d].buffer.size() >= params_.agent.buffer_capacity : 0.0;
  }

  std::optional<std::size_t> first_blocking_wall(Vec2 from, Vec2 to) const {
    std::optional<std::size_t> best;
    double best_d = 0.0;
    constexpr double kClearance = 0.01;
    for (std::size_t w = 0; w < walls_.size(); ++w) {
      const auto& s = walls_[w].segment;
      if (!intersects(Segment{from, to}, s) && distance(s, to) >= kClearance) continue;
      const double d = distance(s, from);
      if (!best || d < best_d) best = w, best_d = d;
    }
    return best;
  }

  void place_agents(std::mt19937_64 rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Vec2 c = spec_.agent_start;
    const double r = params_.agent.start_radius;
    for (std::size_t i = 0; i < params_.agent.count; ++i) {
      Vec2 p;
      for (int tries = 0;; ++tries) {
        const double rad = r * std::sqrt(u(rng)), th = 2.0 * M_PI * u(rng);
        p = c + Vec2{rad * std::cos(th), rad * std::sin(th)};
        if (tries > 10000) {
          p = c;
          break;
        }
        if (!spec_.in_arena(p)) continue;
        bool clear = true;
        for (const auto& w : walls_)
          if (intersects(Segment{c, p}, w.segment) || distance(w.segment, p) < 0.5) clear = false;
        if (clear) break;
      }
      AgentState a;
      a.position = p;
      agents_.push_back(std::move(a));
    }
  }

  // Creates this stage's packets: origins by out% (largest remainder), destinations drawn by in%.
  void open_stage() {
    const std::uint64_t count = quota_[stage_];
    const std::size_t n = nodes_.size();
    std::vector<std::uint64_t> per(n, 0);
    std::vector<std::pair<double, std::size_t>> rem;
    std::uint64_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double exact = static_cast<double>(count) * spec_.nodes[i].stages[stage_].out_pct / 100.0;
      per[i] = static_cast<std::uint64_t>(std::floor(exact));
      assigned += per[i];
      if (spec_.nodes[i].stages[stage_].out_pct > 0.0) rem.push_back({exact - std::floor(exact), i});
    }
    std::stable_sort(rem.begin(), rem.end(), [](auto& x, auto& y) { return x.first > y.first; });
    for (std::size_t k = 0; assigned < count && !rem.empty(); ++k, ++assigned) ++per[rem[k % rem.size()].second];
    // interleave origins so creation order does not favour one node
    std::uint64_t made = 0;
    while (made < count) {
      for (std::size_t i = 0; i < n; ++i) {
        if (per[i] == 0) continue;
        --per[i];
        Packet p;
        p.id = static_cast<PacketId>(packets_.size());
        p.origin = static_cast<std::uint32_t>(i);
        p.destination = draw_destination(i);
        p.created = step_;
        p.holder = Holder{Holder::Kind::Node, static_cast<std::uint32_t>(i)};
        p.arrived = step_;
        nodes_[i].queue.push_back(p.id);
        packets_.push_back(p);
        ++made;
      }
    }
  }

  std::uint32_t draw_destination(std::size_t origin) {
    std::vector<double> w;
    for (std::size_t i = 0; i < nodes_.size(); ++i) w.push_back(i == origin ? 0.0 : spec_.nodes[i].stages[stage_].in_pct);
    if (std::all_of(w.begin(), w.end(), [](double v) { return v <= 0.0; }))
      for (std::size_t i = 0; i < nodes_.size(); ++i) w[i] = i == origin ? 0.0 : 1.0;
    std::discrete_distribution<std::uint32_t> d(w.begin(), w.end());
    return d(traffic_rng_);
  }

  bool attempt(std::size_t from, std::size_t to) {
    const auto& r = params_.radio;
    const double shadow = r.shadow_sigma_db > 0.0 ? std::normal_distribution<double>(0.0, r.shadow_sigma_db)(radio_rng_) : 0.0;
    return mean_rx(from, to) - shadow - in_dbm_[to] >= r.snr_threshold_db;
  }

  void give_to_agent(PacketId pid, std::size_t a) {
    auto& p = packets_[pid];
    p.holder = Holder{Holder::Kind::Agent, static_cast<std::uint32_t>(a)};
    p.arrived = step_;
    agents_[a].buffer.push_back(pid);
    agents_[a].received = true;
  }

  void deliver(PacketId pid) {
    auto& p = packets_[pid];
    p.holder = Holder{Holder::Kind::Node, p.destination};
    p.arrived = step_;
    p.delivered = step_;
    ++delivered_;
    ++stage_delivered_;
  }

  void trace_transfer(std::ostream& out, PacketId pid, Holder from, Holder to, bool ok) const {
    auto name = [](Holder h) { return std::string(h.is_agent() ? "agent" : "node") + ":" + std::to_string(h.index); };
    nlohmann::json j{{"event", "transfer"}, {"step", step_}, {"packet", pid}, {"from", name(from)}, {"to", name(to)}, {"ok", ok}};
    out << j.dump() << '\n';
  }

  void hash_state(io::Fnv1a& h) const {
    h.update_value(step_);
    h.update_value(static_cast<std::uint64_t>(stage_));
    h.update_value(delivered_);
    for (const auto& a : agents_) {
      h.update_value(a.position.x);
      h.update_value(a.position.y);
      h.update_value(static_cast<std::uint8_t>(a.behaviour));
      h.update_value(static_cast<std::uint64_t>(a.buffer.size()));
      for (auto pid : a.buffer) h.update_value(pid);
    }
    for (const auto& n : nodes_) {
      h.update_value(n.position.x);
      h.update_value(n.position.y);
      h.update_value(static_cast<std::uint64_t>(n.queue.size()));
    }
  }

  env::EnvironmentSpec spec_;
  SimParams params_;
  std::uint64_t seed_;
  std::mt19937_64 radio_rng_;
  std::mt19937_64 traffic_rng_;
  std::vector<Wall> walls_;
  std::vector<AgentState> agents_;
  std::vector<NodeState> nodes_;
  std::vector<Packet> packets_;
  std::vector<std::uint64_t> quota_;
  std::vector<double> mean_rx_;
  std::vector<double> in_dbm_;
  std::vector<double> jam_dbm_;
  std::uint64_t total_packets_ = 0;
  std::uint64_t max_steps_ = 0;
  std::uint64_t step_ = 0;
  std::size_t stage_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t stage_delivered_ = 0;
  std::optional<std::uint64_t> completed_at_;
  bool terminated_ = false;
  io::Fnv1a digest_;
};

}  // namespace rhgn::sim
