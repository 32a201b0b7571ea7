#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rhgn/env/spec.hpp"

namespace rhgn::env {

struct GeneratorConfig {
  std::vector<std::size_t> node_counts{2, 3, 4};
  std::vector<std::size_t> stage_counts{1, 2, 3};
  double arena = 100.0;
  double margin = 5.0;
  std::size_t min_waypoints = 1;
  std::size_t max_waypoints = 3;
  std::size_t min_obstacles = 2;
  std::size_t max_obstacles = 6;
  double min_obstacle_length = 5.0;
  double max_obstacle_length = 20.0;
  double obstacle_attenuation = 100.0;
  double path_clearance = 2.0;
  std::uint64_t packets = 1000;
  std::size_t max_rejections = 10000;
  sim::RadioParams radio;

  void validate() const {
    if (node_counts.empty() || stage_counts.empty()) throw Error(Errc::InvalidArgument, "empty count set");
    for (auto n : node_counts)
      if (n < 2) throw Error(Errc::InvalidArgument, "need at least two nodes");
    for (auto s : stage_counts)
      if (s < 1) throw Error(Errc::InvalidArgument, "need at least one stage");
    if (!(arena > 2.0 * margin)) throw Error(Errc::InvalidArgument, "arena too small for margin");
    if (min_waypoints < 1 || max_waypoints < min_waypoints || max_obstacles < min_obstacles ||
        max_obstacle_length < min_obstacle_length)
      throw Error(Errc::InvalidArgument, "bad generator ranges");
  }
};

// Every straight segment a node travels along, including stage hand-overs.
inline std::vector<Segment> node_paths(const NodeSpec& n) {
  std::vector<Segment> out;
  Vec2 at = n.start;
  for (const auto& st : n.stages)
    for (auto w : st.waypoints) {
      out.push_back({at, w});
      at = w;
    }
  if (out.empty()) out.push_back({n.start, n.start});
  return out;
}

namespace detail {

// Integer percentages summing to exactly 100, by largest remainder.
inline std::vector<double> to_percent(const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  std::vector<double> out(weights.size(), 0.0);
  std::vector<std::pair<double, std::size_t>> rem;
  int assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = 100.0 * weights[i] / total;
    out[i] = std::floor(exact);
    assigned += static_cast<int>(out[i]);
    if (weights[i] > 0.0) rem.push_back({exact - out[i], i});
  }
  std::stable_sort(rem.begin(), rem.end(), [](auto& a, auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < 100; ++k, ++assigned) out[rem[k % rem.size()].second] += 1.0;
  return out;
}

}  // namespace detail

inline EnvironmentSpec generate_env(const GeneratorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto pick = [&](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };
  auto point = [&] { return Vec2{uniform(cfg.margin, cfg.arena - cfg.margin), uniform(cfg.margin, cfg.arena - cfg.margin)}; };

  EnvironmentSpec e;
  e.label = "gen-" + std::to_string(seed);
  e.width = e.height = cfg.arena;
  e.packets = cfg.packets;
  e.agent_start = {cfg.arena / 2.0, cfg.arena / 2.0};
  const std::size_t n_nodes = cfg.node_counts[pick(0, cfg.node_counts.size() - 1)];
  e.stages = cfg.stage_counts[pick(0, cfg.stage_counts.size() - 1)];
  const double jam_range = jamming_range(cfg.radio);

  std::size_t rejections = 0;
  auto reject = [&] {
    if (++rejections >= cfg.max_rejections)
      throw Error(Errc::GenerationFailure, "generator exceeded rejection budget for seed " + std::to_string(seed));
  };

  // Node placement and paths; the jammer sits at the start centroid, out of range of every path.
  for (;;) {
    e.nodes.clear();
    for (std::size_t n = 0; n < n_nodes; ++n) {
      NodeSpec node{std::string(1, static_cast<char>('A' + n)), point(), std::vector<NodeStage>(e.stages)};
      for (auto& st : node.stages) {
        const auto count = pick(cfg.min_waypoints, cfg.max_waypoints);
        for (std::size_t w = 0; w < count; ++w) st.waypoints.push_back(point());
      }
      e.nodes.push_back(std::move(node));
    }
    Vec2 centroid{};
    for (const auto& n : e.nodes) centroid += n.start;
    centroid *= 1.0 / static_cast<double>(n_nodes);
    bool clear = true;
    for (const auto& n : e.nodes)
      for (const auto& p : node_paths(n))
        if (sim::distance(p, centroid) <= jam_range) clear = false;
    if (clear) {
      e.jammers = {JammerSpec{centroid, {}}};
      break;
    }
    reject();
  }

  // Demands: each stage needs an origin and a distinct destination; no node idle overall.
  for (;;) {
    std::vector<bool> busy(n_nodes, false);
    bool ok = true;
    for (std::size_t s = 0; s < e.stages && ok; ++s) {
      std::vector<double> out(n_nodes), in(n_nodes);
      std::size_t n_out = 0, n_in = 0;
      for (std::size_t n = 0; n < n_nodes; ++n) {
        out[n] = pick(0, 1) ? uniform(0.1, 1.0) : 0.0;
        in[n] = pick(0, 1) ? uniform(0.1, 1.0) : 0.0;
        n_out += out[n] > 0.0;
        n_in += in[n] > 0.0;
      }
      bool routable = n_out > 0 && n_in > 0;
      for (std::size_t n = 0; n < n_nodes && routable; ++n)
        if (out[n] > 0.0 && n_in == 1 && in[n] > 0.0) routable = false;
      if (!routable) {
        ok = false;
        break;
      }
      const auto po = detail::to_percent(out), pi = detail::to_percent(in);
      for (std::size_t n = 0; n < n_nodes; ++n) {
        e.nodes[n].stages[s].out_pct = po[n];
        e.nodes[n].stages[s].in_pct = pi[n];
        if (po[n] > 0.0 || pi[n] > 0.0) busy[n] = true;
      }
    }
    if (ok && std::all_of(busy.begin(), busy.end(), [](bool b) { return b; })) break;
    reject();
  }

  for (std::size_t s = 0; s < e.stages; ++s) e.jammers.front().active.push_back(pick(0, 1) == 1);

  // Axis-aligned obstacles clear of every node path, the jammer and the agent start disc.
  std::vector<Segment> keep_clear;
  for (const auto& n : e.nodes)
    for (const auto& p : node_paths(n)) keep_clear.push_back(p);
  const auto n_obstacles = pick(cfg.min_obstacles, cfg.max_obstacles);
  while (e.walls.size() < n_obstacles) {
    const double len = uniform(cfg.min_obstacle_length, cfg.max_obstacle_length);
    const bool horizontal = pick(0, 1) == 0;
    const Vec2 a = point();
    const Vec2 b = horizontal ? Vec2{a.x + len, a.y} : Vec2{a.x, a.y + len};
    const Segment seg{a, b};
    bool ok = e.in_arena(b);
    for (const auto& p : keep_clear)
      if (ok && sim::segment_distance(seg, p) < cfg.path_clearance) ok = false;
    if (ok && sim::distance(seg, e.agent_start) < 5.0 + cfg.path_clearance) ok = false;
    if (ok && sim::distance(seg, e.jammers.front().position) < cfg.path_clearance) ok = false;
    if (ok) {
      e.walls.push_back({seg, cfg.obstacle_attenuation});
    } else {
      reject();
    }
  }
  e.validate();
  return e;
}

}  // namespace rhgn::env
