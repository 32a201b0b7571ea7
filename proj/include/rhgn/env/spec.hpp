#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "rhgn/error.hpp"
#include "rhgn/io.hpp"
#include "rhgn/sim/geometry.hpp"
#include "rhgn/sim/params.hpp"
#include "rhgn/sim/radio.hpp"

namespace rhgn::env {

using sim::Segment;
using sim::Vec2;
using sim::Wall;

struct NodeStage {
  std::vector<Vec2> waypoints;
  double out_pct = 0.0;
  double in_pct = 0.0;
};

struct NodeSpec {
  std::string name;
  Vec2 start;
  std::vector<NodeStage> stages;  // one per environment stage
};

struct JammerSpec {
  Vec2 position;
  std::vector<bool> active;  // one per environment stage
};

struct EnvironmentSpec {
  std::string label;
  double width = 100.0;
  double height = 100.0;
  std::uint64_t packets = 1000;
  std::size_t stages = 1;
  Vec2 agent_start;
  std::vector<Wall> walls;
  std::vector<JammerSpec> jammers;
  std::vector<NodeSpec> nodes;

  bool in_arena(Vec2 p) const noexcept { return p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= height; }
  void validate() const;
  std::string to_text() const;
  static EnvironmentSpec from_text(std::string_view text);
  std::uint64_t digest() const { return io::fnv1a(to_text()); }
  void save(const std::string& path) const;
  static EnvironmentSpec load(const std::string& path);
};

constexpr double kDemandTolerance = 0.5;

inline void EnvironmentSpec::validate() const {
  auto fail = [&](const std::string& what) { throw Error(Errc::InvalidArgument, label + ": " + what); };
  if (!(width > 0.0) || !(height > 0.0)) fail("arena must have positive size");
  if (stages == 0) fail("at least one stage required");
  if (nodes.size() < 2) fail("at least two nodes required");
  if (!in_arena(agent_start)) fail("agent start outside arena");
  for (const auto& w : walls) {
    if (!in_arena(w.segment.a) || !in_arena(w.segment.b)) fail("wall outside arena");
    if (!(w.attenuation_db >= 0.0)) fail("negative wall attenuation");
  }
  for (const auto& j : jammers) {
    if (!in_arena(j.position)) fail("jammer outside arena");
    if (j.active.size() != stages) fail("jammer stage flags do not match stage count");
  }
  std::vector<bool> busy(nodes.size(), false);
  for (std::size_t s = 0; s < stages; ++s) {
    double out = 0.0, in = 0.0;
    for (std::size_t n = 0; n < nodes.size(); ++n) {
      const auto& node = nodes[n];
      if (node.stages.size() != stages) fail("node " + node.name + " stage count mismatch");
      const auto& st = node.stages[s];
      if (st.out_pct < 0.0 || st.in_pct < 0.0) fail("negative demand");
      out += st.out_pct;
      in += st.in_pct;
      if (st.out_pct > 0.0 || st.in_pct > 0.0) busy[n] = true;
      for (auto p : st.waypoints)
        if (!in_arena(p)) fail("waypoint outside arena");
    }
    if (std::abs(out - 100.0) > kDemandTolerance || std::abs(in - 100.0) > kDemandTolerance)
      fail("stage demands must sum to 100%");
  }
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    if (!in_arena(nodes[n].start)) fail("node outside arena");
    if (!busy[n]) fail("node " + nodes[n].name + " is idle in every stage");
    for (std::size_t m = 0; m < n; ++m)
      if (nodes[m].name == nodes[n].name) fail("duplicate node name");
  }
}

namespace detail {

inline std::string num(double v) { return sim::detail::format_value(v); }

inline double parse_num(const std::string& tok) {
  double v = 0.0;
  sim::detail::parse_value(tok, v, "environment field");
  if (!std::isfinite(v)) throw Error(Errc::ParseError, "non-finite number in environment");
  return v;
}

inline std::size_t parse_index(const std::string& tok) {
  std::size_t v = 0;
  sim::detail::parse_value(tok, v, "environment index");
  return v;
}

}  // namespace detail

// Canonical text: fixed section order, shortest round-trip numbers.
inline std::string EnvironmentSpec::to_text() const {
  using detail::num;
  std::ostringstream os;
  os << "environment 1\n";
  os << "label " << label << '\n';
  os << "arena " << num(width) << ' ' << num(height) << '\n';
  os << "packets " << packets << '\n';
  os << "stages " << stages << '\n';
  os << "agent_start " << num(agent_start.x) << ' ' << num(agent_start.y) << '\n';
  for (const auto& w : walls)
    os << "wall " << num(w.segment.a.x) << ' ' << num(w.segment.a.y) << ' ' << num(w.segment.b.x) << ' '
       << num(w.segment.b.y) << ' ' << num(w.attenuation_db) << '\n';
  for (const auto& j : jammers) {
    os << "jammer " << num(j.position.x) << ' ' << num(j.position.y);
    for (bool a : j.active) os << ' ' << (a ? 1 : 0);
    os << '\n';
  }
  for (const auto& n : nodes) {
    os << "node " << n.name << ' ' << num(n.start.x) << ' ' << num(n.start.y) << '\n';
    for (std::size_t s = 0; s < n.stages.size(); ++s) {
      const auto& st = n.stages[s];
      os << "demand " << n.name << ' ' << s << ' ' << num(st.out_pct) << ' ' << num(st.in_pct) << '\n';
      for (auto p : st.waypoints) os << "waypoint " << n.name << ' ' << s << ' ' << num(p.x) << ' ' << num(p.y) << '\n';
    }
  }
  return os.str();
}

inline EnvironmentSpec EnvironmentSpec::from_text(std::string_view text) {
  EnvironmentSpec e;
  e.jammers.clear();
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  bool header = false, have_stages = false;
  auto node_named = [&](const std::string& name) -> NodeSpec& {
    for (auto& n : e.nodes)
      if (n.name == name) return n;
    throw Error(Errc::ParseError, "unknown node " + name);
  };
  auto stage_of = [&](NodeSpec& n, const std::string& tok) -> NodeStage& {
    const auto s = detail::parse_index(tok);
    if (s >= e.stages) throw Error(Errc::ParseError, "stage index out of range");
    return n.stages[s];
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    auto need = [&](std::size_t n) {
      if (tok.size() != n)
        throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ": wrong field count for " + tok[0]);
    };
    const auto& key = tok[0];
    if (!header) {
      if (key != "environment" || tok.size() != 2 || tok[1] != "1")
        throw Error(Errc::ParseError, "missing 'environment 1' header");
      header = true;
    } else if (key == "label") {
      need(2);
      e.label = tok[1];
    } else if (key == "arena") {
      need(3);
      e.width = detail::parse_num(tok[1]);
      e.height = detail::parse_num(tok[2]);
    } else if (key == "packets") {
      need(2);
      e.packets = detail::parse_index(tok[1]);
    } else if (key == "stages") {
      need(2);
      if (have_stages || !e.nodes.empty() || !e.jammers.empty())
        throw Error(Errc::ParseError, "stages must precede nodes and jammers");
      e.stages = detail::parse_index(tok[1]);
      have_stages = true;
    } else if (key == "agent_start") {
      need(3);
      e.agent_start = {detail::parse_num(tok[1]), detail::parse_num(tok[2])};
    } else if (key == "wall") {
      need(6);
      e.walls.push_back({{{detail::parse_num(tok[1]), detail::parse_num(tok[2])},
                          {detail::parse_num(tok[3]), detail::parse_num(tok[4])}},
                         detail::parse_num(tok[5])});
    } else if (key == "jammer") {
      need(3 + e.stages);
      JammerSpec j{{detail::parse_num(tok[1]), detail::parse_num(tok[2])}, {}};
      for (std::size_t s = 0; s < e.stages; ++s) {
        if (tok[3 + s] != "0" && tok[3 + s] != "1") throw Error(Errc::ParseError, "jammer flag must be 0 or 1");
        j.active.push_back(tok[3 + s] == "1");
      }
      e.jammers.push_back(std::move(j));
    } else if (key == "node") {
      need(4);
      e.nodes.push_back({tok[1], {detail::parse_num(tok[2]), detail::parse_num(tok[3])},
                         std::vector<NodeStage>(e.stages)});
    } else if (key == "demand") {
      need(5);
      auto& st = stage_of(node_named(tok[1]), tok[2]);
      st.out_pct = detail::parse_num(tok[3]);
      st.in_pct = detail::parse_num(tok[4]);
    } else if (key == "waypoint") {
      need(5);
      stage_of(node_named(tok[1]), tok[2]).waypoints.push_back({detail::parse_num(tok[3]), detail::parse_num(tok[4])});
    } else {
      throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ": unknown key " + key);
    }
  }
  if (!header) throw Error(Errc::ParseError, "empty environment file");
  e.validate();
  return e;
}

inline void EnvironmentSpec::save(const std::string& path) const {
  const auto text = to_text();
  io::write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

inline EnvironmentSpec EnvironmentSpec::load(const std::string& path) {
  const auto bytes = io::read_file(path);
  return from_text({reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

// Radius where a jammer's mean received power falls to the threshold.
inline double jamming_range(const sim::RadioParams& r, double threshold_dbm = -71.25) {
  return r.ref_distance_m * std::pow(10.0, (r.jammer_power_dbm - r.ref_loss_db - threshold_dbm) / (10.0 * r.exponent));
}

}  // namespace rhgn::env
