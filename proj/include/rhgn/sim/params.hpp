#pragma once

#include <charconv>
#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "rhgn/error.hpp"
#include "rhgn/fusion/belief.hpp"
#include "rhgn/io.hpp"
#include "rhgn/sim/radio.hpp"

namespace rhgn::sim {

struct AgentParams {
  std::size_t count = 8;
  double max_speed = 0.022;  // m/step
  std::size_t buffer_capacity = 10;
  std::size_t lidar_rays = 36;
  double lidar_range = 5.0;
  double start_radius = 5.0;
};

struct BehaviourParams {
  double spring_gain = 0.01;
  double lateral_gain = 0.003;
  double separation_distance = 1.0;
  double separation_gain = 0.02;
  double obstacle_range = 2.0;
  double repulsion_k = 0.02;
  double orbit_gain = 0.022;
  double orbit_standoff = 1.5;
  double orbit_radial_gain = 0.02;
  double reverse_fraction = 0.1;
  double rough_sinkward_deg = 60.0;
  // MB-3
  double jam_detect_dbm = -95.0;
  double avoid_radius = 45.0;
  double avoid_gain = 0.01;
  std::uint64_t quiet_steps = 500;
};

struct RunParams {
  std::uint64_t max_steps = 50000;
  double scale_packets = 1.0;
  double scale_steps = 1.0;

  std::uint64_t scaled_packets(std::uint64_t base) const;
  std::uint64_t scaled_steps() const;
};

struct SimParams {
  RadioParams radio;
  AgentParams agent;
  BehaviourParams behaviour;
  fusion::FusionSchedule fusion;
  RunParams run;
  double node_speed = 0.011;  // m/step

  void validate() const;
  std::string to_config() const;
  static SimParams from_config(std::istream& in);
  static SimParams from_file(const std::string& path);
};

inline std::uint64_t RunParams::scaled_packets(std::uint64_t base) const {
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(base) * scale_packets));
}
inline std::uint64_t RunParams::scaled_steps() const {
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(max_steps) * scale_steps));
}

namespace detail {

// Visits every configurable field as (key, reference).
template <class P, class F>
void visit_params(P& p, F&& f) {
  f("radio.exponent", p.radio.exponent);
  f("radio.tx_power_dbm", p.radio.tx_power_dbm);
  f("radio.shadow_sigma_db", p.radio.shadow_sigma_db);
  f("radio.ref_distance_m", p.radio.ref_distance_m);
  f("radio.ref_loss_db", p.radio.ref_loss_db);
  f("radio.noise_floor_dbm", p.radio.noise_floor_dbm);
  f("radio.snr_threshold_db", p.radio.snr_threshold_db);
  f("radio.jammer_power_dbm", p.radio.jammer_power_dbm);
  f("agent.count", p.agent.count);
  f("agent.max_speed", p.agent.max_speed);
  f("agent.buffer_capacity", p.agent.buffer_capacity);
  f("agent.lidar_rays", p.agent.lidar_rays);
  f("agent.lidar_range", p.agent.lidar_range);
  f("agent.start_radius", p.agent.start_radius);
  f("behaviour.spring_gain", p.behaviour.spring_gain);
  f("behaviour.lateral_gain", p.behaviour.lateral_gain);
  f("behaviour.separation_distance", p.behaviour.separation_distance);
  f("behaviour.separation_gain", p.behaviour.separation_gain);
  f("behaviour.obstacle_range", p.behaviour.obstacle_range);
  f("behaviour.repulsion_k", p.behaviour.repulsion_k);
  f("behaviour.orbit_gain", p.behaviour.orbit_gain);
  f("behaviour.orbit_standoff", p.behaviour.orbit_standoff);
  f("behaviour.orbit_radial_gain", p.behaviour.orbit_radial_gain);
  f("behaviour.reverse_fraction", p.behaviour.reverse_fraction);
  f("behaviour.rough_sinkward_deg", p.behaviour.rough_sinkward_deg);
  f("behaviour.jam_detect_dbm", p.behaviour.jam_detect_dbm);
  f("behaviour.avoid_radius", p.behaviour.avoid_radius);
  f("behaviour.avoid_gain", p.behaviour.avoid_gain);
  f("behaviour.quiet_steps", p.behaviour.quiet_steps);
  f("fusion.selection_period", p.fusion.selection_period);
  f("fusion.broadcast_period", p.fusion.broadcast_period);
  f("run.max_steps", p.run.max_steps);
  f("run.scale_packets", p.run.scale_packets);
  f("run.scale_steps", p.run.scale_steps);
  f("node.speed", p.node_speed);
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
void parse_value(std::string_view text, T& out, std::string_view key) {
  const auto r = std::from_chars(text.data(), text.data() + text.size(), out);
  if (r.ec != std::errc{} || r.ptr != text.data() + text.size())
    throw Error(Errc::ParseError, "bad value for " + std::string(key) + ": " + std::string(text));
}

template <class T>
std::string format_value(const T& v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace detail

inline void SimParams::validate() const {
  radio.validate();
  fusion.validate();
  if (agent.count == 0) throw Error(Errc::InvalidArgument, "agent count must be positive");
  if (!(agent.max_speed > 0.0)) throw Error(Errc::InvalidArgument, "max speed must be positive");
  if (agent.buffer_capacity < 2) throw Error(Errc::InvalidArgument, "buffer capacity must be at least 2 (one slot is kept for node pickups)");
  if (agent.lidar_rays == 0 || !(agent.lidar_range > 0.0)) throw Error(Errc::InvalidArgument, "bad lidar");
  if (!(run.scale_packets > 0.0) || !(run.scale_steps > 0.0))
    throw Error(Errc::InvalidArgument, "scale factors must be positive");
  if (run.scaled_steps() == 0) throw Error(Errc::InvalidArgument, "scaled step limit must be positive");
  if (!(node_speed >= 0.0)) throw Error(Errc::InvalidArgument, "node speed must be non-negative");
}

inline std::string SimParams::to_config() const {
  std::ostringstream os;
  detail::visit_params(*this, [&](std::string_view key, const auto& v) { os << key << " = " << detail::format_value(v) << '\n'; });
  return os.str();
}

// Lines are `key = value`; '#' starts a comment; unknown keys are errors.
inline SimParams SimParams::from_config(std::istream& in) {
  SimParams p;
  std::map<std::string, std::function<void(std::string_view)>, std::less<>> setters;
  detail::visit_params(p, [&](std::string_view key, auto& v) {
    setters.emplace(std::string(key), [&v, key](std::string_view text) { detail::parse_value(text, v, key); });
  });
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view s(line);
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = detail::trim(s);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos)
      throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ": expected key = value");
    const auto key = detail::trim(s.substr(0, eq));
    const auto it = setters.find(key);
    if (it == setters.end()) throw Error(Errc::ParseError, "unknown key: " + std::string(key));
    it->second(detail::trim(s.substr(eq + 1)));
  }
  p.validate();
  return p;
}

inline SimParams SimParams::from_file(const std::string& path) {
  const auto bytes = io::read_file(path);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  return from_config(in);
}

}  // namespace rhgn::sim
