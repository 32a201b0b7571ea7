#pragma once

#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "rhgn/env/spec.hpp"

namespace rhgn::env {

inline constexpr std::array<std::string_view, 8> kDesignedIds{"1.1", "1.2", "1.3", "2.1", "2.2", "2.3", "3.1", "3.2"};
inline constexpr std::array<std::string_view, 6> kTrainingIds{"1.1", "1.2", "1.3", "2.1", "2.2", "2.3"};

namespace detail {

constexpr double kThird = 100.0 / 3.0;

inline NodeSpec node(std::string name, Vec2 at, double out, double in) {
  return {std::move(name), at, {NodeStage{{}, out, in}}};
}

// Source and sink on y = 50 (60 m apart by default); agents start at the source.
inline EnvironmentSpec corridor(std::string label, double sink_x = 80.0) {
  EnvironmentSpec e;
  e.label = std::move(label);
  e.width = 100.0;
  e.height = 100.0;
  e.agent_start = {20.0, 50.0};
  e.nodes = {node("A", {20.0, 50.0}, 100.0, 0.0), node("B", {sink_x, 50.0}, 0.0, 100.0)};
  return e;
}

inline void add_thin_walls(EnvironmentSpec& e, double attenuation) {
  for (double x : {35.0, 50.0, 65.0}) e.walls.push_back({{{x, 40.0}, {x, 60.0}}, attenuation});
}

// 20x20 m box around the source, 2 m opening facing the sink.
inline void add_box(EnvironmentSpec& e) {
  constexpr double a = 100.0;
  e.walls.push_back({{{10.0, 40.0}, {10.0, 60.0}}, a});
  e.walls.push_back({{{10.0, 60.0}, {30.0, 60.0}}, a});
  e.walls.push_back({{{10.0, 40.0}, {30.0, 40.0}}, a});
  e.walls.push_back({{{30.0, 40.0}, {30.0, 49.0}}, a});
  e.walls.push_back({{{30.0, 51.0}, {30.0, 60.0}}, a});
}

// Equilateral triangle, edge 100 m, centroid at the arena centre.
inline EnvironmentSpec triangle(std::string label, double out_a, double in_a, double out_b, double in_b, double out_c,
                                double in_c) {
  EnvironmentSpec e;
  e.label = std::move(label);
  e.width = 120.0;
  e.height = 130.0;
  const Vec2 centre{60.0, 65.0};
  const double circum = 100.0 / std::sqrt(3.0);
  e.agent_start = centre;
  e.nodes = {node("A", {centre.x - 50.0, centre.y - circum / 2.0}, out_a, in_a),
             node("B", {centre.x + 50.0, centre.y - circum / 2.0}, out_b, in_b),
             node("C", {centre.x, centre.y + circum}, out_c, in_c)};
  e.jammers.push_back({centre, {false}});
  return e;
}

}  // namespace detail

inline EnvironmentSpec designed_env(std::string_view id) {
  using namespace detail;
  EnvironmentSpec e;
  if (id == "1.1") {
    e = corridor("1.1");
    add_thin_walls(e, 5.0);
  } else if (id == "1.2") {
    e = corridor("1.2");
    add_thin_walls(e, 100.0);
  } else if (id == "1.3") {
    e = corridor("1.3", 90.0);  // opening out of direct range of the sink
    add_box(e);
  } else if (id == "2.1") {
    e = triangle("2.1", 100.0, 0.0, 0.0, 50.0, 0.0, 50.0);
  } else if (id == "2.2") {
    e = triangle("2.2", kThird, kThird, kThird, kThird, kThird, kThird);
  } else if (id == "2.3") {
    e = triangle("2.3", kThird, kThird, kThird, kThird, kThird, kThird);
    e.jammers.front().active = {true};
  } else if (id == "3.1") {
    e = corridor("3.1");
    add_box(e);
    add_thin_walls(e, 100.0);
  } else if (id == "3.2") {
    e = triangle("3.2", kThird, kThird, kThird, kThird, kThird, kThird);
    const Vec2 a = e.nodes[0].start, b = e.nodes[1].start;
    e.jammers.front() = {{(a.x + b.x) / 2.0, (a.y + b.y) / 2.0}, {true}};
  } else {
    throw Error(Errc::UnknownId, "unknown designed environment " + std::string(id));
  }
  e.validate();
  return e;
}

inline bool is_training_env(std::string_view id) noexcept {
  for (auto t : kTrainingIds)
    if (t == id) return true;
  return false;
}

inline std::string designed_env_path(std::string_view dir, std::string_view id) {
  return std::string(dir) + "/" + std::string(id) + ".env";
}

}  // namespace rhgn::env
