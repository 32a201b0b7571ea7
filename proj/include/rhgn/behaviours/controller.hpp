#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "rhgn/classifier/classifier.hpp"
#include "rhgn/error.hpp"
#include "rhgn/types.hpp"

namespace rhgn::behaviours {

enum class ControllerKind { MB1, MB2, MB3, RAND, RHGN };

inline constexpr std::array<ControllerKind, 5> kAllControllers{ControllerKind::MB1, ControllerKind::MB2, ControllerKind::MB3,
                                                               ControllerKind::RAND, ControllerKind::RHGN};

constexpr std::string_view to_string(ControllerKind k) noexcept {
  switch (k) {
    case ControllerKind::MB1: return "MB1";
    case ControllerKind::MB2: return "MB2";
    case ControllerKind::MB3: return "MB3";
    case ControllerKind::RAND: return "RAND";
    case ControllerKind::RHGN: return "RHGN";
  }
  return "?";
}

inline ControllerKind parse_controller(std::string_view s) {
  for (auto k : kAllControllers)
    if (to_string(k) == s) return k;
  throw Error(Errc::InvalidArgument, "unknown controller " + std::string(s));
}

inline std::optional<BehaviourId> fixed_behaviour(ControllerKind k) noexcept {
  switch (k) {
    case ControllerKind::MB1: return BehaviourId::MB1;
    case ControllerKind::MB2: return BehaviourId::MB2;
    case ControllerKind::MB3: return BehaviourId::MB3;
    default: return std::nullopt;
  }
}

// The classifier as the controller sees it, so tests can substitute a stub.
struct TupleSource {
  std::function<classifier::ProbabilityTuple(std::span<const double>)> classify;
  std::vector<BehaviourId> behaviour_map;
  std::vector<std::string> labels;

  std::size_t dim() const noexcept { return behaviour_map.size(); }

  static TupleSource from(std::shared_ptr<const classifier::Classifier> c) {
    if (!c || !c->trained()) throw Error(Errc::Untrained, "RHGN controller needs a trained classifier");
    TupleSource s;
    s.behaviour_map = c->behaviour_map();
    s.labels = c->labels();
    s.classify = [c](std::span<const double> raw) { return c->classify(raw); };
    return s;
  }

  // Always returns the same tuple.
  static TupleSource constant(classifier::ProbabilityTuple t, std::vector<BehaviourId> map, std::vector<std::string> labels) {
    TupleSource s;
    s.behaviour_map = std::move(map);
    s.labels = std::move(labels);
    s.classify = [t = std::move(t)](std::span<const double>) { return t; };
    return s;
  }
};

struct ControllerConfig {
  ControllerKind kind = ControllerKind::MB1;
  std::optional<TupleSource> classifier;  // required for RHGN
};

// RAND's startup draw, from its own stream so other subsystems are untouched.
inline BehaviourId rand_draw(std::mt19937_64 rng) {
  return static_cast<BehaviourId>(std::uniform_int_distribution<int>(1, 3)(rng));
}

}  // namespace rhgn::behaviours
