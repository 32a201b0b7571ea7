#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rhgn/classifier/probability.hpp"
#include "rhgn/error.hpp"
#include "rhgn/types.hpp"

namespace rhgn::fusion {

using classifier::ProbabilityTuple;

struct FusionSchedule {
  std::uint64_t selection_period = 500;
  std::uint64_t broadcast_period = 10;

  void validate() const {
    if (selection_period == 0 || broadcast_period == 0 || selection_period % broadcast_period != 0)
      throw Error(Errc::InvalidArgument, "broadcast period must divide the selection period");
  }
  bool selects_at(std::uint64_t step) const noexcept { return step > 0 && step % selection_period == 0; }
  bool broadcasts_at(std::uint64_t step) const noexcept { return step % broadcast_period == 0; }
};

// Origin of a sample: LOCAL, or the agent it was received from.
struct Origin {
  static constexpr std::int32_t kLocal = -1;
  std::int32_t agent = kLocal;

  bool local() const noexcept { return agent == kLocal; }
  friend bool operator==(const Origin&, const Origin&) = default;
};

struct Sample {
  ProbabilityTuple tuple;
  Origin origin;
  std::uint64_t step = 0;
};

struct Selection {
  std::size_t env_index = 0;
  BehaviourId behaviour = BehaviourId::MB1;
  ProbabilityTuple fused;
};

class BeliefCollection {
 public:
  explicit BeliefCollection(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw Error(Errc::DimensionMismatch, "zero-dimensional belief");
  }

  std::size_t size() const noexcept { return samples_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return samples_.empty(); }
  const std::vector<Sample>& samples() const noexcept { return samples_; }

  void record_local(std::span<const double> t, std::uint64_t step) { record(t, Origin{}, step); }

  void record_remote(std::span<const double> t, std::int32_t from_agent, std::uint64_t step) {
    record(t, Origin{from_agent}, step);
  }

  // Mean of LOCAL samples recorded at steps >= since_step.
  ProbabilityTuple make_broadcast(std::uint64_t since_step) const {
    classifier::TupleAccumulator acc(dim_);
    for (auto it = samples_.rbegin(); it != samples_.rend() && it->step >= since_step; ++it)
      if (it->origin.local()) acc.add(it->tuple);
    if (acc.count() == 0) throw Error(Errc::NothingToShare, "no local samples to broadcast");
    return acc.mean();
  }

  // Equal-weight mean over every sample, LOCAL or REMOTE.
  ProbabilityTuple fused() const {
    classifier::TupleAccumulator acc(dim_);
    for (const auto& s : samples_) acc.add(s.tuple);
    return acc.mean();
  }

  void clear() noexcept { samples_.clear(); }

 private:
  void record(std::span<const double> t, Origin origin, std::uint64_t step) {
    if (t.size() != dim_) throw Error(Errc::DimensionMismatch, "tuple dimension differs from the collection");
    samples_.push_back(Sample{ProbabilityTuple(t.begin(), t.end()), origin, step});
  }

  std::vector<Sample> samples_;
  std::size_t dim_;
};

inline Selection fuse_and_select(const BeliefCollection& c, std::span<const BehaviourId> behaviour_map) {
  if (c.empty()) throw Error(Errc::EmptyCollection, "nothing to fuse");
  if (behaviour_map.size() != c.dim()) throw Error(Errc::DimensionMismatch, "behaviour map size differs");
  Selection s;
  s.fused = c.fused();
  s.env_index = classifier::argmax(s.fused);
  s.behaviour = behaviour_map[s.env_index];
  return s;
}

}  // namespace rhgn::fusion
