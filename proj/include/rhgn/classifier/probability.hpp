#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "rhgn/error.hpp"

namespace rhgn::classifier {

inline constexpr double kTupleTolerance = 1e-9;

// Per-environment match probabilities.
using ProbabilityTuple = std::vector<double>;

inline bool is_valid(std::span<const double> t) noexcept {
  if (t.empty()) return false;
  double sum = 0.0;
  for (double p : t) {
    if (!(p >= 0.0) || !std::isfinite(p)) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= kTupleTolerance;
}

// Lowest index wins ties.
inline std::size_t argmax(std::span<const double> t) {
  if (t.empty()) throw Error(Errc::DimensionMismatch, "argmax of an empty tuple");
  std::size_t best = 0;
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i] > t[best]) best = i;
  return best;
}

inline ProbabilityTuple uniform_tuple(std::size_t dim) {
  if (dim == 0) throw Error(Errc::DimensionMismatch, "zero-dimensional tuple");
  return ProbabilityTuple(dim, 1.0 / static_cast<double>(dim));
}

inline ProbabilityTuple one_hot(std::size_t dim, std::size_t index) {
  if (index >= dim) throw Error(Errc::DimensionMismatch, "one-hot index out of range");
  ProbabilityTuple t(dim, 0.0);
  t[index] = 1.0;
  return t;
}

inline ProbabilityTuple normalise(std::span<const std::uint64_t> counts) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) return uniform_tuple(counts.size());
  ProbabilityTuple t(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i)
    t[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  return t;
}

// Running sum of equally weighted tuples.
class TupleAccumulator {
 public:
  explicit TupleAccumulator(std::size_t dim = 0) : sum_(dim, 0.0) {}

  void add(std::span<const double> t) {
    if (sum_.empty()) sum_.assign(t.size(), 0.0);
    if (t.size() != sum_.size()) throw Error(Errc::DimensionMismatch, "tuple dimension differs");
    for (std::size_t i = 0; i < t.size(); ++i) sum_[i] += t[i];
    ++count_;
  }
  void clear() noexcept {
    std::fill(sum_.begin(), sum_.end(), 0.0);
    count_ = 0;
  }
  std::size_t count() const noexcept { return count_; }
  std::size_t dim() const noexcept { return sum_.size(); }
  const std::vector<double>& sum() const noexcept { return sum_; }

  ProbabilityTuple mean() const {
    if (count_ == 0) throw Error(Errc::EmptyCollection, "mean of no tuples");
    ProbabilityTuple t(sum_.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = sum_[i] / static_cast<double>(count_);
    return t;
  }

 private:
  std::vector<double> sum_;
  std::size_t count_ = 0;
};

inline ProbabilityTuple mean_of(std::span<const ProbabilityTuple> tuples) {
  TupleAccumulator acc;
  for (const auto& t : tuples) acc.add(t);
  return acc.mean();
}

}  // namespace rhgn::classifier
