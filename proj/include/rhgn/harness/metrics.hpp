#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "rhgn/error.hpp"

namespace rhgn::harness {

// One-versus-all counts; fractional counts are allowed for analytic tuples.
struct Confusion {
  double tp = 0.0, tn = 0.0, fp = 0.0, fn = 0.0;

  double total() const noexcept { return tp + tn + fp + fn; }
};

struct AccuracyF1 {
  double accuracy = 0.0;
  double f1 = 0.0;
};

inline AccuracyF1 accuracy_f1(const Confusion& c) {
  if (c.tp < 0.0 || c.tn < 0.0 || c.fp < 0.0 || c.fn < 0.0)
    throw Error(Errc::DomainError, "negative confusion count");
  if (!(c.total() > 0.0)) throw Error(Errc::EmptyConfusion, "confusion counts are all zero");
  const double f1_den = 2.0 * c.tp + c.fp + c.fn;
  return {(c.tp + c.tn) / c.total(), f1_den > 0.0 ? 2.0 * c.tp / f1_den : 0.0};
}

// Counts for class `positive` from (truth, predicted) pairs.
inline Confusion one_vs_all(std::span<const std::pair<std::size_t, std::size_t>> pairs, std::size_t positive) {
  Confusion c;
  for (auto [truth, pred] : pairs) {
    const bool t = truth == positive, p = pred == positive;
    if (t && p) c.tp += 1.0;
    else if (!t && !p) c.tn += 1.0;
    else if (p) c.fp += 1.0;
    else c.fn += 1.0;
  }
  return c;
}

struct MannWhitney {
  double u = 0.0;  // for the first sample
  double p = 1.0;  // two-sided
  bool exact = false;
};

inline constexpr std::size_t kExactLimit = 8;

namespace detail {

// Midranks (1-based) of the pooled values.
inline std::vector<double> midranks(std::span<const double> pooled) {
  std::vector<std::size_t> order(pooled.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return pooled[x] < pooled[y]; });
  std::vector<double> ranks(pooled.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && pooled[order[j]] == pooled[order[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = r;
    i = j;
  }
  return ranks;
}

// Two-sided p over every split of the pooled ranks into groups of na and nb.
inline double exact_p(std::span<const double> ranks, std::size_t na, double u_obs) {
  const std::size_t n = ranks.size();
  const double mean = static_cast<double>(na) * static_cast<double>(n - na) / 2.0;
  const double dev = std::abs(u_obs - mean) - 1e-9;
  const double offset = static_cast<double>(na) * static_cast<double>(na + 1) / 2.0;
  std::vector<std::size_t> pick(na);
  std::iota(pick.begin(), pick.end(), 0);
  std::uint64_t hits = 0, total = 0;
  for (;;) {
    double r = 0.0;
    for (auto i : pick) r += ranks[i];
    ++total;
    if (std::abs(r - offset - mean) >= dev) ++hits;
    // next combination in lexicographic order
    std::size_t k = na;
    while (k > 0 && pick[k - 1] == n - na + k - 1) --k;
    if (k == 0) break;
    ++pick[k - 1];
    for (std::size_t m = k; m < na; ++m) pick[m] = pick[m - 1] + 1;
  }
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace detail

// Exact enumeration when both samples have at most kExactLimit values, otherwise
// the normal approximation with tie correction.
inline MannWhitney mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(Errc::EmptySample, "Mann-Whitney needs two non-empty samples");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  for (double v : pooled)
    if (!std::isfinite(v)) throw Error(Errc::NonFinite, "non-finite sample value");
  const auto ranks = detail::midranks(pooled);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ra = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(a.size()), 0.0);
  MannWhitney out;
  out.u = ra - na * (na + 1.0) / 2.0;
  if (a.size() <= kExactLimit && b.size() <= kExactLimit) {
    out.exact = true;
    out.p = detail::exact_p(ranks, a.size(), out.u);
    return out;
  }
  const double n = na + nb;
  double ties = 0.0;
  auto sorted = pooled;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    ties += t * t * t - t;
    i = j;
  }
  const double var = na * nb / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
  if (!(var > 0.0)) return out;
  const double z = std::abs(out.u - na * nb / 2.0) / std::sqrt(var);
  out.p = std::clamp(std::erfc(z / std::sqrt(2.0)), std::numeric_limits<double>::min(), 1.0);
  return out;
}

// Fitness spans (-1, 1); slack for non-positive references is a fraction of that width.
inline constexpr double kFitnessRange = 2.0;

inline bool matches_95(double controller, double reference) noexcept {
  if (reference > 0.0) return controller >= 0.95 * reference;
  return controller >= reference - 0.05 * kFitnessRange;
}

// Fraction of aligned instances where the controller matches the reference.
inline double match_rate_95(std::span<const double> controller, std::span<const double> reference) {
  if (controller.size() != reference.size()) throw Error(Errc::MisalignedRuns, "controller and reference runs differ in count");
  if (controller.empty()) throw Error(Errc::EmptySample, "no runs to compare");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < controller.size(); ++i) hits += matches_95(controller[i], reference[i]);
  return static_cast<double>(hits) / static_cast<double>(controller.size());
}

// Per-instance maximum over several aligned reference series.
inline std::vector<double> elementwise_max(std::span<const std::vector<double>> series) {
  if (series.empty()) return {};
  std::vector<double> out = series.front();
  for (const auto& s : series) {
    if (s.size() != out.size()) throw Error(Errc::MisalignedRuns, "reference series differ in length");
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = std::max(out[i], s[i]);
  }
  return out;
}

// One prediction vector per (agent, run); a vector shorter than the longest
// holds its last prediction, since the swarm stops once all packets arrive.
struct PredictionVector {
  std::span<const std::uint8_t> predictions;
  std::size_t truth = 0;
};

inline std::vector<double> error_rate_curve(std::span<const PredictionVector> vectors) {
  std::size_t len = 0;
  for (const auto& v : vectors) len = std::max(len, v.predictions.size());
  std::vector<double> curve(len, 0.0);
  std::size_t used = 0;
  for (const auto& v : vectors) {
    if (v.predictions.empty()) continue;
    ++used;
    for (std::size_t s = 0; s < len; ++s) {
      const auto pred = v.predictions[std::min(s, v.predictions.size() - 1)];
      curve[s] += pred != v.truth ? 1.0 : 0.0;
    }
  }
  if (used > 0)
    for (auto& c : curve) c /= static_cast<double>(used);
  return curve;
}

// Mean of curve[from, to).
inline double window_mean(std::span<const double> curve, std::size_t from, std::size_t to) {
  to = std::min(to, curve.size());
  if (from >= to) throw Error(Errc::EmptySample, "empty window");
  return std::accumulate(curve.begin() + static_cast<std::ptrdiff_t>(from), curve.begin() + static_cast<std::ptrdiff_t>(to), 0.0) /
         static_cast<double>(to - from);
}

// Linear-interpolated quantile, q in [0, 1].
inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw Error(Errc::EmptySample, "quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

struct Summary {
  double q1 = 0.0, median = 0.0, q3 = 0.0;
};

inline Summary summarise(const std::vector<double>& v) { return {quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75)}; }

}  // namespace rhgn::harness
