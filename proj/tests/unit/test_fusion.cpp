#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "rhgn/fusion/belief.hpp"

using namespace rhgn;
using namespace rhgn::fusion;

namespace {

const std::vector<BehaviourId> kMap3{BehaviourId::MB1, BehaviourId::MB2, BehaviourId::MB3};
const std::vector<BehaviourId> kMap2{BehaviourId::MB1, BehaviourId::MB2};

// Concatenate-and-average reference.
std::size_t oracle_select(const std::vector<ProbabilityTuple>& all) {
  std::vector<double> sum(all.front().size(), 0.0);
  for (const auto& t : all)
    for (std::size_t i = 0; i < t.size(); ++i) sum[i] += t[i];
  return static_cast<std::size_t>(std::max_element(sum.begin(), sum.end()) - sum.begin());
}

ProbabilityTuple dyadic_tuple(std::mt19937_64& rng, std::size_t dim) {
  // multiples of 1/8 so sums are exact in any order
  std::vector<int> parts(dim, 0);
  for (int k = 0; k < 8; ++k) ++parts[rng() % dim];
  ProbabilityTuple t(dim);
  for (std::size_t i = 0; i < dim; ++i) t[i] = parts[i] / 8.0;
  return t;
}

}  // namespace

TEST(Schedule, Periods) {
  FusionSchedule s;
  s.validate();
  EXPECT_FALSE(s.selects_at(0));
  EXPECT_FALSE(s.selects_at(499));
  EXPECT_TRUE(s.selects_at(500));
  EXPECT_TRUE(s.selects_at(1000));
  EXPECT_TRUE(s.broadcasts_at(0));
  EXPECT_TRUE(s.broadcasts_at(10));
  EXPECT_FALSE(s.broadcasts_at(11));
  EXPECT_THROW((FusionSchedule{500, 7}.validate()), Error);
}

TEST(Belief, RecordLocal) {
  BeliefCollection c(2);
  c.record_local(ProbabilityTuple{1, 0}, 0);
  EXPECT_EQ(c.size(), 1u);
  for (std::uint64_t s = 1; s < 500; ++s) c.record_local(ProbabilityTuple{1, 0}, s);
  EXPECT_EQ(c.size(), 500u);
  c.clear();
  c.record_local(ProbabilityTuple{1, 0}, 500);
  EXPECT_EQ(c.size(), 1u);
}

TEST(Belief, DimensionMismatch) {
  BeliefCollection c(2);
  try {
    c.record_local(ProbabilityTuple{1, 0, 0}, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DimensionMismatch);
  }
}

TEST(Belief, BroadcastIdentical) {
  BeliefCollection c(2);
  for (std::uint64_t s = 0; s < 10; ++s) c.record_local(ProbabilityTuple{1, 0}, s);
  EXPECT_EQ(c.make_broadcast(0), (ProbabilityTuple{1, 0}));
}

TEST(Belief, BroadcastHalfHalf) {
  BeliefCollection c(2);
  for (std::uint64_t s = 0; s < 5; ++s) c.record_local(ProbabilityTuple{1, 0}, s);
  for (std::uint64_t s = 5; s < 10; ++s) c.record_local(ProbabilityTuple{0, 1}, s);
  EXPECT_EQ(c.make_broadcast(0), (ProbabilityTuple{0.5, 0.5}));
}

TEST(Belief, BroadcastTwoSamples) {
  BeliefCollection c(2);
  c.record_local(ProbabilityTuple{0.6, 0.4}, 0);
  c.record_local(ProbabilityTuple{0.2, 0.8}, 1);
  const auto b = c.make_broadcast(0);
  EXPECT_NEAR(b[0], 0.4, 1e-15);
  EXPECT_NEAR(b[1], 0.6, 1e-15);
}

TEST(Belief, BroadcastOnlyUsesRecentLocalSamples) {
  BeliefCollection c(2);
  c.record_local(ProbabilityTuple{1, 0}, 5);
  c.record_remote(ProbabilityTuple{0, 1}, 3, 12);
  c.record_local(ProbabilityTuple{0.5, 0.5}, 12);
  EXPECT_EQ(c.make_broadcast(10), (ProbabilityTuple{0.5, 0.5}));
}

TEST(Belief, NothingToShare) {
  BeliefCollection c(2);
  c.record_remote(ProbabilityTuple{0, 1}, 1, 3);
  try {
    (void)c.make_broadcast(0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NothingToShare);
  }
}

TEST(Fuse, OneHot) {
  BeliefCollection c(3);
  for (int i = 0; i < 20; ++i) c.record_local(ProbabilityTuple{0, 0, 1}, i);
  const auto s = fuse_and_select(c, kMap3);
  EXPECT_EQ(s.env_index, 2u);
  EXPECT_EQ(s.behaviour, BehaviourId::MB3);
}

TEST(Fuse, LocalAndRemoteIdentical) {
  BeliefCollection c(2);
  for (int i = 0; i < 499; ++i) c.record_local(ProbabilityTuple{0.6, 0.4}, i);
  c.record_remote(ProbabilityTuple{0.6, 0.4}, 4, 499);
  const auto s = fuse_and_select(c, kMap2);
  EXPECT_NEAR(s.fused[0], 0.6, 1e-12);
  EXPECT_EQ(s.env_index, 0u);
}

TEST(Fuse, FourSampleMean) {
  BeliefCollection c(2);
  c.record_local(ProbabilityTuple{0.9, 0.1}, 0);
  for (int a = 1; a <= 3; ++a) c.record_remote(ProbabilityTuple{0.2, 0.8}, a, 0);
  const auto s = fuse_and_select(c, kMap2);
  EXPECT_NEAR(s.fused[0], 0.375, 1e-12);
  EXPECT_NEAR(s.fused[1], 0.625, 1e-12);
  EXPECT_EQ(s.env_index, 1u);
  EXPECT_EQ(s.behaviour, BehaviourId::MB2);
}

TEST(Fuse, EmptyCollection) {
  BeliefCollection c(2);
  try {
    (void)fuse_and_select(c, kMap2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::EmptyCollection);
  }
}

TEST(Fuse, TieGoesToLowestIndex) {
  BeliefCollection c(3);
  c.record_local(ProbabilityTuple{0, 0.5, 0.5}, 0);
  EXPECT_EQ(fuse_and_select(c, kMap3).env_index, 1u);
}

TEST(FuseProperty, PermutationDuplicationAndOracle) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<ProbabilityTuple> samples;
    for (std::size_t i = 0; i < n; ++i) samples.push_back(dyadic_tuple(rng, 3));
    BeliefCollection a(3), b(3), doubled(3);
    for (std::size_t i = 0; i < n; ++i) {
      if (i % 3 == 0) a.record_remote(samples[i], static_cast<std::int32_t>(i % 8), i);
      else a.record_local(samples[i], i);
    }
    auto shuffled = samples;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (std::size_t i = 0; i < n; ++i) b.record_local(shuffled[i], i);
    for (int rep = 0; rep < 2; ++rep)
      for (std::size_t i = 0; i < n; ++i) doubled.record_local(samples[i], i);
    const auto sa = fuse_and_select(a, kMap3);
    EXPECT_EQ(sa.env_index, oracle_select(samples));
    EXPECT_EQ(fuse_and_select(b, kMap3).env_index, sa.env_index);
    EXPECT_EQ(fuse_and_select(doubled, kMap3).env_index, sa.env_index);
  }
}

TEST(FuseProperty, ClearingForgetsEarlierSamples) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    BeliefCollection c(3), fresh(3);
    for (int i = 0; i < 30; ++i) c.record_local(dyadic_tuple(rng, 3), i);
    (void)fuse_and_select(c, kMap3);
    c.clear();
    for (int i = 0; i < 10; ++i) {
      const auto t = dyadic_tuple(rng, 3);
      c.record_local(t, 500 + i);
      fresh.record_local(t, 500 + i);
    }
    EXPECT_EQ(fuse_and_select(c, kMap3).fused, fuse_and_select(fresh, kMap3).fused);
  }
}
