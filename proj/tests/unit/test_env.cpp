#include <gtest/gtest.h>

#include <filesystem>

#include "rhgn/env/catalog.hpp"
#include "rhgn/env/generator.hpp"
#include "rhgn/harness/experiment.hpp"

using namespace rhgn;
using namespace rhgn::env;

TEST(Designed, AllIdsValidate) {
  for (auto id : kDesignedIds) {
    const auto e = designed_env(id);
    EXPECT_EQ(e.label, id);
    EXPECT_EQ(e.packets, 1000u);
    EXPECT_NO_THROW(e.validate());
  }
  EXPECT_THROW(designed_env("4.1"), Error);
}

TEST(Designed, JammerOnlyWhereExpected) {
  for (auto id : kDesignedIds) {
    const auto e = designed_env(id);
    const bool active = std::any_of(e.jammers.begin(), e.jammers.end(), [](const JammerSpec& j) { return j.active[0]; });
    EXPECT_EQ(active, id == "2.3" || id == "3.2") << id;
  }
}

TEST(Designed, TriangleDemands) {
  const auto e = designed_env("2.1");
  ASSERT_EQ(e.nodes.size(), 3u);
  EXPECT_EQ(e.nodes[0].stages[0].out_pct, 100.0);
  EXPECT_EQ(e.nodes[0].stages[0].in_pct, 0.0);
  for (std::size_t n : {1, 2}) {
    EXPECT_EQ(e.nodes[n].stages[0].out_pct, 0.0);
    EXPECT_EQ(e.nodes[n].stages[0].in_pct, 50.0);
  }
  const auto a = e.nodes[0].start, b = e.nodes[1].start, c = e.nodes[2].start;
  EXPECT_NEAR(sim::distance(a, b), 100.0, 1e-9);
  EXPECT_NEAR(sim::distance(b, c), 100.0, 1e-9);
  EXPECT_NEAR(sim::distance(c, a), 100.0, 1e-9);
}

TEST(Designed, WallAttenuation) {
  for (const auto& w : designed_env("1.1").walls) EXPECT_EQ(w.attenuation_db, 5.0);
  for (const auto& w : designed_env("1.2").walls) EXPECT_EQ(w.attenuation_db, 100.0);
  EXPECT_EQ(designed_env("1.1").walls.size(), 3u);
}

TEST(Designed, SourceSinkSpacing) {
  const auto e = designed_env("1.1");
  EXPECT_NEAR(sim::distance(e.nodes[0].start, e.nodes[1].start), 60.0, 1e-12);
}

TEST(Designed, BoxHasTwoMetreOpening) {
  const auto e = designed_env("1.3");
  const Vec2 inside{20.0, 50.0};
  ASSERT_EQ(e.walls.size(), 5u);
  // Straight rays out of the box are blocked except through the gap.
  auto escapes = [&](Vec2 to) {
    for (const auto& w : e.walls)
      if (sim::intersects(Segment{inside, to}, w.segment)) return false;
    return true;
  };
  EXPECT_TRUE(escapes({40.0, 50.0}));
  EXPECT_FALSE(escapes({40.0, 52.5}));
  EXPECT_FALSE(escapes({40.0, 47.5}));
  EXPECT_FALSE(escapes({20.0, 70.0}));
  EXPECT_FALSE(escapes({0.0, 50.0}));
}

TEST(Designed, ThirdClassCombinesFirstTwo) {
  const auto e31 = designed_env("3.1");
  EXPECT_EQ(e31.walls.size(), designed_env("1.2").walls.size() + designed_env("1.3").walls.size());
  const auto e32 = designed_env("3.2");
  const Vec2 mid = (e32.nodes[0].start + e32.nodes[1].start) * 0.5;
  EXPECT_EQ(e32.jammers.front().position, mid);
}

TEST(Designed, DataFilesMatchCatalog) {
  for (auto id : kDesignedIds) {
    const auto path = designed_env_path(std::string(RHGN_DATA_DIR) + "/environments", id);
    ASSERT_TRUE(std::filesystem::exists(path)) << path;
    EXPECT_EQ(EnvironmentSpec::load(path).to_text(), designed_env(id).to_text()) << id;
  }
}

TEST(Spec, TextRoundTrip) {
  for (auto id : kDesignedIds) {
    const auto e = designed_env(id);
    EXPECT_EQ(EnvironmentSpec::from_text(e.to_text()).to_text(), e.to_text());
  }
  const auto g = generate_env({}, 17);
  EXPECT_EQ(EnvironmentSpec::from_text(g.to_text()).digest(), g.digest());
}

TEST(Spec, RejectsBadDemands) {
  auto e = designed_env("2.2");
  e.nodes[0].stages[0].out_pct = 50.0;
  EXPECT_THROW(e.validate(), Error);
  e = designed_env("2.2");
  e.nodes.resize(1);
  EXPECT_THROW(e.validate(), Error);
  EXPECT_THROW(EnvironmentSpec::from_text("environment 1\nlabel x\nbogus 1\n"), Error);
}

TEST(Generator, Deterministic) {
  GeneratorConfig cfg;
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_EQ(generate_env(cfg, s).to_text(), generate_env(cfg, s).to_text());
  EXPECT_NE(generate_env(cfg, 1).to_text(), generate_env(cfg, 2).to_text());
}

// 1000 generated specs: demand sums, no idle node, obstacles clear of every path,
// jammer at the start centroid and out of range of every path.
TEST(Generator, PropertiesOverThousandSeeds) {
  GeneratorConfig cfg;
  const double jam_range = jamming_range(cfg.radio);
  std::array<std::size_t, 5> node_hist{}, stage_hist{};
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto e = generate_env(cfg, seed);
    ++node_hist.at(e.nodes.size());
    ++stage_hist.at(e.stages);
    for (std::size_t s = 0; s < e.stages; ++s) {
      double out = 0.0, in = 0.0;
      for (const auto& n : e.nodes) out += n.stages[s].out_pct, in += n.stages[s].in_pct;
      ASSERT_NEAR(out, 100.0, 0.5);
      ASSERT_NEAR(in, 100.0, 0.5);
    }
    for (const auto& n : e.nodes) {
      bool busy = false;
      for (const auto& st : n.stages) busy = busy || st.out_pct > 0.0 || st.in_pct > 0.0;
      ASSERT_TRUE(busy) << "seed " << seed << " node " << n.name;
    }
    Vec2 centroid{};
    for (const auto& n : e.nodes) centroid += n.start;
    centroid *= 1.0 / static_cast<double>(e.nodes.size());
    ASSERT_EQ(e.jammers.size(), 1u);
    EXPECT_NEAR(sim::distance(e.jammers[0].position, centroid), 0.0, 1e-9);
    for (const auto& n : e.nodes)
      for (const auto& path : node_paths(n)) {
        ASSERT_GT(sim::distance(path, centroid), jam_range) << "seed " << seed;
        for (const auto& w : e.walls) ASSERT_GE(sim::segment_distance(w.segment, path), cfg.path_clearance) << "seed " << seed;
      }
  }
  for (std::size_t n : {2, 3, 4}) EXPECT_GT(node_hist[n], 200u);
  for (std::size_t s : {1, 2, 3}) EXPECT_GT(stage_hist[s], 200u);
}

TEST(Generator, JammingRangeMeetsThreshold) {
  const sim::RadioParams r;
  const double d = jamming_range(r, -80.0);
  EXPECT_NEAR(sim::mean_received(r, r.jammer_power_dbm, {0, 0}, {d, 0}, {}), -80.0, 1e-9);
}

TEST(Generator, ResolveIds) {
  EXPECT_EQ(harness::resolve_env("gen-5").to_text(), generate_env({}, 5).to_text());
  EXPECT_EQ(harness::resolve_env("2.3").label, "2.3");
  EXPECT_THROW(harness::resolve_env("gen-x"), Error);
  EXPECT_THROW(harness::resolve_env("nope"), Error);
}

TEST(Generator, RejectsBadConfig) {
  GeneratorConfig cfg;
  cfg.node_counts = {1};
  EXPECT_THROW(generate_env(cfg, 0), Error);
  cfg = {};
  cfg.stage_counts.clear();
  EXPECT_THROW(generate_env(cfg, 0), Error);
}

TEST(Generator, GeneratedEnvRuns) {
  sim::SimParams p;
  p.run.scale_packets = 0.05;
  p.run.scale_steps = 0.02;
  const auto r = sim::run_once(generate_env({}, 3), p, {behaviours::ControllerKind::MB2, std::nullopt}, 1);
  EXPECT_GT(r.t_s, 0u);
  EXPECT_GT(r.fitness, -1.0 - 1e-12);
  EXPECT_LT(r.fitness, 1.0);
}
