#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rhgn/env/catalog.hpp"
#include "rhgn/harness/experiment.hpp"
#include "rhgn/sim/simulation.hpp"

using namespace rhgn;
using namespace rhgn::sim;

namespace {

// Reference loss of 40 dB and a 30 dBm jammer, the textbook link budget.
RadioParams textbook_radio() {
  RadioParams r;
  r.ref_loss_db = 40.0;
  r.jammer_power_dbm = 30.0;
  return r;
}

SimParams small_params(double steps = 0.02, double packets = 0.1) {
  SimParams p;
  p.run.scale_steps = steps;
  p.run.scale_packets = packets;
  p.validate();
  return p;
}

// Two nodes far apart, no walls; agents start at the origin node.
env::EnvironmentSpec open_pair(double gap = 80.0) {
  env::EnvironmentSpec e;
  e.label = "open";
  e.agent_start = {10.0, 50.0};
  e.nodes = {{"A", {10.0, 50.0}, {{{}, 100.0, 0.0}}}, {"B", {10.0 + gap, 50.0}, {{{}, 0.0, 100.0}}}};
  e.validate();
  return e;
}

}  // namespace

TEST(Radio, ReferenceDistance) {
  const auto r = textbook_radio();
  EXPECT_DOUBLE_EQ(received_power(r, {0, 0}, {1, 0}, {}, 0.0), -28.0);
}

TEST(Radio, TenMetres) {
  const auto r = textbook_radio();
  EXPECT_NEAR(received_power(r, {0, 0}, {10, 0}, {}, 0.0), -53.0, 1e-12);
}

TEST(Radio, WallCrossingKillsLink) {
  const auto r = textbook_radio();
  const std::vector<Wall> walls{{{{5, -1}, {5, 1}}, 100.0}};
  const double rx = received_power(r, {0, 0}, {10, 0}, walls, 0.0);
  EXPECT_NEAR(rx, -153.0, 1e-12);
  EXPECT_LT(rx, r.noise_floor_dbm);
}

TEST(Radio, NoiseOnlySnr) {
  const auto r = textbook_radio();
  const double snr = received_power(r, {0, 0}, {10, 0}, {}, 0.0) - r.noise_floor_dbm;
  EXPECT_NEAR(snr, 42.0, 1e-12);
  EXPECT_GE(snr, r.snr_threshold_db);
}

TEST(Radio, JammerDominates) {
  const auto r = textbook_radio();
  const double jam = mean_received(r, r.jammer_power_dbm, {0, 0}, {5, 0}, {});
  EXPECT_NEAR(jam, 30.0 - (40.0 + 25.0 * std::log10(5.0)), 1e-12);
  const double interference = mw_to_dbm(dbm_to_mw(r.noise_floor_dbm) + dbm_to_mw(jam));
  const double snr = received_power(r, {0, 0}, {10, 0}, {}, 0.0) - interference;
  EXPECT_NEAR(snr, -25.5, 0.05);
  EXPECT_LT(snr, r.snr_threshold_db);
}

TEST(Radio, CloseRangeClamps) {
  const auto r = textbook_radio();
  EXPECT_DOUBLE_EQ(mean_path_loss(r, 0.1), r.ref_loss_db);
}

TEST(Radio, DbmRoundTrip) {
  for (double v : {-95.0, -28.0, 0.0, 12.0}) EXPECT_NEAR(mw_to_dbm(dbm_to_mw(v)), v, 1e-12);
}

TEST(Fitness, Examples) {
  EXPECT_DOUBLE_EQ(fitness(1000, 1000, 25000, 50000), 0.5);
  EXPECT_NEAR(fitness(300, 1000, 50000, 50000), -0.7, 1e-15);
  EXPECT_DOUBLE_EQ(fitness(1000, 1000, 50000, 50000), 0.0);
}

TEST(Fitness, Domain) {
  EXPECT_THROW(fitness(1, 0, 1, 1), Error);
  EXPECT_THROW(fitness(2, 1, 1, 1), Error);
  EXPECT_THROW(fitness(1, 1, 2, 1), Error);
  EXPECT_THROW(fitness(1, 1, 0, 1), Error);
}

TEST(Params, ConfigRoundTrip) {
  SimParams p;
  p.radio.exponent = 3.0;
  p.agent.count = 5;
  p.behaviour.quiet_steps = 250;
  std::istringstream in(p.to_config());
  const auto q = SimParams::from_config(in);
  EXPECT_EQ(q.to_config(), p.to_config());
}

TEST(Params, Rejects) {
  SimParams p;
  p.agent.buffer_capacity = 1;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.agent.max_speed = 0.0;
  EXPECT_THROW(p.validate(), Error);
  std::istringstream bad("radio.nope = 1\n");
  EXPECT_THROW(SimParams::from_config(bad), Error);
}

TEST(Params, DefaultConfigFileMatchesDefaults) {
  const auto p = SimParams::from_file(std::string(RHGN_DATA_DIR) + "/../config/default.cfg");
  EXPECT_EQ(p.to_config(), SimParams{}.to_config());
}

TEST(Sense, IsolatedAgent) {
  auto p = small_params();
  p.agent.count = 1;
  World w(open_pair(), p, 1);
  w.agents()[0].position = {50.0, 100.0};
  w.refresh_links();
  const auto o = w.sense(0);
  EXPECT_EQ(o[classifier::field::kNeighbourhoodSize], 0.0);
  for (std::size_t f : {classifier::field::kClosestSwarmDistance, classifier::field::kSinkwardSwarmDistance,
                        classifier::field::kClosestNonSwarmDistance})
    EXPECT_EQ(o[f], kSentinelDistance);
  for (std::size_t f : {classifier::field::kClosestSwarmSignal, classifier::field::kClosestNonSwarmSignal})
    EXPECT_EQ(o[f], kSentinelSignal);
  for (std::size_t k = 0; k < 12; ++k) EXPECT_EQ(o[classifier::field::kPacketFlags + k], 0.0);
}

TEST(Sense, NeighbourDistanceRounded) {
  auto p = small_params();
  p.agent.count = 2;
  World w(open_pair(), p, 1);
  w.agents()[0].position = {50.0, 90.0};
  w.agents()[1].position = {50.0 + 3.14, 90.0};
  w.refresh_links();
  EXPECT_DOUBLE_EQ(w.sense(0)[classifier::field::kClosestSwarmDistance], 3.1);
}

TEST(Sense, ConstantHistory) {
  auto p = small_params();
  p.agent.count = 1;
  World w(open_pair(), p, 1);
  w.agents()[0].source = 0;
  w.agents()[0].sink = 1;
  for (int s = 0; s < 1000; ++s) w.record_history();
  const auto o = w.sense(0);
  for (std::size_t k = 0; k < 4; ++k) {
    const std::size_t at = classifier::field::kWindowCounters + 4 * k;
    EXPECT_EQ(o[at], 1.0);
    EXPECT_EQ(o[at + 1], 0.0);
    EXPECT_EQ(o[at + 2], 1.0);
    EXPECT_EQ(o[at + 3], 0.0);
  }
}

TEST(WindowCounter, UniqueAndChanges) {
  WindowCounter c(4);
  for (int v : {1, 1, 2, 2, 3}) c.push(v);
  EXPECT_EQ(c.unique(), 3u);  // window 1,2,2,3
  EXPECT_EQ(c.changes(), 2u);
  for (int k = 0; k < 4; ++k) c.push(3);
  EXPECT_EQ(c.unique(), 1u);
  EXPECT_EQ(c.changes(), 0u);
}

TEST(Step, SelectionSchedule) {
  const auto spec = env::designed_env("1.2");
  const auto map = classifier::default_behaviour_map();
  auto src = behaviours::TupleSource::constant({1, 0, 0, 0, 0, 0}, map, classifier::default_labels());
  Simulation s(spec, small_params(0.2, 0.1), {ControllerKind::RHGN, src}, 3);
  while (s.world().step() < 500) {
    ASSERT_FALSE(s.world().terminated());
    s.step();
  }
  EXPECT_TRUE(s.selections().empty());
  s.step();
  EXPECT_EQ(s.selections().size(), s.world().agents().size());
  for (const auto& e : s.selections()) EXPECT_EQ(e.step, 500u);
}

TEST(Step, TerminationOnCompletion) {
  const auto r = run_once(env::designed_env("2.2"), small_params(0.2, 0.01), {ControllerKind::MB1, std::nullopt}, 1);
  ASSERT_EQ(r.p_s, r.p);
  EXPECT_LT(r.t_s, r.t);
  EXPECT_DOUBLE_EQ(r.fitness, 1.0 - static_cast<double>(r.t_s) / static_cast<double>(r.t));
}

TEST(Step, TimeoutUsesFullHorizon) {
  const auto r = run_once(env::designed_env("1.2"), small_params(0.01, 0.1), {ControllerKind::MB1, std::nullopt}, 1);
  EXPECT_LT(r.p_s, r.p);
  EXPECT_EQ(r.t_s, r.t);
  EXPECT_LT(r.fitness, 0.0);
}

TEST(Determinism, SameSeedSameDigestEveryStep) {
  const auto spec = env::designed_env("2.3");
  const auto p = small_params(0.05, 0.1);
  Simulation a(spec, p, {ControllerKind::MB3, std::nullopt}, 11);
  Simulation b(spec, p, {ControllerKind::MB3, std::nullopt}, 11);
  while (!a.world().terminated()) {
    a.step();
    b.step();
    ASSERT_EQ(a.world().state_digest(), b.world().state_digest()) << "step " << a.world().step();
  }
  EXPECT_TRUE(b.world().terminated());
  EXPECT_EQ(a.result().digest, b.result().digest);
}

TEST(Determinism, SeedsDiffer) {
  const auto spec = env::designed_env("2.2");
  const auto p = small_params();
  EXPECT_NE(run_once(spec, p, {ControllerKind::MB1, std::nullopt}, 1).digest,
            run_once(spec, p, {ControllerKind::MB1, std::nullopt}, 2).digest);
}

// Speed, buffer and per-step budget bounds, plus packet conservation, at every step.
class Invariants : public ::testing::TestWithParam<std::tuple<std::string, ControllerKind>> {};

TEST_P(Invariants, HoldEveryStep) {
  const auto [id, kind] = GetParam();
  const auto p = small_params(0.05, 0.1);
  Simulation s(env::designed_env(id), p, {kind, std::nullopt}, 5);
  auto& w = s.world();
  std::vector<Vec2> before;
  while (!w.terminated()) {
    before.clear();
    for (const auto& a : w.agents()) before.push_back(a.position);
    s.step();
    std::uint64_t held = 0, queued = 0;
    for (std::size_t i = 0; i < w.agents().size(); ++i) {
      const auto& a = w.agents()[i];
      ASSERT_LE(distance(before[i], a.position), p.agent.max_speed + 1e-12);
      ASSERT_LE(a.buffer.size(), p.agent.buffer_capacity);
      ASSERT_TRUE(w.spec().in_arena(a.position));
      held += a.buffer.size();
    }
    for (const auto& n : w.nodes()) queued += n.queue.size();
    std::uint64_t created = w.packets().size();
    ASSERT_EQ(held + queued + w.delivered(), created);
    ASSERT_LE(created, w.total_packets());
  }
}

INSTANTIATE_TEST_SUITE_P(Envs, Invariants,
                         ::testing::Combine(::testing::Values("1.1", "1.3", "2.1", "3.2"),
                                            ::testing::Values(ControllerKind::MB1, ControllerKind::MB2, ControllerKind::MB3)));

TEST(Kinematics, WallsAreNeverCrossed) {
  const auto spec = env::designed_env("1.3");
  Simulation s(spec, small_params(0.1, 0.1), {ControllerKind::MB2, std::nullopt}, 2);
  auto& w = s.world();
  std::vector<Vec2> before;
  while (!w.terminated()) {
    before.clear();
    for (const auto& a : w.agents()) before.push_back(a.position);
    s.step();
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (before[i] == w.agents()[i].position) continue;
      for (const auto& wall : w.walls()) ASSERT_FALSE(intersects(Segment{before[i], w.agents()[i].position}, wall.segment));
    }
  }
}

TEST(Parallel, MatchesSerial) {
  const std::vector<std::string> envs{"1.1", "2.3"};
  const std::vector<ControllerKind> ks{ControllerKind::MB1, ControllerKind::MB2, ControllerKind::RAND};
  const auto cfgs = harness::grid(envs, ks, harness::seed_range(0, 3));
  harness::ExperimentOptions serial;
  serial.params = small_params();
  serial.threads = 1;
  auto par = serial;
  par.threads = 4;
  const auto a = harness::run_experiment(cfgs, serial);
  const auto b = harness::run_experiment(cfgs, par);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_TRUE(a[i].ok() && b[i].ok());
    EXPECT_EQ(a[i].config.env, b[i].config.env);
    EXPECT_EQ(a[i].result->digest, b[i].result->digest);
    EXPECT_EQ(a[i].result->fitness, b[i].result->fitness);
  }
}

TEST(Trace, OneJsonRecordPerLine) {
  std::ostringstream os;
  RunOptions ro;
  ro.trace = &os;
  run_once(env::designed_env("2.2"), small_params(0.01, 0.1), {ControllerKind::MB1, std::nullopt}, 1, std::move(ro));
  std::istringstream in(os.str());
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line); ++lines) ASSERT_TRUE(nlohmann::json::accept(line)) << line;
  EXPECT_GT(lines, 0u);
}
