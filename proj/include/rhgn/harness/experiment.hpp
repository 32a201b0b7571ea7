#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "rhgn/classifier/classifier.hpp"
#include "rhgn/env/catalog.hpp"
#include "rhgn/env/generator.hpp"
#include "rhgn/harness/metrics.hpp"
#include "rhgn/sim/simulation.hpp"

namespace rhgn::harness {

using behaviours::ControllerKind;

// Designed id ("2.3"), generated id ("gen-<seed>") or a path to an .env file.
inline env::EnvironmentSpec resolve_env(std::string_view id, const env::GeneratorConfig& gen = {}) {
  for (auto d : env::kDesignedIds)
    if (d == id) return env::designed_env(id);
  if (id.starts_with("gen-")) {
    std::uint64_t seed = 0;
    const auto digits = id.substr(4);
    const auto r = std::from_chars(digits.data(), digits.data() + digits.size(), seed);
    if (r.ec != std::errc{} || r.ptr != digits.data() + digits.size())
      throw Error(Errc::UnknownId, "bad generated environment id " + std::string(id));
    return env::generate_env(gen, seed);
  }
  if (id.ends_with(".env")) return env::EnvironmentSpec::load(std::string(id));
  throw Error(Errc::UnknownId, "unknown environment " + std::string(id));
}

// Desk scale: 100 packets and T = 10,000 steps for the designed envs.
inline sim::SimParams desk_params(sim::SimParams p = {}) {
  p.run.scale_packets = 0.1;
  p.run.scale_steps = 0.2;
  p.validate();
  return p;
}

struct RunConfig {
  std::string env;
  ControllerKind controller = ControllerKind::MB1;
  std::uint64_t seed = 0;
};

struct Cell {
  RunConfig config;
  std::optional<sim::RunResult> result;
  std::string error;

  bool ok() const noexcept { return result.has_value(); }
};

struct ExperimentOptions {
  sim::SimParams params;
  std::optional<behaviours::TupleSource> classifier;  // for RHGN cells
  std::size_t threads = 0;                            // 0: hardware concurrency
  bool record_predictions = false;
  bool keep_selections = true;
  env::GeneratorConfig generator;
};

inline std::size_t worker_count(std::size_t requested, std::size_t jobs) {
  std::size_t n = requested ? requested : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(n, jobs));
}

// Runs fn(i) for i in [0, jobs) on a pool of workers.
template <class Fn>
void parallel_for(std::size_t jobs, std::size_t threads, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < jobs; i = next++) fn(i);
  };
  const std::size_t n = worker_count(threads, jobs);
  if (n == 1) return work();
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < n; ++t) pool.emplace_back(work);
}

inline sim::RunResult run_cell(const RunConfig& cfg, const ExperimentOptions& opt, sim::RunOptions run = {}) {
  const auto spec = resolve_env(cfg.env, opt.generator);
  behaviours::ControllerConfig cc{cfg.controller, std::nullopt};
  if (cfg.controller == ControllerKind::RHGN) cc.classifier = opt.classifier;
  run.record_predictions = opt.record_predictions;
  auto r = sim::run_once(spec, opt.params, std::move(cc), cfg.seed, std::move(run));
  r.env = cfg.env;
  if (!opt.keep_selections) r.selections.clear();
  return r;
}

// Results come back in input order whatever the thread count; a failing cell
// records its error and the batch carries on.
inline std::vector<Cell> run_experiment(std::span<const RunConfig> configs, const ExperimentOptions& opt) {
  std::vector<Cell> cells(configs.size());
  parallel_for(configs.size(), opt.threads, [&](std::size_t i) {
    cells[i].config = configs[i];
    try {
      cells[i].result = run_cell(configs[i], opt);
    } catch (const std::exception& e) {
      cells[i].error = e.what();
    }
  });
  return cells;
}

inline std::vector<RunConfig> grid(std::span<const std::string> envs, std::span<const ControllerKind> controllers,
                                   std::span<const std::uint64_t> seeds) {
  std::vector<RunConfig> out;
  for (const auto& e : envs)
    for (auto c : controllers)
      for (auto s : seeds) out.push_back({e, c, s});
  return out;
}

inline std::vector<std::uint64_t> seed_range(std::uint64_t first, std::size_t count) {
  std::vector<std::uint64_t> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = first + i;
  return out;
}

inline std::vector<std::string> training_env_ids() { return {env::kTrainingIds.begin(), env::kTrainingIds.end()}; }
inline std::vector<std::string> designed_env_ids() { return {env::kDesignedIds.begin(), env::kDesignedIds.end()}; }

inline constexpr std::array<ControllerKind, 3> kManual{ControllerKind::MB1, ControllerKind::MB2, ControllerKind::MB3};

// Fitness per (env, controller) in seed order.
using FitnessTable = std::map<std::pair<std::string, ControllerKind>, std::vector<double>>;

inline FitnessTable fitness_table(std::span<const Cell> cells) {
  FitnessTable t;
  for (const auto& c : cells)
    if (c.ok()) t[{c.config.env, c.config.controller}].push_back(c.result->fitness);
  return t;
}

// Corpus extraction

struct CorpusOptions {
  sim::SimParams params;
  std::vector<std::string> envs = training_env_ids();
  std::vector<ControllerKind> behaviours{kManual.begin(), kManual.end()};
  std::size_t runs_per_cell = 1;
  std::uint64_t seed_base = 1000;
  std::size_t threads = 0;
};

using ObservationSink = std::function<void(std::span<const double> raw, std::string_view label)>;

// Every MB in every training env; each agent's per-step observation, labelled
// with the env id. Cells run in parallel in batches and are delivered in order.
inline std::size_t extract_corpus(const CorpusOptions& opt, const ObservationSink& sink) {
  std::vector<RunConfig> cfgs;
  std::uint64_t k = 0;
  for (const auto& e : opt.envs) {
    if (!env::is_training_env(e)) throw Error(Errc::LabelMismatch, "corpus env must be a training env: " + e);
    for (auto b : opt.behaviours) {
      if (!behaviours::fixed_behaviour(b)) throw Error(Errc::InvalidArgument, "corpus behaviours must be MBs");
      for (std::size_t r = 0; r < opt.runs_per_cell; ++r) cfgs.push_back({e, b, opt.seed_base + k++});
    }
  }
  ExperimentOptions eo;
  eo.params = opt.params;
  eo.threads = opt.threads;
  const std::size_t batch = worker_count(opt.threads, cfgs.size());
  std::size_t count = 0;
  for (std::size_t start = 0; start < cfgs.size(); start += batch) {
    const std::size_t n = std::min(batch, cfgs.size() - start);
    std::vector<std::vector<double>> buffers(n);
    parallel_for(n, opt.threads, [&](std::size_t i) {
      auto& buf = buffers[i];
      sim::RunOptions ro;
      ro.observer = [&buf](std::size_t, const sim::Observation& obs) { buf.insert(buf.end(), obs.begin(), obs.end()); };
      run_cell(cfgs[start + i], eo, std::move(ro));
    });
    for (std::size_t i = 0; i < n; ++i) {
      const auto& buf = buffers[i];
      for (std::size_t off = 0; off < buf.size(); off += std::tuple_size_v<sim::Observation>, ++count)
        sink(std::span<const double>(buf).subspan(off, std::tuple_size_v<sim::Observation>), cfgs[start + i].env);
    }
  }
  return count;
}

inline classifier::Classifier train_from_simulation(const CorpusOptions& opt) {
  classifier::Trainer trainer;
  extract_corpus(opt, [&](std::span<const double> raw, std::string_view label) { trainer.add(raw, label); });
  return std::move(trainer).finish();
}

// Behaviour validation: MB medians per training env and the best MB.

struct ValidationRow {
  std::string env;
  std::array<double, 3> median{};  // MB1, MB2, MB3
  BehaviourId best = BehaviourId::MB1;
  BehaviourId expected = BehaviourId::MB1;
};

inline BehaviourId expected_best(std::string_view env) {
  const auto labels = classifier::default_labels();
  const auto map = classifier::default_behaviour_map();
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == env) return map[i];
  throw Error(Errc::UnknownTruth, "no expected behaviour for " + std::string(env));
}

// Highest median; ties go to the lower MB.
inline BehaviourId best_of(const std::array<double, 3>& m) {
  std::size_t b = 0;
  for (std::size_t i = 1; i < 3; ++i)
    if (m[i] > m[b]) b = i;
  return static_cast<BehaviourId>(b + 1);
}

inline std::vector<ValidationRow> behaviour_validation(std::span<const Cell> cells) {
  const auto table = fitness_table(cells);
  std::vector<ValidationRow> rows;
  for (const auto& e : training_env_ids()) {
    ValidationRow row{e};
    bool any = false;
    for (std::size_t i = 0; i < 3; ++i)
      if (auto it = table.find({e, kManual[i]}); it != table.end() && !it->second.empty()) {
        row.median[i] = median(it->second);
        any = true;
      }
    if (!any) continue;
    row.best = best_of(row.median);
    row.expected = expected_best(e);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace rhgn::harness
