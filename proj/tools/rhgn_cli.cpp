#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>

#include "rhgn/classifier/corpus.hpp"
#include "rhgn/harness/experiment.hpp"
#include "rhgn/harness/maps.hpp"
#include "rhgn/harness/report.hpp"

using namespace rhgn;
using harness::ControllerKind;

namespace {

struct Common {
  std::string config;
  double scale_packets = 1.0;
  double scale_steps = 1.0;
  std::string bundle;
  std::size_t threads = 0;

  void add_to(CLI::App* app, bool with_bundle = true) {
    app->add_option("--config", config, "Simulation parameter file (key = value)");
    app->add_option("--scale-packets", scale_packets, "Packet-count multiplier")->check(CLI::PositiveNumber);
    app->add_option("--scale-steps", scale_steps, "Step-limit multiplier")->check(CLI::PositiveNumber);
    app->add_option("--threads", threads, "Worker threads (0: all cores)");
    if (with_bundle) app->add_option("--bundle", bundle, "Trained classifier bundle, needed by RHGN");
  }

  sim::SimParams params() const {
    sim::SimParams p = config.empty() ? sim::SimParams{} : sim::SimParams::from_file(config);
    p.run.scale_packets = scale_packets;
    p.run.scale_steps = scale_steps;
    p.validate();
    return p;
  }

  harness::ExperimentOptions options() const {
    harness::ExperimentOptions o;
    o.params = params();
    o.threads = threads;
    if (!bundle.empty())
      o.classifier = behaviours::TupleSource::from(std::make_shared<const classifier::Classifier>(classifier::Classifier::load(bundle)));
    return o;
  }
};

std::vector<ControllerKind> parse_controllers(const std::vector<std::string>& names) {
  std::vector<ControllerKind> out;
  for (const auto& n : names) out.push_back(behaviours::parse_controller(n));
  return out;
}

void need_bundle(const harness::ExperimentOptions& o, std::span<const ControllerKind> ks) {
  for (auto k : ks)
    if (k == ControllerKind::RHGN && !o.classifier) throw Error(Errc::Untrained, "RHGN needs --bundle");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error(Errc::IoFailure, "cannot open " + path);
  return f;
}

int report_errors(std::span<const harness::Cell> cells) {
  int bad = 0;
  for (const auto& c : cells)
    if (!c.ok()) {
      std::cerr << "error: " << c.config.env << ' ' << behaviours::to_string(c.config.controller) << ' ' << c.config.seed << ": "
                << c.error << '\n';
      ++bad;
    }
  return bad ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Behaviour selection for communication-relay swarms"};
  app.require_subcommand(1);

  // train
  Common train_c;
  std::string corpus_in, corpus_out, bundle_out;
  std::size_t runs_per_cell = 1;
  std::uint64_t corpus_seed = 1000;
  auto* train = app.add_subcommand("train", "Train a classifier bundle from a corpus file or from simulation");
  train_c.add_to(train, false);
  train->add_option("--corpus", corpus_in, "Read observations from this corpus file instead of simulating");
  train->add_option("--write-corpus", corpus_out, "Also write the extracted corpus here");
  train->add_option("--runs-per-cell", runs_per_cell, "Runs per (env, behaviour) cell when simulating")->check(CLI::PositiveNumber);
  train->add_option("--corpus-seed", corpus_seed, "First seed of the extraction runs");
  train->add_option("--out", bundle_out, "Bundle path")->required();

  // run
  Common run_c;
  std::string run_env, run_controller = "MB1", run_trace;
  std::uint64_t run_seed = 0;
  auto* run = app.add_subcommand("run", "Single run; prints one results row and the world digest");
  run_c.add_to(run);
  run->add_option("--env", run_env, "Designed id, gen-<seed> or .env path")->required();
  run->add_option("--controller", run_controller, "MB1, MB2, MB3, RAND or RHGN");
  run->add_option("--seed", run_seed, "Run seed");
  run->add_option("--out", run_trace, "Trace file (one JSON record per event)");

  // suite
  Common suite_c;
  std::string suite_kind = "designed", suite_out;
  std::size_t suite_seeds = 50, generated = 50;
  std::uint64_t first_seed = 0, first_env = 0;
  std::vector<std::string> suite_controllers{"MB1", "MB2", "MB3", "RAND", "RHGN"};
  auto* suite = app.add_subcommand("suite", "Batch over the designed or generated environments");
  suite_c.add_to(suite);
  suite->add_option("kind", suite_kind, "designed or generated")->check(CLI::IsMember({"designed", "generated"}));
  suite->add_option("--seeds", suite_seeds, "Runs per (env, controller)");
  suite->add_option("--first-seed", first_seed, "First run seed");
  suite->add_option("--envs", generated, "Number of generated environments");
  suite->add_option("--first-env", first_env, "First generator seed");
  suite->add_option("--controllers", suite_controllers, "Controllers to run")->delimiter(',');
  suite->add_option("--out", suite_out, "Results table path (stdout when omitted)");

  // report
  std::string report_in, report_out;
  auto* report = app.add_subcommand("report", "Medians, Mann-Whitney tests and 95% match rates from a results table");
  report->add_option("--in", report_in, "Results table")->required();
  report->add_option("--out", report_out, "Report path (stdout when omitted)");

  // map
  Common map_c;
  std::string map_env, map_controller = "RHGN", map_out;
  std::uint64_t map_seed = 0;
  std::size_t map_runs = 1;
  auto* map = app.add_subcommand("map", "Behaviour map of selection events (PPM, or SVG for .svg paths)");
  map_c.add_to(map);
  map->add_option("--env", map_env, "Designed id, gen-<seed> or .env path")->required();
  map->add_option("--controller", map_controller, "Controller");
  map->add_option("--seed", map_seed, "First run seed");
  map->add_option("--runs", map_runs, "Runs to concatenate")->check(CLI::PositiveNumber);
  map->add_option("--out", map_out, "Image path")->required();

  // validate-behaviours
  Common val_c;
  std::size_t val_seeds = 10;
  auto* validate = app.add_subcommand("validate-behaviours", "Median MB fitness in the training envs and the best MB per env");
  val_c.add_to(validate, false);
  validate->add_option("--seeds", val_seeds, "Runs per (env, MB)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      classifier::Trainer trainer;
      std::size_t n = 0;
      if (!corpus_in.empty()) {
        std::ifstream in(corpus_in);
        if (!in) throw Error(Errc::IoFailure, "cannot open " + corpus_in);
        n = classifier::for_each_record(in, std::tuple_size_v<sim::Observation>,
                                        [&](std::span<const double> raw, std::string_view label) { trainer.add(raw, label); });
      } else {
        harness::CorpusOptions co;
        co.params = train_c.params();
        co.runs_per_cell = runs_per_cell;
        co.seed_base = corpus_seed;
        co.threads = train_c.threads;
        std::ofstream out;
        if (!corpus_out.empty()) out = open_out(corpus_out);
        n = harness::extract_corpus(co, [&](std::span<const double> raw, std::string_view label) {
          trainer.add(raw, label);
          if (out.is_open()) classifier::write_record(out, raw, label);
        });
      }
      std::move(trainer).finish().save(bundle_out);
      std::cout << "trained on " << n << " observations -> " << bundle_out << '\n';
      return 0;
    }

    if (*run) {
      auto opt = run_c.options();
      const harness::RunConfig cfg{run_env, behaviours::parse_controller(run_controller), run_seed};
      need_bundle(opt, std::span(&cfg.controller, 1));
      std::ofstream trace;
      sim::RunOptions ro;
      if (!run_trace.empty()) {
        trace = open_out(run_trace);
        ro.trace = &trace;
      }
      const auto r = harness::run_cell(cfg, opt, std::move(ro));
      const harness::ResultRow row{cfg.env, cfg.controller, cfg.seed, r.fitness, r.t_s, r.p_s};
      harness::write_results(std::cout, std::span(&row, 1));
      std::cout << "digest " << std::hex << r.digest << std::dec << '\n';
      return 0;
    }

    if (*suite) {
      auto opt = suite_c.options();
      opt.keep_selections = false;
      const auto ks = parse_controllers(suite_controllers);
      need_bundle(opt, ks);
      std::vector<std::string> envs;
      if (suite_kind == "designed") {
        envs = harness::designed_env_ids();
      } else {
        for (std::size_t i = 0; i < generated; ++i) envs.push_back("gen-" + std::to_string(first_env + i));
      }
      const auto seeds = harness::seed_range(first_seed, suite_seeds);
      const auto cfgs = harness::grid(envs, ks, seeds);
      const auto cells = harness::run_experiment(cfgs, opt);
      const auto rows = harness::rows_of(cells);
      if (suite_out.empty()) {
        harness::write_results(std::cout, rows);
      } else {
        auto out = open_out(suite_out);
        harness::write_results(out, rows);
      }
      return report_errors(cells);
    }

    if (*report) {
      std::ifstream in(report_in);
      if (!in) throw Error(Errc::IoFailure, "cannot open " + report_in);
      const auto rep = harness::build_report(harness::read_results(in));
      if (report_out.empty()) {
        harness::print_report(std::cout, rep);
      } else {
        auto out = open_out(report_out);
        harness::print_report(out, rep);
      }
      return 0;
    }

    if (*map) {
      auto opt = map_c.options();
      const auto k = behaviours::parse_controller(map_controller);
      need_bundle(opt, std::span(&k, 1));
      std::vector<harness::RunConfig> cfgs;
      for (std::size_t i = 0; i < map_runs; ++i) cfgs.push_back({map_env, k, map_seed + i});
      const auto cells = harness::run_experiment(cfgs, opt);
      std::vector<sim::SelectionEvent> events;
      for (const auto& c : cells)
        if (c.ok()) events.insert(events.end(), c.result->selections.begin(), c.result->selections.end());
      harness::emit_behaviour_map(harness::resolve_env(map_env, opt.generator), events, map_out);
      std::cout << events.size() << " selection events -> " << map_out << '\n';
      return report_errors(cells);
    }

    if (*validate) {
      auto opt = val_c.options();
      const auto cfgs = harness::grid(harness::training_env_ids(), harness::kManual, harness::seed_range(0, val_seeds));
      const auto cells = harness::run_experiment(cfgs, opt);
      std::size_t agree = 0;
      std::cout << "env,MB1,MB2,MB3,best,expected\n";
      const auto rows = harness::behaviour_validation(cells);
      for (const auto& r : rows) {
        agree += r.best == r.expected;
        std::cout << r.env << ',' << r.median[0] << ',' << r.median[1] << ',' << r.median[2] << ",MB" << static_cast<int>(r.best)
                  << ",MB" << static_cast<int>(r.expected) << '\n';
      }
      std::cout << "agreement " << agree << '/' << rows.size() << '\n';
      return report_errors(cells);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
