#pragma once

#include <array>
#include <istream>
#include <tuple>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rhgn/harness/experiment.hpp"
#include "rhgn/harness/metrics.hpp"

namespace rhgn::harness {

inline constexpr std::string_view kResultsHeader = "env,controller,seed,fitness,T_s,p_s";

struct ResultRow {
  std::string env;
  ControllerKind controller = ControllerKind::MB1;
  std::uint64_t seed = 0;
  double fitness = 0.0;
  std::uint64_t t_s = 0;
  std::uint64_t p_s = 0;
};

inline std::vector<ResultRow> rows_of(std::span<const Cell> cells) {
  std::vector<ResultRow> out;
  for (const auto& c : cells)
    if (c.ok()) out.push_back({c.config.env, c.config.controller, c.config.seed, c.result->fitness, c.result->t_s, c.result->p_s});
  return out;
}

inline void write_results(std::ostream& out, std::span<const ResultRow> rows) {
  out << kResultsHeader << '\n';
  for (const auto& r : rows)
    out << r.env << ',' << behaviours::to_string(r.controller) << ',' << r.seed << ',' << sim::detail::format_value(r.fitness) << ','
        << r.t_s << ',' << r.p_s << '\n';
}

inline std::vector<ResultRow> read_results(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || sim::detail::trim(line) != kResultsHeader)
    throw Error(Errc::ParseError, "results table must start with the header " + std::string(kResultsHeader));
  std::vector<ResultRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (sim::detail::trim(line).empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string tok; std::getline(ss, tok, ',');) f.push_back(std::string(sim::detail::trim(tok)));
    if (f.size() != 6) throw Error(Errc::ParseError, "line " + std::to_string(lineno) + ": expected 6 fields");
    ResultRow r;
    r.env = f[0];
    r.controller = behaviours::parse_controller(f[1]);
    sim::detail::parse_value(f[2], r.seed, "seed");
    sim::detail::parse_value(f[3], r.fitness, "fitness");
    sim::detail::parse_value(f[4], r.t_s, "T_s");
    sim::detail::parse_value(f[5], r.p_s, "p_s");
    rows.push_back(std::move(r));
  }
  return rows;
}

// Fitness per (env, controller) ordered by seed.
inline FitnessTable fitness_table(std::span<const ResultRow> rows) {
  std::map<std::pair<std::string, ControllerKind>, std::map<std::uint64_t, double>> by_seed;
  for (const auto& r : rows) by_seed[{r.env, r.controller}][r.seed] = r.fitness;
  FitnessTable t;
  for (const auto& [key, m] : by_seed)
    for (const auto& [seed, f] : m) t[key].push_back(f);
  return t;
}

struct ControllerSummary {
  std::string env;
  ControllerKind controller;
  std::size_t runs = 0;
  Summary fitness;
};

struct MatchRates {
  std::string env;  // "all" for the pooled suite
  ControllerKind controller;
  std::array<double, 3> vs_mb{};  // against MB1, MB2, MB3
  double vs_best = 0.0;           // against the per-run best MB
};

struct MetricsReport {
  std::vector<ControllerSummary> summaries;
  std::vector<std::tuple<std::string, ControllerKind, ControllerKind, MannWhitney>> tests;  // RHGN vs others
  std::vector<MatchRates> matches;
};

// Seeds are aligned by position, so every controller of an env must have the same seed list.
inline MetricsReport build_report(std::span<const ResultRow> rows) {
  const auto table = fitness_table(rows);
  MetricsReport rep;
  std::vector<std::string> envs;
  for (const auto& [key, v] : table)
    if (std::find(envs.begin(), envs.end(), key.first) == envs.end()) envs.push_back(key.first);
  auto get = [&](const std::string& e, ControllerKind k) -> const std::vector<double>* {
    auto it = table.find({e, k});
    return it == table.end() ? nullptr : &it->second;
  };
  std::map<ControllerKind, std::vector<double>> pooled;
  std::vector<double> pooled_best;
  std::array<std::vector<double>, 3> pooled_mb;
  for (const auto& e : envs) {
    for (auto k : behaviours::kAllControllers)
      if (const auto* v = get(e, k)) rep.summaries.push_back({e, k, v->size(), summarise(*v)});
    if (const auto* rh = get(e, ControllerKind::RHGN))
      for (auto k : behaviours::kAllControllers)
        if (const auto* v = get(e, k); v && k != ControllerKind::RHGN)
          rep.tests.emplace_back(e, ControllerKind::RHGN, k, mann_whitney_u(*rh, *v));
    std::vector<std::vector<double>> mbs;
    for (auto k : kManual)
      if (const auto* v = get(e, k)) mbs.push_back(*v);
    if (mbs.size() != 3) continue;
    const auto best = elementwise_max(mbs);
    for (auto k : {ControllerKind::RHGN, ControllerKind::RAND}) {
      const auto* v = get(e, k);
      if (!v) continue;
      MatchRates m{e, k};
      for (std::size_t i = 0; i < 3; ++i) m.vs_mb[i] = match_rate_95(*v, mbs[i]);
      m.vs_best = match_rate_95(*v, best);
      rep.matches.push_back(m);
      pooled[k].insert(pooled[k].end(), v->begin(), v->end());
    }
    if (get(e, ControllerKind::RHGN) || get(e, ControllerKind::RAND)) {
      pooled_best.insert(pooled_best.end(), best.begin(), best.end());
      for (std::size_t i = 0; i < 3; ++i) pooled_mb[i].insert(pooled_mb[i].end(), mbs[i].begin(), mbs[i].end());
    }
  }
  for (auto& [k, v] : pooled) {
    if (v.size() != pooled_best.size()) continue;
    MatchRates m{"all", k};
    for (std::size_t i = 0; i < 3; ++i) m.vs_mb[i] = match_rate_95(v, pooled_mb[i]);
    m.vs_best = match_rate_95(v, pooled_best);
    rep.matches.push_back(m);
  }
  return rep;
}

inline void print_report(std::ostream& out, const MetricsReport& rep) {
  out << "# fitness\nenv,controller,runs,q1,median,q3\n";
  for (const auto& s : rep.summaries)
    out << s.env << ',' << behaviours::to_string(s.controller) << ',' << s.runs << ',' << sim::detail::format_value(s.fitness.q1) << ','
        << sim::detail::format_value(s.fitness.median) << ',' << sim::detail::format_value(s.fitness.q3) << '\n';
  out << "# mann-whitney\nenv,a,b,U,p,exact\n";
  for (const auto& [e, a, b, mw] : rep.tests)
    out << e << ',' << behaviours::to_string(a) << ',' << behaviours::to_string(b) << ',' << sim::detail::format_value(mw.u) << ','
        << sim::detail::format_value(mw.p) << ',' << (mw.exact ? 1 : 0) << '\n';
  out << "# match-95\nenv,controller,vs_MB1,vs_MB2,vs_MB3,vs_best\n";
  for (const auto& m : rep.matches)
    out << m.env << ',' << behaviours::to_string(m.controller) << ',' << sim::detail::format_value(m.vs_mb[0]) << ','
        << sim::detail::format_value(m.vs_mb[1]) << ',' << sim::detail::format_value(m.vs_mb[2]) << ',' << sim::detail::format_value(m.vs_best) << '\n';
}

}  // namespace rhgn::harness
