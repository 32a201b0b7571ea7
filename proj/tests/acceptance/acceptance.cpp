// Acceptance checks; `acceptance N` runs criterion N and prints one PASS/FAIL line.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rhgn/classifier/classifier.hpp"
#include "rhgn/harness/experiment.hpp"
#include "rhgn/harness/metrics.hpp"
#include "rhgn/hgn/pyramid.hpp"

using namespace rhgn;
using harness::ControllerKind;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(prec);
  os << v;
  return os.str();
}

bool valid_tuple(std::span<const double> t) {
  double sum = 0.0;
  for (double p : t) {
    if (!(p >= 0.0)) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= 1e-9;
}

// The desk-scale bundle: one run per (training env, MB) cell.
std::shared_ptr<const classifier::Classifier> desk_bundle(std::size_t* corpus_size = nullptr) {
  harness::CorpusOptions co;
  co.params = harness::desk_params();
  classifier::Trainer trainer;
  const auto n = harness::extract_corpus(co, [&](std::span<const double> raw, std::string_view label) { trainer.add(raw, label); });
  if (corpus_size) *corpus_size = n;
  return std::make_shared<const classifier::Classifier>(std::move(trainer).finish());
}

harness::ExperimentOptions desk_options(std::shared_ptr<const classifier::Classifier> bundle = nullptr) {
  harness::ExperimentOptions o;
  o.params = harness::desk_params();
  o.keep_selections = false;
  if (bundle) o.classifier = behaviours::TupleSource::from(std::move(bundle));
  return o;
}

std::vector<harness::Cell> run_grid(const std::vector<std::string>& envs, std::vector<ControllerKind> ks,
                                    const harness::ExperimentOptions& opt, std::size_t seeds = 10) {
  const auto cfgs = harness::grid(envs, ks, harness::seed_range(0, seeds));
  auto cells = harness::run_experiment(cfgs, opt);
  for (const auto& c : cells)
    if (!c.ok()) throw std::runtime_error("cell " + c.config.env + " failed: " + c.error);
  return cells;
}

double median_of(const harness::FitnessTable& t, const std::string& env, ControllerKind k) {
  return harness::median(t.at({env, k}));
}

Verdict criterion_1() {
  constexpr std::size_t kCount = 10000, kLen = 21;
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<hgn::ComponentValue> value(0, 999);
  std::set<std::vector<hgn::ComponentValue>> seen;
  std::vector<std::vector<hgn::ComponentValue>> patterns;
  while (patterns.size() < kCount) {
    std::vector<hgn::ComponentValue> p(kLen);
    for (auto& v : p) v = value(rng);
    if (seen.insert(p).second) patterns.push_back(std::move(p));
  }
  const auto t0 = Clock::now();
  hgn::NeuronPyramid pyr(kLen);
  std::vector<hgn::PatternId> ids;
  for (const auto& p : patterns) ids.push_back(pyr.memorise(p));
  std::size_t exact = 0;
  for (std::size_t i = 0; i < kCount; ++i) exact += pyr.recall(patterns[i]) == ids[i];
  const std::set<hgn::PatternId> distinct(ids.begin(), ids.end());
  const double secs = seconds_since(t0);
  const bool ok = exact == kCount && distinct.size() == kCount && secs < 10.0;
  return {ok, std::to_string(exact) + "/" + std::to_string(kCount) + " recalled, " + std::to_string(distinct.size()) +
                  " distinct ids, " + fmt(secs, 2) + " s (limit 10 s)"};
}

Verdict criterion_2() {
  bool formula = true;
  for (std::uint64_t n : {1ULL, 3ULL, 5ULL, 21ULL, 49ULL})
    for (std::uint64_t r : {1ULL, 2ULL, 7ULL, 1000ULL, 4294967296ULL}) {
      const std::uint64_t k = (n + 1) / 2;  // (n+1)^2/4 for odd n
      formula = formula && hgn::static_hgn_count(n, r) == r * k * k;
    }
  const auto t0 = Clock::now();
  constexpr std::uint64_t kPatterns = 2000000;
  hgn::NeuronPyramid pyr(3);
  for (std::uint64_t i = 0; i < kPatterns; ++i) {
    const std::array<hgn::ComponentValue, 3> p{7, static_cast<hgn::ComponentValue>(i), 7};
    pyr.memorise(p);
  }
  const auto neurons = pyr.neuron_count();
  const double secs = seconds_since(t0);
  const bool ok = formula && neurons <= 4000000 && secs < 120.0;
  return {ok, std::string("static formula ") + (formula ? "exact" : "MISMATCH") + "; 2e6 unique-B patterns allocate " +
                  std::to_string(neurons) + " neurons (bound 4000000), static HGN would need " +
                  std::to_string(hgn::static_hgn_count(3, 4294967296ULL)) + "; " + fmt(secs, 1) + " s"};
}

Verdict criterion_3() {
  std::size_t corpus = 0;
  const auto bundle = desk_bundle(&corpus);
  // Observations unseen in training: a separate seed range, every training env and MB.
  harness::CorpusOptions probe;
  probe.params = harness::desk_params();
  probe.seed_base = 50000;
  std::size_t checked = 0, bad = 0;
  constexpr std::size_t kChecks = 100000;
  std::size_t seen = 0;
  harness::extract_corpus(probe, [&](std::span<const double> raw, std::string_view) {
    if (seen++ % 5 != 0 || checked == kChecks) return;
    ++checked;
    const auto tr = bundle->classify_traced(raw);
    bool ok = valid_tuple(tr.result);
    for (const auto& t : tr.lower_tuples) ok = ok && valid_tuple(t);
    bad += !ok;
  });
  // Fused beliefs of a full RHGN run are tuples too.
  auto opt = desk_options(bundle);
  opt.keep_selections = true;
  std::size_t fused = 0;
  for (std::string e : {"1.2", "2.3"}) {
    const auto r = harness::run_cell({e, ControllerKind::RHGN, 0}, opt);
    for (const auto& s : r.selections) {
      ++fused;
      bad += !valid_tuple(s.fused);
    }
  }
  return {bad == 0 && checked == kChecks, "trained on " + std::to_string(corpus) + " observations; " + std::to_string(checked) +
                                              " classifications and " + std::to_string(fused) + " fused selections, " +
                                              std::to_string(bad) + " violations"};
}

Verdict criterion_4() {
  const harness::Confusion c{1.0 / 36.0, 25.0 / 36.0, 5.0 / 36.0, 5.0 / 36.0};
  const auto r = harness::accuracy_f1(c);
  const bool ok = std::abs(r.accuracy - 0.7222) <= 1e-4 && std::abs(r.f1 - 0.1667) <= 1e-4;
  return {ok, "Acc = " + fmt(r.accuracy) + " (0.7222), F1 = " + fmt(r.f1) + " (0.1667)"};
}

Verdict criterion_5() {
  std::mt19937_64 rng(5);
  std::size_t bad = 0, at_minus_one = 0;
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const auto p = std::uniform_int_distribution<std::uint64_t>(1, 5000)(rng);
    const auto t = std::uniform_int_distribution<std::uint64_t>(1, 100000)(rng);
    const bool complete = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
    const std::uint64_t ps = complete ? p : std::uniform_int_distribution<std::uint64_t>(0, p - 1)(rng);
    const std::uint64_t ts = complete ? std::uniform_int_distribution<std::uint64_t>(1, t)(rng) : t;
    const double f = sim::fitness(ps, p, ts, t);
    const long double oracle =
        (static_cast<long double>(ps) * t - static_cast<long double>(ts) * p) / (static_cast<long double>(p) * t);
    worst = std::max(worst, static_cast<double>(std::abs(f - oracle)));
    const bool ok = f > -1.0 && f < 1.0 && (complete ? f >= 0.0 : f < 0.0) && std::abs(f - oracle) <= 1e-12;
    bad += !ok;
    at_minus_one += f == -1.0;
  }
  std::ostringstream err;
  err << worst;
  return {bad == 0, "10000 samples, " + std::to_string(bad) + " violations (" + std::to_string(at_minus_one) +
                        " timeouts with p_s = 0 give exactly -1), max |error| " + err.str()};
}

Verdict criterion_6() {
  const auto t0 = Clock::now();
  const auto cells = run_grid(harness::training_env_ids(), {harness::kManual.begin(), harness::kManual.end()}, desk_options());
  const auto rows = harness::behaviour_validation(cells);
  const double secs = seconds_since(t0);
  auto row = [&](const std::string& e) -> const harness::ValidationRow& {
    for (const auto& r : rows)
      if (r.env == e) return r;
    throw std::runtime_error("missing row " + e);
  };
  bool ok = true;
  std::string detail;
  const auto& r12 = row("1.2");
  ok = ok && r12.median[1] > 0.0 && r12.median[0] < 0.0 && r12.median[2] < 0.0;
  const auto& r23 = row("2.3");
  ok = ok && r23.median[2] > r23.median[0] && r23.median[2] > r23.median[1];
  for (std::string e : {"1.1", "2.1", "2.2"}) {
    const auto& r = row(e);
    ok = ok && r.median[0] >= r.median[1] && r.median[0] >= r.median[2];
  }
  std::size_t agree = 0;
  for (const auto& r : rows) {
    agree += r.best == r.expected;
    detail += r.env + " [" + fmt(r.median[0]) + " " + fmt(r.median[1]) + " " + fmt(r.median[2]) + "] ";
  }
  ok = ok && agree >= 5 && secs < 600.0;
  return {ok, detail + "argmax agrees in " + std::to_string(agree) + "/6, " + fmt(secs, 1) + " s"};
}

Verdict criterion_7() {
  const auto bundle = desk_bundle();
  auto opt = desk_options(bundle);
  opt.record_predictions = true;
  const auto cells = run_grid({"1.1", "1.2", "1.3"}, {ControllerKind::RHGN}, opt);
  bool ok = true;
  std::string detail;
  for (std::string e : {"1.1", "1.2", "1.3"}) {
    std::vector<harness::PredictionVector> vecs;
    const auto truth = *bundle->label_index(e);
    for (const auto& c : cells)
      if (c.config.env == e)
        for (const auto& v : c.result->predictions) vecs.push_back({v, truth});
    const auto curve = harness::error_rate_curve(vecs);
    const std::size_t q = curve.size() / 4;
    const double first = harness::window_mean(curve, 0, q), last = harness::window_mean(curve, curve.size() - q, curve.size());
    ok = ok && last < 0.10 && last < first;
    detail += e + " first " + fmt(first) + " last " + fmt(last) + "; ";
  }
  return {ok, detail + "need last < 0.10 and last < first"};
}

Verdict criterion_8() {
  const auto bundle = desk_bundle();
  const std::vector<ControllerKind> ks{ControllerKind::MB1, ControllerKind::MB2, ControllerKind::MB3, ControllerKind::RHGN};
  const auto cells = run_grid({"1.2", "1.3", "2.3", "3.1"}, ks, desk_options(bundle));
  const auto t = harness::fitness_table(std::span<const harness::Cell>(cells));
  bool ok = true;
  std::string detail;
  for (std::string e : {"1.2", "1.3", "2.3", "3.1"}) {
    const double rh = median_of(t, e, ControllerKind::RHGN);
    std::array<double, 3> mb{};
    for (std::size_t i = 0; i < 3; ++i) mb[i] = median_of(t, e, harness::kManual[i]);
    if (e == "3.1") {
      ok = ok && rh > mb[0] && rh > mb[1] && rh > mb[2];
    } else {
      ok = ok && rh > 0.0 && std::min({mb[0], mb[1], mb[2]}) < 0.0;
    }
    detail += e + " RHGN " + fmt(rh) + " MB [" + fmt(mb[0]) + " " + fmt(mb[1]) + " " + fmt(mb[2]) + "]; ";
  }
  return {ok, detail};
}

Verdict criterion_9() {
  const auto bundle = desk_bundle();
  const std::vector<ControllerKind> ks{ControllerKind::MB1, ControllerKind::MB2, ControllerKind::MB3, ControllerKind::RAND,
                                       ControllerKind::RHGN};
  const auto cells = run_grid(harness::designed_env_ids(), ks, desk_options(bundle));
  const auto t = harness::fitness_table(std::span<const harness::Cell>(cells));
  std::vector<double> rh, rnd, best;
  for (const auto& e : harness::designed_env_ids()) {
    std::vector<std::vector<double>> mbs;
    for (auto k : harness::kManual) mbs.push_back(t.at({e, k}));
    const auto b = harness::elementwise_max(mbs);
    best.insert(best.end(), b.begin(), b.end());
    const auto& x = t.at({e, ControllerKind::RHGN});
    const auto& y = t.at({e, ControllerKind::RAND});
    rh.insert(rh.end(), x.begin(), x.end());
    rnd.insert(rnd.end(), y.begin(), y.end());
  }
  const double a = harness::match_rate_95(rh, best), b = harness::match_rate_95(rnd, best);
  return {a - b >= 0.10, "max-MB 95% match: RHGN " + fmt(100 * a, 1) + "%, RAND " + fmt(100 * b, 1) + "%, gap " +
                             fmt(100 * (a - b), 1) + " pp (need >= 10)"};
}

Verdict criterion_10() {
  const auto bundle = desk_bundle();
  auto opt = desk_options(bundle);
  std::size_t runs = 0, same = 0;
  for (const auto& e : harness::designed_env_ids())
    for (auto k : behaviours::kAllControllers) {
      const harness::RunConfig cfg{e, k, 3};
      const auto a = harness::run_cell(cfg, opt), b = harness::run_cell(cfg, opt);
      ++runs;
      same += a.digest == b.digest && a.fitness == b.fitness;
    }
  const auto bytes = bundle->to_bytes();
  const auto loaded = classifier::Classifier::from_bytes(bytes);
  harness::CorpusOptions probe;
  probe.params = harness::desk_params();
  probe.seed_base = 70000;
  std::size_t identical = 0, checked = 0, seen = 0;
  harness::extract_corpus(probe, [&](std::span<const double> raw, std::string_view) {
    if (seen++ % 300 != 0 || checked == 1000) return;
    ++checked;
    identical += bundle->classify(raw) == loaded.classify(raw);
  });
  const bool bytes_same = loaded.to_bytes() == bytes;
  const bool ok = same == runs && identical == checked && checked == 1000 && bytes_same;
  return {ok, std::to_string(same) + "/" + std::to_string(runs) + " repeated runs identical; " + std::to_string(identical) +
                  "/" + std::to_string(checked) + " classifications identical after round-trip; re-serialised bundle " +
                  (bytes_same ? "byte-identical" : "DIFFERS")};
}

// Brute force: U by pair counting, p by enumerating every relabelling of the pooled values.
std::pair<double, double> brute_mann_whitney(const std::vector<double>& a, const std::vector<double>& b) {
  auto u_of = [](const std::vector<double>& x, const std::vector<double>& y) {
    double u = 0.0;
    for (double xi : x)
      for (double yj : y) u += xi > yj ? 1.0 : xi == yj ? 0.5 : 0.0;
    return u;
  };
  const double u = u_of(a, b);
  const double mean = static_cast<double>(a.size() * b.size()) / 2.0;
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  std::vector<int> in_a(pooled.size(), 0);
  std::fill(in_a.end() - static_cast<std::ptrdiff_t>(a.size()), in_a.end(), 1);
  std::size_t hits = 0, total = 0;
  do {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < pooled.size(); ++i) (in_a[i] ? x : y).push_back(pooled[i]);
    ++total;
    hits += std::abs(u_of(x, y) - mean) >= std::abs(u - mean);
  } while (std::next_permutation(in_a.begin(), in_a.end()));
  return {u, static_cast<double>(hits) / static_cast<double>(total)};
}

// Every multiset over {0,1,2} of size n, sorted (the test is order-invariant within a sample).
std::vector<std::vector<double>> multisets(std::size_t n) {
  std::vector<std::vector<double>> out;
  for (std::size_t zeros = 0; zeros <= n; ++zeros)
    for (std::size_t ones = 0; zeros + ones <= n; ++ones) {
      std::vector<double> v(zeros, 0.0);
      v.insert(v.end(), ones, 1.0);
      v.insert(v.end(), n - zeros - ones, 2.0);
      out.push_back(std::move(v));
    }
  return out;
}

Verdict criterion_11() {
  std::size_t cases = 0, bad = 0;
  for (std::size_t na = 1; na <= 6; ++na)
    for (std::size_t nb = 1; nb <= 6; ++nb)
      for (const auto& a : multisets(na))
        for (const auto& b : multisets(nb)) {
          const auto got = harness::mann_whitney_u(a, b);
          const auto [u, p] = brute_mann_whitney(a, b);
          ++cases;
          bad += !(got.exact && got.u == u && got.p == p);
        }
  return {bad == 0, std::to_string(cases) + " sample pairs up to 6x6 over {0,1,2}, " + std::to_string(bad) + " mismatches"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Verdict()>> criteria{criterion_1, criterion_2, criterion_3, criterion_4,
                                                       criterion_5, criterion_6, criterion_7, criterion_8,
                                                       criterion_9, criterion_10, criterion_11};
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  if (which.empty())
    for (int i = 1; i <= 11; ++i) which.push_back(i);
  bool all = true;
  for (int n : which) {
    if (n < 1 || n > 11) {
      std::cerr << "no criterion " << n << '\n';
      return 2;
    }
    Verdict v;
    try {
      v = criteria[n - 1]();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << n << ": " << (v.pass ? "PASS" : "FAIL") << " (" << v.detail << ")" << std::endl;
    all = all && v.pass;
  }
  return all ? 0 : 1;
}
