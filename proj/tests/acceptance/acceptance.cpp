// Copyright 2026 The replearn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acceptance suite: one PASS/FAIL line per criterion. Tolerances and sizes
// are fixed here; run with --only NAME to run a single criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "replearn/balls.hpp"
#include "replearn/coupling.hpp"
#include "replearn/domain.hpp"
#include "replearn/harness.hpp"
#include "replearn/learner.hpp"
#include "replearn/spectral.hpp"
#include "replearn/stats.hpp"

namespace {

using namespace replearn;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  const char* name;
  double time_limit_s;
  std::function<Outcome()> run;
};

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<HypothesisIndex> all_tuples(int d, int k) {
  std::vector<HypothesisIndex> out;
  std::uint64_t total = 1;
  for (int a = 0; a < d; ++a) total *= static_cast<std::uint64_t>(k);
  for (std::uint64_t c = 0; c < total; ++c) out.push_back(HypothesisIndex::decode(c, d, k));
  return out;
}

// ---- spectrum

Outcome spectrum_exactness() {
  constexpr double kEigTol = 1e-9;
  constexpr double kTraceTol = 1e-6;
  double worst_dev = 0.0, worst_trace = 0.0;
  for (auto [d, k] : {std::pair{1, 3}, std::pair{1, 5}, std::pair{2, 3}, std::pair{2, 5}, std::pair{3, 3}}) {
    const auto r = spectral::eigen_check(d, k);
    worst_dev = std::max(worst_dev, r.max_abs_deviation);
    worst_trace = std::max(worst_trace, r.trace_relative_error);
  }
  return {worst_dev <= kEigTol && worst_trace <= kTraceTol,
          fmt("max eigenvalue deviation %.3g (tol %.0e), max trace relative error %.3g (tol %.0e)", worst_dev,
              kEigTol, worst_trace, kTraceTol)};
}

// ---- error oracle

// Fraction of the d k points where the two interval labelings differ, by
// walking each interval explicitly.
double disagreement(const HypothesisIndex& u, const HypothesisIndex& v) {
  const int d = u.d(), k = u.k();
  std::vector<int> fu(static_cast<std::size_t>(d * k), 0), fv = fu;
  for (int a = 0; a < d; ++a) {
    for (int s = 0; s < k / 2; ++s) {
      fu[static_cast<std::size_t>(a * k + (u[static_cast<std::size_t>(a)] + s) % k)] = 1;
      fv[static_cast<std::size_t>(a * k + (v[static_cast<std::size_t>(a)] + s) % k)] = 1;
    }
  }
  int diff = 0;
  for (std::size_t i = 0; i < fu.size(); ++i) diff += fu[i] != fv[i];
  return static_cast<double>(diff) / (d * k);
}

Outcome error_oracle() {
  std::uint64_t pairs = 0, mismatches = 0;
  for (int d : {1, 2}) {
    for (int k : {3, 5, 7}) {
      const Params p(d, k, 0.1, 0.1, 0.1, 0);
      const auto all = all_tuples(d, k);
      for (const auto& u : all) {
        for (const auto& v : all) {
          ++pairs;
          mismatches += exact_error(u, v, p) != disagreement(u, v);
        }
      }
    }
  }
  return {mismatches == 0, fmt("%llu pairs, %llu mismatches", static_cast<unsigned long long>(pairs),
                               static_cast<unsigned long long>(mismatches))};
}

// ---- balls

std::uint64_t enumerate_ball(int d, int r, std::optional<int> k) {
  const int lo = k ? 0 : -r, hi = k ? *k - 1 : r;
  std::vector<int> x(static_cast<std::size_t>(d), lo);
  std::uint64_t count = 0;
  for (;;) {
    int norm = 0;
    for (int v : x) norm += k ? std::min(v, *k - v) : std::abs(v);
    count += norm <= r;
    std::size_t a = 0;
    while (a < x.size() && ++x[a] > hi) x[a++] = lo;
    if (a == x.size()) return count;
  }
}

Outcome ball_counting() {
  int checked = 0, wrong = 0, bound_fail = 0;
  for (int d = 1; d <= 4; ++d) {
    for (int r = 0; r <= 6; ++r) {
      const BigInt unb = BallTable(BallSpec::unbounded(d, r)).volume();
      ++checked;
      wrong += unb != enumerate_ball(d, r, std::nullopt);
      wrong += unb != l1_ball_count(d, r);
      if (r >= 1) bound_fail += unb > BigInt(static_cast<std::uint64_t>(std::pow(6, d) * r * r));
      for (int k : {5, 7, 11}) {
        ++checked;
        wrong += BallTable(BallSpec::wrap(d, r, k)).volume() != enumerate_ball(d, r, k);
      }
    }
  }
  return {wrong == 0 && bound_fail == 0,
          fmt("%d counts checked, %d mismatches, %d volume-bound violations (r >= 1)", checked, wrong, bound_fail)};
}

// ---- majorization

Outcome majorization() {
  constexpr double kTol = 1e-9;
  SplitMix64 rng(20260101);
  double worst = 0.0;
  int bad = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int d = static_cast<int>(rng.below(21));
    std::vector<double> a(static_cast<std::size_t>(d)), b(static_cast<std::size_t>(d));
    for (auto& v : a) v = rng.uniform();
    for (auto& v : b) v = rng.uniform();
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<double> x(static_cast<std::size_t>(d) + 1), y(static_cast<std::size_t>(d) + 1);
    double fx = 0.0, fy = 0.0;
    for (int t = 0; t <= d; ++t) {
      const auto ts = static_cast<std::size_t>(t);
      const double nx = t < d ? std::min(a[ts], b[ts]) : 1.0;
      const double ny = t < d ? std::max(a[ts], b[ts]) : 1.0;
      x[ts] = nx - fx;
      y[ts] = ny - fy;
      fx = nx;
      fy = ny;
    }
    const auto c = check_coupling(majorization_coupling(x, y), x, y);
    worst = std::max({worst, c.range, c.row_sum, c.transport});
    bad += !c.ok(kTol);
  }
  const std::vector<double> c0 = {3.0};
  const auto base = majorization_coupling(c0, c0);
  const std::vector<double> x = {1, 1}, y = {2, 0};
  const auto ex = majorization_coupling(x, y);
  const bool exact = base(0, 0) == 1.0 && ex(1, 1) == 0.0 && ex(1, 0) == 1.0 && ex(0, 0) == 1.0 &&
                     x[0] * ex(0, 0) + x[1] * ex(1, 0) == 2.0;
  return {bad == 0 && exact, fmt("1000 instances, %d outside tol %.0e (worst %.3g); base case and worked example %s",
                                 bad, kTol, worst, exact ? "exact" : "WRONG")};
}

// ---- random step

Outcome random_step_distribution() {
  constexpr double kTvTol = 0.01;
  constexpr double kAlpha = 1e-3;
  constexpr std::uint64_t kTrials = 1'000'000;
  const Params p(3, 11, 0.1, 0.1, 0.1, 20);
  SplitMix64 rng(7);
  const auto r = verify_step_distribution(p, kTrials, rng);

  const Params empty(3, 11, 0.1, 0.1, 0.1, 0);
  SplitMix64 erng(8);
  const auto e = verify_step_distribution(empty, kTrials, erng);
  const double p_empty = e.kept_size_chi2.p_value;

  const bool tv_ok = r.direction_tv < kTvTol;
  const bool labels_ok = r.label_violations == 0 && r.support_violations == 0;
  const bool empty_ok = p_empty > kAlpha;
  std::string detail = fmt(
      "TV(v-u, uniform on Z) = %.4f (tol %.2f) %s; label violations %llu of %llu; empty-S |P'| chi2 = %.3f, p = %.3g "
      "(alpha %.0e) %s",
      r.direction_tv, kTvTol, tv_ok ? "ok" : "FAIL", static_cast<unsigned long long>(r.label_violations),
      static_cast<unsigned long long>(kTrials), e.kept_size_chi2.statistic, p_empty, kAlpha, empty_ok ? "ok" : "FAIL");
  if (!r.dominance.holds) {
    detail += "; " + r.dominance.diagnostics();
  }
  return {tv_ok && labels_ok && empty_ok, detail};
}

// ---- matching invariant

Outcome matching_invariant() {
  constexpr int kTriples = 100'000;
  std::uint64_t mutual = 0, violations = 0;
  for (int t = 0; t < kTriples; ++t) {
    const std::int64_t n = std::int64_t{25} << (t % 4);
    const Params p(4, 29, 0.3, 0.1, 0.1, n);
    const auto R = p.acceptance_radius();
    auto ts = derive_stream(99, static_cast<std::uint64_t>(t), StreamRole::kTarget);
    auto ks = derive_stream(99, static_cast<std::uint64_t>(t), StreamRole::kKey);
    auto s1 = derive_stream(99, static_cast<std::uint64_t>(t), StreamRole::kSample1);
    auto s2 = derive_stream(99, static_cast<std::uint64_t>(t), StreamRole::kSample2);
    const auto target = random_hypothesis(p, ts);
    const auto key = SharedKey::from_stream(ks);
    const auto a = replicable_learn_detailed(sample_training_set(p, target, s1), p, key);
    const auto b = replicable_learn_detailed(sample_training_set(p, target, s2), p, key);
    if (tuple_distance(a.output, b.estimate.center) <= R && tuple_distance(b.output, a.estimate.center) <= R) {
      ++mutual;
      violations += !(a.output == b.output);
    }
  }
  return {violations == 0, fmt("%d triples (n in 25..200), %llu mutually accepted, %llu violations", kTriples,
                               static_cast<unsigned long long>(mutual), static_cast<unsigned long long>(violations))};
}

// ---- replicability trend

Outcome replicability_trend() {
  constexpr double kCiWidths = 2.0;
  ExperimentConfig c;
  c.params = Params(4, 29, 0.3, 0.1, 0.1, 50);
  c.trials = 2000;
  c.master_seed = 2026;
  c.sweep_n = {50, 100, 200, 400, 800};
  std::ostringstream csv;
  const auto reps = sweep_experiments(c, csv);
  const auto trend = check_non_increasing(reps, kCiWidths);
  const double err = reps.back().err_rate;
  std::string rhos;
  for (const auto& r : reps) rhos += fmt("%s%.4f", rhos.empty() ? "" : ",", r.rho_hat);
  const bool err_ok = err <= c.params.delta();
  return {trend.ok && err_ok, fmt("rho_hat = [%s], worst isotonic deviation %.2f CI widths (tol %.1f); "
                                  "err_rate at n=800 = %.4f (delta %.2f)",
                                  rhos.c_str(), trend.worst, kCiWidths, err, c.params.delta())};
}

// ---- micro-scale mode

// Transition estimate by explicit scan of the observed positions.
std::vector<std::int32_t> scan_center(const std::vector<LabeledPoint>& S, int d) {
  std::vector<std::int32_t> c(static_cast<std::size_t>(d), 0);
  for (int a = 0; a < d; ++a) {
    std::map<int, int> seen;
    for (const auto& lp : S) {
      if (lp.point.axis == a) seen.emplace(lp.point.position, lp.label);
    }
    bool z = false, o = false;
    for (const auto& [b, l] : seen) (l ? o : z) = true;
    if (!z || !o) continue;
    for (auto it = seen.begin(); it != seen.end(); ++it) {
      const int prev = it == seen.begin() ? seen.rbegin()->second : std::prev(it)->second;
      if (it->second == 1 && prev == 0) {
        c[static_cast<std::size_t>(a)] = it->first;
        break;
      }
    }
  }
  return c;
}

Outcome mode_micro() {
  int cases = 0, mismatches = 0, partition_bad = 0;
  for (auto [d, k] : {std::pair{1, 3}, std::pair{2, 3}}) {
    for (double frac : {0.25, 1.0}) {
      Params p(d, k, 0.5, 0.1, 0.1, 2);
      p.set_radius_fraction(frac);
      const SharedKey key{0x5eed, static_cast<std::uint64_t>(d * 10 + static_cast<int>(frac * 4))};
      // The full shuffle of H, materialized.
      auto order = all_tuples(d, k);
      std::sort(order.begin(), order.end(), [&](const auto& x, const auto& y) {
        const auto px = hypothesis_priority(key, x), py = hypothesis_priority(key, y);
        return px != py ? px < py : x < y;
      });
      const int points = d * k;
      for (const auto& target : all_tuples(d, k)) {
        ++cases;
        std::map<Labeling, std::uint64_t> tally;
        for (int s0 = 0; s0 < points; ++s0) {
          for (int s1 = 0; s1 < points; ++s1) {
            std::vector<LabeledPoint> S;
            for (int s : {s0, s1}) {
              const Point pt{s / k, s % k};
              S.push_back({pt, evaluate_hypothesis(target, pt)});
            }
            const HypothesisIndex center(scan_center(S, d), k);
            const auto first = *std::find_if(order.begin(), order.end(), [&](const auto& h) {
              return tuple_distance(center, h) <= p.acceptance_radius();
            });
            ++tally[labeling_of(first)];
          }
        }
        Labeling mode;
        std::uint64_t best = 0;
        for (const auto& [f, c] : tally) {
          if (c > best) {
            best = c;
            mode = f;
          }
        }
        const auto e = exact_mode(p, target, key);
        mismatches += !(e.distribution == tally && e.mode_labeling == mode && e.mode_count == best);
      }
      const auto mc = build_mode_classes(p, key);
      std::set<HypothesisIndex> seen;
      std::size_t members = 0;
      for (const auto& [f, us] : mc.class_map) {
        for (const auto& u : us) {
          partition_bad += !seen.insert(u).second;
          partition_bad += !(mc.entries[u.encode()].mode_labeling == f);
        }
        members += us.size();
      }
      partition_bad += members != mc.retained || mc.retained + mc.dropped != order.size();
    }
  }
  return {mismatches == 0 && partition_bad == 0,
          fmt("%d (target, radius) cases against exhaustive tabulation, %d mismatches; %d partition defects", cases,
              mismatches, partition_bad)};
}

// ---- Littlewood-Offord

Outcome littlewood_offord() {
  SplitMix64 rng(64);
  int exact_cases = 0, exceed = 0;
  double worst_ratio = 0.0;
  for (std::size_t s = 1; s <= 12; ++s) {
    for (int k : {5, 11, 101}) {
      for (int rep = 0; rep < 3; ++rep) {
        std::vector<std::int64_t> x;
        for (std::size_t i = 0; i < s; ++i) x.push_back(1 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(k - 1))));
        for (std::int64_t y : {std::int64_t{0}, std::int64_t{1}, static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(k)))}) {
          const auto r = spectral::littlewood_offord_estimate(x, y, k, 1, rng);
          ++exact_cases;
          exceed += !r.exact || r.estimate > r.bound;
          worst_ratio = std::max(worst_ratio, r.estimate / r.bound);
        }
      }
    }
  }
  std::vector<std::int64_t> x64;
  for (int i = 0; i < 64; ++i) x64.push_back(1 + static_cast<std::int64_t>(rng.below(100)));
  const auto mc = spectral::littlewood_offord_estimate(x64, 0, 101, 200'000, rng);
  const bool mc_ok = mc.estimate <= mc.bound + 3.0 * mc.sigma;
  return {exceed == 0 && mc_ok,
          fmt("%d exact cases (s <= 12), %d above bound (max estimate/bound %.3f); s=64: %.5f <= %.3f + 3*%.2g %s",
              exact_cases, exceed, worst_ratio, mc.estimate, mc.bound, mc.sigma, mc_ok ? "ok" : "FAIL")};
}

// ---- tail implication

Outcome tail_implication() {
  constexpr std::int64_t kTrials = 100'000;
  std::uint64_t violations = 0, eigen_hits = 0;
  SplitMix64 rng(46);
  for (int d : {3, 4}) {
    for (int k : {11, 13}) {
      const auto r = spectral::tail_and_moment_estimate(d, k, 2, kTrials, rng);
      violations += r.implication_violations;
      eigen_hits += r.eigen_tail_hits;
    }
  }
  return {violations == 0, fmt("4 x %lld draws of u, %llu eigenvalue-tail hits, %llu violations",
                               static_cast<long long>(kTrials), static_cast<unsigned long long>(eigen_hits),
                               static_cast<unsigned long long>(violations))};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {"spectrum_exactness", 60, spectrum_exactness},
      {"error_oracle", 10, error_oracle},
      {"ball_counting", 60, ball_counting},
      {"majorization", 10, majorization},
      {"random_step", 300, random_step_distribution},
      {"matching_invariant", 120, matching_invariant},
      {"replicability_trend", 600, replicability_trend},
      {"mode_micro", 60, mode_micro},
      {"littlewood_offord", 60, littlewood_offord},
      {"tail_implication", 120, tail_implication},
  };

  std::string only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only = argv[++i];
    } else if (arg == "--list") {
      for (const auto& c : criteria) std::printf("%s\n", c.name);
      return 0;
    } else {
      std::fprintf(stderr, "usage: %s [--only NAME] [--list]\n", argv[0]);
      return 2;
    }
  }

  int failed = 0, ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && only != c.name) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.time_limit_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s %s: %s [%.1fs, limit %.0fs%s]\n", pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs,
                c.time_limit_s, in_time ? "" : ", too slow");
    std::fflush(stdout);
  }
  if (ran == 0) {
    std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
