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

#pragma once

// Majorization coupling and the random-step sampler: from a uniform u and a
// sample S, take a step v = u + z' with z' uniform on {-1, 0, 1}^d that
// never changes a label on S.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "replearn/domain.hpp"
#include "replearn/rng.hpp"
#include "replearn/stats.hpp"

namespace replearn {

// Lower-triangular transport matrix: row i has entries p(i, 0..i).
class CouplingMatrix {
 public:
  CouplingMatrix() = default;
  explicit CouplingMatrix(int d);

  int d() const noexcept { return static_cast<int>(rows_.size()) - 1; }
  double operator()(int i, int j) const { return rows_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; }
  double& operator()(int i, int j) { return rows_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; }
  std::span<const double> row(int i) const { return rows_[static_cast<std::size_t>(i)]; }

 private:
  std::vector<std::vector<double>> rows_;
};

// Greedy top-down construction. Row m takes p(m, m) = y_m / x_m and then
// p(m, j) = min(y_j / x_m, 1 - sum_{l > j} p(m, l)) for j = m-1 .. 0, after
// which y_j -= x_m p(m, j) and the recursion continues on 0..m-1. A row with
// x_m = 0 is set to the uniform 1/(m+1).
//
// Throws UsageError naming the failed property ("non-negative", "equal sum",
// "dominating") when x, y are not a valid instance. Sums are compared with
// relative tolerance tol.
CouplingMatrix majorization_coupling(std::span<const double> x, std::span<const double> y,
                                     double tol = 1e-9);

// Largest violation of each coupling property (0 means exact).
struct CouplingCheck {
  double range = 0.0;      // max(-p, p - 1, 0) over all entries
  double row_sum = 0.0;    // max_i |sum_j p(i, j) - 1|
  double transport = 0.0;  // max_j |sum_i x_i p(i, j) - y_j|
  bool ok(double tol) const { return range <= tol && row_sum <= tol && transport <= tol; }
};

CouplingCheck check_coupling(const CouplingMatrix& p, std::span<const double> x,
                             std::span<const double> y);

// The two points of axis a on which h_u and h_{u + sigma e_a} disagree.
std::pair<Point, Point> boundary_points(const HypothesisIndex& u, int axis, int sigma);

// P = {a : h_u(S) = h_{u + sigma_a e_a}(S)}, ascending.
std::vector<int> candidate_direction_set(const HypothesisIndex& u, std::span<const std::int8_t> sigma,
                                         const LabeledSample& S, const Params& params);

// A law of |P| on {0, ..., d}.
struct SizeLaw {
  enum class Source { kExact, kEmpirical, kSupplied };

  std::vector<double> probs;
  Source source = Source::kSupplied;
  std::uint64_t draws = 0;  // Monte Carlo draws behind an empirical law

  int d() const noexcept { return static_cast<int>(probs.size()) - 1; }
  static SizeLaw supplied(std::vector<double> probs);
};

std::string to_string(SizeLaw::Source s);

// Exact law of |P| for u uniform, sigma uniform and S ~ D^n. Every axis owns
// two boundary points, all 2d of them distinct, and |P| = d - #axes whose
// pair S hits. A draw hits a fresh pair with probability 2(d - h)/(dk) when
// h pairs are already hit, so the hit count is a Markov chain in the draws.
SizeLaw exact_candidate_size_law(int d, int k, std::int64_t n);

// Pre-pass of `draws` Monte Carlo draws of (u, sigma, S).
SizeLaw empirical_candidate_size_law(const Params& params, std::uint64_t draws, SplitMix64& rng);

// Binomial(d, 2/3): the number of nonzero coordinates of z uniform on Z.
std::vector<double> target_size_law(int d);

struct DominanceReport {
  std::vector<double> cdf_p;
  std::vector<double> cdf_q;
  double margin = 0.0;
  // max_t (F_P(t) - F_Q(t)), clamped below at 0.
  double worst_gap = 0.0;
  int worst_t = -1;
  bool holds = true;  // worst_gap <= margin
  // Since P' is a subset of P, F_{P'} >= F_P pointwise, so worst_gap is a
  // lower bound on TV(|P'|, Binomial(d, 2/3)) and on TV(v - u, uniform on Z).
  double tv_lower_bound = 0.0;
  // k >= 4n / (ln(81/80) d).
  double regime_k_min = 0.0;
  bool regime_holds = true;

  std::string diagnostics() const;
};

// margin: 1e-12 for exact laws; a DKW band sqrt(ln(2/alpha) / (2 draws)) for
// empirical ones.
DominanceReport check_dominance(const SizeLaw& law, const Params& params, double margin);

double dkw_margin(std::uint64_t draws, double alpha = 1e-3);

enum class DominancePolicy {
  // A violation beyond the margin throws VerificationError.
  kStrict,
  // Proceeds with F = min(F_P, F_Q), the largest law dominated by the target,
  // and flags the run; the step law is then biased by at least worst_gap.
  kReportOnly,
};

struct StepOutcome {
  HypothesisIndex u;
  HypothesisIndex v;
  std::vector<std::int8_t> direction;  // v - u, entries in {-1, 0, 1}
  std::vector<int> candidate_set;      // P
  std::vector<int> kept;               // P', ascending
  std::vector<std::int8_t> signs;      // sigma
};

// Balanced-ternary index of a direction: sum_a (z_a + 1) 3^a. Matches the
// generator order of the Cayley graph.
std::uint64_t direction_index(std::span<const std::int8_t> z);

class StepSampler {
 public:
  StepSampler(const Params& params, SizeLaw law, DominancePolicy policy = DominancePolicy::kStrict,
              std::optional<double> margin = std::nullopt);

  const Params& params() const noexcept { return params_; }
  const SizeLaw& law() const noexcept { return law_; }
  // The law actually fed to the coupling (equal to law() unless repaired).
  std::span<const double> coupled_law() const noexcept { return coupled_; }
  const CouplingMatrix& coupling() const noexcept { return coupling_; }
  const DominanceReport& dominance() const noexcept { return dominance_; }
  bool repaired() const noexcept { return repaired_; }

  // S must hold params.n() points.
  StepOutcome step(const HypothesisIndex& u, const LabeledSample& S, SplitMix64& rng) const;

 private:
  Params params_;
  SizeLaw law_;
  std::vector<double> coupled_;
  CouplingMatrix coupling_;
  DominanceReport dominance_;
  bool repaired_ = false;
};

// One step with the exact law of |P| and the strict policy.
StepOutcome random_step(const HypothesisIndex& u, const LabeledSample& S, const Params& params,
                        SplitMix64& rng);

struct StepVerification {
  int d = 0;
  int k = 0;
  std::int64_t n = 0;
  std::uint64_t trials = 0;
  DominanceReport dominance;
  bool repaired = false;

  // (a) v - u against uniform on Z.
  std::vector<std::uint64_t> direction_counts;  // by direction_index
  double direction_tv = 0.0;
  stats::ChiSquareResult direction_chi2;

  // (b) v and u against uniform on Z_k^d, binned on leading coordinates.
  std::size_t v_bins = 0;
  double v_tv = 0.0;
  stats::ChiSquareResult v_chi2;
  double u_tv = 0.0;

  // (c) v-bin against a hash bucket of S, and v - u against the same bucket.
  std::size_t s_buckets = 0;
  stats::ChiSquareResult v_given_s_chi2;
  stats::ChiSquareResult direction_given_s_chi2;

  // |P'| against Binomial(d, 2/3).
  std::vector<std::uint64_t> kept_size_counts;
  double kept_size_tv = 0.0;
  stats::ChiSquareResult kept_size_chi2;
  std::vector<std::uint64_t> candidate_size_counts;

  std::uint64_t label_violations = 0;
  std::uint64_t support_violations = 0;  // v - u outside Z or a move outside P
};

inline constexpr int kMaxVerifyDimension = 10;

// u uniform, S ~ D^{params.n()}, one step per trial. Trial t draws from
// derive_stream(master, t, role) with master taken from rng, so the report
// does not depend on how trials are scheduled. Uses the exact law of |P|
// with the report-only policy; check dominance.holds before trusting (a).
StepVerification verify_step_distribution(const Params& params, std::uint64_t trials, SplitMix64& rng);

}  // namespace replearn
