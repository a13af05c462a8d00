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

// The Cayley graph G on Z_k^d with generator set Z = {-1, 0, 1}^d: analytic
// spectrum, edge counts, eigenvalue-tail indicators, central moments, ranks
// over F_k and Littlewood-Offord estimates.

#include <cstdint>
#include <span>
#include <vector>

#include "replearn/domain.hpp"
#include "replearn/rng.hpp"
#include "replearn/stats.hpp"

namespace replearn::spectral {

inline constexpr std::uint64_t kMaxDenseNodes = 2000;
inline constexpr std::uint64_t kMaxGenerators = 1'000'000;
inline constexpr std::uint64_t kMaxEnumeratedNodes = 1'000'000;

// Z in balanced-ternary order: generator g encodes the integer
// g - (3^d - 1)/2, coordinate 0 holding the least significant trit. Hence
// g = 0 is (-1, ..., -1), the middle generator is 0, and generators g and
// 3^d - 1 - g are negatives of each other.
class CayleyInstance {
 public:
  CayleyInstance(int d, int k);

  int d() const noexcept { return d_; }
  int k() const noexcept { return k_; }
  std::uint64_t generator_count() const noexcept { return generator_count_; }
  // k^d; throws ResourceError when it does not fit in 64 bits.
  std::uint64_t node_count() const;

  std::span<const std::int8_t> generator(std::uint64_t g) const {
    return {generators_.data() + g * static_cast<std::uint64_t>(d_), static_cast<std::size_t>(d_)};
  }

  // <v, z> mod k as a representative in [0, k).
  std::int64_t inner(std::span<const std::int32_t> v, std::uint64_t g) const;

 private:
  int d_;
  int k_;
  std::uint64_t generator_count_;
  std::vector<std::int8_t> generators_;
};

// lambda_v = |Z| - 2 sum_{z in Z} sin^2(pi <v, z> / k).
double analytic_eigenvalue(std::span<const std::int32_t> v, const CayleyInstance& g);

// lambda_v for every v, indexed by HypothesisIndex::encode().
std::vector<double> analytic_spectrum(const CayleyInstance& g);

struct SpectrumReport {
  int d = 0;
  int k = 0;
  std::vector<double> eigenvalues;         // analytic, indexed by encode(v)
  std::vector<double> dense_eigenvalues;   // ascending
  double max_abs_deviation = 0.0;          // sorted analytic vs dense
  double trace = 0.0;                      // sum of analytic eigenvalues
  double trace_relative_error = 0.0;       // |trace - k^d| / k^d
  double orthonormality_deviation = 0.0;   // max |<chi_v, chi_w> - [v == w]|
  double eigenvector_residual = 0.0;       // max |A chi_v - lambda_v chi_v|
  std::vector<std::uint64_t> histogram;    // analytic values over [-|Z|, |Z|]
  double histogram_lo = 0.0;
  double histogram_hi = 0.0;
};

// Dense cross-check: builds A, eigendecomposes it, compares against the
// analytic multiset and checks the characters chi_v(w) = k^{-d/2} e^{2 pi i <v,w>/k}.
// Throws ResourceError when k^d > kMaxDenseNodes.
SpectrumReport eigen_check(int d, int k, std::size_t histogram_buckets = 20);

// Directed pairs (u, v) in T x T with v - u in Z. Duplicates in T are ignored.
std::uint64_t internal_edge_count(std::span<const HypothesisIndex> T, const CayleyInstance& g);

// |T| |Z| - internal_edge_count(T).
std::uint64_t escaping_edge_count(std::span<const HypothesisIndex> T, const CayleyInstance& g);

// internal_edge_count(T) / (|T| |Z|).
double expansion_ratio(std::span<const HypothesisIndex> T, const CayleyInstance& g);

// I = {floor(k/4) + 1, ..., floor(k/4) + floor(k/2)}.
struct TailInterval {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
  explicit TailInterval(int k) : lo(k / 4 + 1), hi(k / 4 + k / 2) {}
  std::int64_t size() const { return hi - lo + 1; }
  bool contains(std::int64_t r) const { return lo <= r && r <= hi; }
};

// X_z = 1 iff <u, z> mod k lies outside I, in generator order.
std::vector<std::uint8_t> tail_indicators(std::span<const std::int32_t> u, const CayleyInstance& g);

// sum_z X_z.
std::int64_t indicator_sum(std::span<const std::int32_t> u, const CayleyInstance& g);

// E[sum_z X_z] for uniform u: 1 + (3^d - 1)(1 - floor(k/2)/k).
double indicator_sum_mean(const CayleyInstance& g);

// sum_z X_z >= (42/50)|Z|, evaluated in integers.
inline bool indicator_tail_event(std::int64_t sum, std::uint64_t generators) {
  return 50 * sum >= 42 * static_cast<std::int64_t>(generators);
}

// lambda > (46/50)|Z|.
inline bool eigenvalue_tail_event(double lambda, std::uint64_t generators) {
  return lambda > 0.92 * static_cast<double>(generators);
}

struct TailReport {
  int d = 0;
  int k = 0;
  int r = 0;
  std::int64_t trials = 0;
  std::uint64_t tail_hits = 0;
  double p_hat = 0.0;
  stats::Interval p_ci;
  double mean_exact = 0.0;
  double moment_hat = 0.0;  // mean of (sum X_z - mean_exact)^r
  std::uint64_t eigen_tail_hits = 0;
  std::uint64_t implication_violations = 0;  // lambda tail without indicator tail
};

// Monte Carlo over uniform u. Throws UsageError for odd r or trials < 1 and
// ResourceError when 3^d > kMaxGenerators.
TailReport tail_and_moment_estimate(int d, int k, int r, std::int64_t trials, SplitMix64& rng);

struct ExactTail {
  std::uint64_t tail_count = 0;
  std::uint64_t eigen_tail_count = 0;
  std::uint64_t nodes = 0;
  std::uint64_t implication_violations = 0;
  double p() const { return static_cast<double>(tail_count) / static_cast<double>(nodes); }
};

// Exhaustive over all u in Z_k^d (k^d <= kMaxEnumeratedNodes).
ExactTail exact_tail(int d, int k);

// Rows of a matrix over F_k; entries are reduced mod k.
using ModMatrix = std::vector<std::vector<std::int64_t>>;

// Rank over F_k by Gaussian elimination. k must be prime.
int rank_mod_k(ModMatrix m, int k);

struct LowRankReport {
  int d = 0;
  int r = 0;
  int k = 0;
  std::int64_t trials = 0;
  double threshold = 0.0;         // r - log_3(d)
  std::uint64_t low_rank = 0;     // draws with rank <= threshold
  double fraction = 0.0;
  stats::Interval ci;
  std::vector<std::uint64_t> rank_histogram;  // index 0..min(d, r)
  double bound = 0.0;             // d^{-d/2} / d
  bool bound_applies = false;     // r <= d/2
};

// Y has r columns drawn i.i.d. uniform on {-1, 0, 1}^d.
LowRankReport low_rank_fraction_estimate(int d, int r, int k, std::int64_t trials, SplitMix64& rng);

struct LittlewoodOffordReport {
  std::size_t s = 0;
  bool exact = false;
  double estimate = 0.0;
  double sigma = 0.0;  // 0 when exact
  double bound = 0.0;  // min{1/2, 1/k + e^{-s/8} + sqrt(32/s)}
  bool within_bound = true;  // estimate <= bound + 3 sigma
};

inline constexpr std::uint64_t kMaxExactSignPatterns = 1'000'000;

double littlewood_offord_bound(std::size_t s, int k);

// Pr[sum_i eps_i x_i = y (mod k)] for eps_i uniform in {-1, 0, 1}; exact when
// 3^s <= kMaxExactSignPatterns, Monte Carlo otherwise.
LittlewoodOffordReport littlewood_offord_estimate(std::span<const std::int64_t> x, std::int64_t y,
                                                  int k, std::int64_t trials, SplitMix64& rng);

struct IndependenceVerdict {
  bool precondition_holds = false;   // y_1 not in span(y_2, ...)
  bool factorizes = false;           // joint law = product of marginals, exactly
  bool first_marginal_uniform = false;
  int rank_all = 0;
  int rank_rest = 0;
};

inline constexpr std::uint64_t kMaxIndependenceNodes = 100'000;

// Exact check over all v in F_k^d that <y_1, v> is independent of
// (<y_2, v>, ..., <y_r, v>).
IndependenceVerdict inner_product_independence_check(const ModMatrix& ys, int k);

}  // namespace replearn::spectral
