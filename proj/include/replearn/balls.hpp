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

// Exact counting and uniform sampling of l1 balls in Z^d and wrap-around
// l1 balls in Z_k^d.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "replearn/domain.hpp"
#include "replearn/rng.hpp"

namespace replearn {

using BigInt = boost::multiprecision::cpp_int;

struct BallSpec {
  int d = 1;
  std::int64_t radius = 0;
  // Present for wrap-around balls in Z_k^d; absent for Z^d.
  std::optional<int> modulus;

  static BallSpec unbounded(int d, std::int64_t radius);
  static BallSpec wrap(int d, std::int64_t radius, int k);

  // Largest distance a single coordinate can contribute.
  std::int64_t coordinate_cap() const;
};

// Shell counts of a ball plus the suffix tables used for exact sampling.
//
// shell(j, t) is the number of ways coordinates j..d-1 can contribute a total
// distance of exactly t. Each coordinate contributes 0 in one way and any
// 1 <= t <= cap in two ways (two signs). For odd k the two representatives
// at distance floor(k/2) are distinct, so the rule holds up to the cap.
class BallTable {
 public:
  explicit BallTable(const BallSpec& spec);

  const BallSpec& spec() const noexcept { return spec_; }
  // Largest meaningful distance: min(radius, d * cap).
  std::int64_t max_distance() const noexcept { return max_t_; }

  // counts()[t] = number of points at distance exactly t, t = 0..max_distance().
  std::span<const BigInt> counts() const noexcept { return shells_.front(); }
  // Number of points at distance <= t (t may exceed max_distance()).
  BigInt cumulative(std::int64_t t) const;
  const BigInt& volume() const noexcept { return prefix_.front().back(); }

  // Uniform offset vector over the ball: total distance first, then a
  // coordinate-by-coordinate split weighted by the suffix shell counts.
  // Exact: all choices are made with big-integer draws.
  std::vector<std::int32_t> sample(SplitMix64& rng) const;

 private:
  const BigInt& shell(std::size_t j, std::int64_t t) const;
  // sum_{s <= x} shell(j, s); zero for x < 0.
  BigInt prefix(std::size_t j, std::int64_t x) const;

  BallSpec spec_;
  std::int64_t cap_;
  std::int64_t max_t_;
  std::vector<std::vector<BigInt>> shells_;
  std::vector<std::vector<BigInt>> prefix_;
};

// Uniform integer in [0, bound) for bound > 0.
BigInt uniform_below(const BigInt& bound, SplitMix64& rng);

// |{u in Z^d : ||u||_1 <= r}| = sum_i 2^i C(d, i) C(r, i).
BigInt l1_ball_count(int d, std::int64_t r);

// |{v in Z_k^d : nu(0, v) <= r}|.
BigInt wrap_ball_count(int d, std::int64_t r, int k);

// |B^z_t| = 2^(d-z) C(d, z) C(t-1, d-z-1): points of Z^d with l1 norm t and
// exactly z zero coordinates (t >= 1).
BigInt zero_pattern_shell(int d, int zeros, std::int64_t t);

// Points of Z^d with l1 norm exactly t, summed over zero patterns.
BigInt l1_shell_by_zero_patterns(int d, std::int64_t t);

// Checks |B^z_{t+1}| >= |B^z_t| for all zero counts z and 2d <= t < t_max.
bool zero_pattern_shells_monotone(int d, std::int64_t t_max);

// Offset Delta uniform over the wrap-around ball of radius R in Z_k^d.
// center only fixes (d, k); the caller adds Delta to it.
std::vector<std::int32_t> sample_uniform_wrap_ball(const HypothesisIndex& center, std::int64_t radius,
                                                   const Params& params, SplitMix64& rng);

struct InteriorReport {
  std::int64_t radius = 0;
  double gamma = 0.0;
  double beta = 0.0;
  std::int64_t trials = 0;

  // Interior mass: Pr[||Delta||_1 <= R - q], q = ceil(eps * gamma * k / 96).
  std::int64_t q = 0;
  double interior_exact = 0.0;
  double interior_hat = 0.0;
  double interior_sigma = 0.0;
  bool smallnorm_applies = false;  // k >= 384/(eps rho) and rho/4 <= gamma <= 1/2
  bool smallnorm_holds = true;     // interior_hat + 3 sigma >= 1 - gamma (when applicable)

  // Small coordinates: |{a : |Delta_a| < beta k / 2}|.
  std::vector<std::uint64_t> small_count_histogram;  // index 0..d
  double fewsmall_bound = 0.0;  // 2304 d beta / eps + 3 ln(4 / rho)
  double fewsmall_hat = 0.0;    // fraction of draws with count <= bound
  double fewsmall_sigma = 0.0;
  bool fewsmall_applies = false;  // k >= 384/(eps rho) and beta >= 2/k
  bool fewsmall_holds = true;
};

InteriorReport interior_statistics(const Params& params, std::int64_t radius, double gamma,
                                   double beta, std::int64_t trials, SplitMix64& rng);

}  // namespace replearn
