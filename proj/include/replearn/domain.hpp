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

// The hard instance: points (a, b) in [d] x Z_k, the k^d wrap-around interval
// hypotheses h_i, the wrap-around metric and uniform data sampling.

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "replearn/rng.hpp"

namespace replearn {

// Smallest prime >= target. Requires target >= 2.
std::int64_t choose_prime_k(std::int64_t target);

bool is_prime(std::int64_t n);

// Canonical representative of x mod k in [0, k).
constexpr std::int64_t mod_k(std::int64_t x, std::int64_t k) noexcept {
  const std::int64_t r = x % k;
  return r < 0 ? r + k : r;
}

// Instance parameters. Construction validates every invariant.
class Params {
 public:
  static constexpr std::uint64_t kDefaultBallCap = 100'000'000;

  Params(int d, int k, double epsilon, double rho, double delta, std::int64_t n);

  int d() const noexcept { return d_; }
  int k() const noexcept { return k_; }
  double epsilon() const noexcept { return epsilon_; }
  double rho() const noexcept { return rho_; }
  double delta() const noexcept { return delta_; }
  std::int64_t n() const noexcept { return n_; }
  double beta_constant() const noexcept { return beta_constant_; }
  double radius_fraction() const noexcept { return radius_fraction_; }
  std::uint64_t ball_cap() const noexcept { return ball_cap_; }

  Params& set_n(std::int64_t n);
  Params& set_beta_constant(double c);
  Params& set_radius_fraction(double f);
  Params& set_ball_cap(std::uint64_t cap);

  // floor(k / 2): the interval length and the largest wrap distance.
  int half() const noexcept { return k_ / 2; }
  // |X| = d * k.
  std::int64_t domain_size() const noexcept { return std::int64_t{d_} * k_; }
  // floor(epsilon * k * d * radius_fraction), the acceptance-ball radius.
  std::int64_t acceptance_radius() const noexcept;
  // beta = c * min(eps*rho / sqrt(d ln(2/rho)), eps*rho / ln(4/rho)).
  double beta() const noexcept;

 private:
  int d_;
  int k_;
  double epsilon_;
  double rho_;
  double delta_;
  std::int64_t n_;
  double beta_constant_ = 0.01;
  double radius_fraction_ = 0.25;
  std::uint64_t ball_cap_ = kDefaultBallCap;
};

// n(beta) = ceil(c_n * d * ln(d / rho) / beta).
std::int64_t sample_size_for(const Params& params, double c_n);

// A d-tuple over Z_k naming h_i. Coordinates are stored canonically in [0, k).
class HypothesisIndex {
 public:
  HypothesisIndex() = default;
  HypothesisIndex(std::vector<std::int32_t> coords, int k);

  static HypothesisIndex zero(int d, int k);
  // Inverse of encode(): base-k digits, coordinate 0 most significant.
  static HypothesisIndex decode(std::uint64_t code, int d, int k);

  int d() const noexcept { return static_cast<int>(coords_.size()); }
  int k() const noexcept { return k_; }
  std::span<const std::int32_t> coords() const noexcept { return coords_; }
  std::int32_t operator[](std::size_t a) const { return coords_[a]; }

  // Base-k integer (lexicographic order preserved). Requires k^d < 2^64.
  std::uint64_t encode() const;

  // Component-wise (this + offset) mod k.
  HypothesisIndex shifted(std::span<const std::int32_t> offset) const;

  std::string to_string() const;

  friend bool operator==(const HypothesisIndex&, const HypothesisIndex&) = default;
  friend auto operator<=>(const HypothesisIndex& a, const HypothesisIndex& b) {
    return a.coords_ <=> b.coords_;
  }

 private:
  std::vector<std::int32_t> coords_;
  int k_ = 0;
};

struct Point {
  std::int32_t axis = 0;
  std::int32_t position = 0;
  friend bool operator==(const Point&, const Point&) = default;
  friend auto operator<=>(const Point&, const Point&) = default;
};

struct LabeledPoint {
  Point point;
  std::uint8_t label = 0;
  friend bool operator==(const LabeledPoint&, const LabeledPoint&) = default;
};

// A full labeling f of X, indexed axis * k + position.
using Labeling = std::vector<std::uint8_t>;

class LabeledSample {
 public:
  LabeledSample() = default;

  // Checks every label against target and every point against its (d, k).
  LabeledSample(const HypothesisIndex& target, std::vector<LabeledPoint> points);

  // No label check. For corrupted or externally supplied data.
  static LabeledSample unchecked(std::vector<LabeledPoint> points);

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  std::span<const LabeledPoint> points() const noexcept { return points_; }
  auto begin() const noexcept { return points_.begin(); }
  auto end() const noexcept { return points_.end(); }

 private:
  std::vector<LabeledPoint> points_;
};

// min((x - y) mod k, (y - x) mod k).
std::int64_t wrap_distance(std::int64_t x, std::int64_t y, std::int64_t k);

// Sum of per-coordinate wrap distances. Throws UsageError on (d, k) mismatch.
std::int64_t tuple_distance(const HypothesisIndex& u, const HypothesisIndex& v);

// h_i((a, b)) = 1 iff (b - i_a) mod k < floor(k/2).
inline std::uint8_t evaluate_hypothesis(const HypothesisIndex& i, Point p) {
  const int k = i.k();
  return mod_k(std::int64_t{p.position} - i[static_cast<std::size_t>(p.axis)], k) < k / 2 ? 1 : 0;
}

Labeling labeling_of(const HypothesisIndex& i);

// 2 * nu(u, v) / (k d).
double exact_error(const HypothesisIndex& u, const HypothesisIndex& v, const Params& params);

// Fraction of the d*k points on which f and h_u disagree.
double error_vs_labeling(const Labeling& f, const HypothesisIndex& u, const Params& params);

HypothesisIndex random_hypothesis(const Params& params, SplitMix64& rng);

Point random_point(const Params& params, SplitMix64& rng);

// n i.i.d. uniform points of X labeled by target.
LabeledSample sample_training_set(const Params& params, const HypothesisIndex& target,
                                  SplitMix64& rng);

}  // namespace replearn
