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

#include "replearn/domain.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "replearn/errors.hpp"

namespace replearn {

bool is_prime(std::int64_t n) {
  if (n < 2) return false;
  if (n < 4) return true;
  if (n % 2 == 0 || n % 3 == 0) return false;
  for (std::int64_t f = 5; f * f <= n; f += 6) {
    if (n % f == 0 || n % (f + 2) == 0) return false;
  }
  return true;
}

std::int64_t choose_prime_k(std::int64_t target) {
  if (target < 2) throw UsageError("choose_prime_k: target must be >= 2");
  std::int64_t p = target;
  while (!is_prime(p)) ++p;
  return p;
}

namespace {

void require_open_unit(double x, const char* name) {
  if (!(x > 0.0 && x < 1.0)) {
    throw UsageError(std::string("Params: ") + name + " must lie strictly inside (0, 1)");
  }
}

}  // namespace

Params::Params(int d, int k, double epsilon, double rho, double delta, std::int64_t n)
    : d_(d), k_(k), epsilon_(epsilon), rho_(rho), delta_(delta), n_(n) {
  if (d < 1) throw UsageError("Params: d must be >= 1");
  if (k < 3) throw UsageError("Params: k must be >= 3");
  if (!is_prime(k)) {
    throw UsageError("Params: k = " + std::to_string(k) + " is not prime (next prime is " +
                     std::to_string(choose_prime_k(k)) + ")");
  }
  require_open_unit(epsilon, "epsilon");
  require_open_unit(rho, "rho");
  require_open_unit(delta, "delta");
  set_n(n);
}

Params& Params::set_n(std::int64_t n) {
  if (n < 0) throw UsageError("Params: n must be >= 0");
  n_ = n;
  return *this;
}

Params& Params::set_beta_constant(double c) {
  if (!(c > 0.0)) throw UsageError("Params: beta_constant must be positive");
  beta_constant_ = c;
  return *this;
}

Params& Params::set_radius_fraction(double f) {
  if (!(f >= 0.0) || !std::isfinite(f)) {
    throw UsageError("Params: radius_fraction must be finite and >= 0");
  }
  radius_fraction_ = f;
  return *this;
}

Params& Params::set_ball_cap(std::uint64_t cap) {
  if (cap == 0) throw UsageError("Params: ball_cap must be positive");
  ball_cap_ = cap;
  return *this;
}

std::int64_t Params::acceptance_radius() const noexcept {
  const double r = epsilon_ * k_ * d_ * radius_fraction_;
  // Products like 0.3 * 40 land a hair below the integer they denote.
  return static_cast<std::int64_t>(std::floor(r + 1e-9));
}

double Params::beta() const noexcept {
  const double a = epsilon_ * rho_ / std::sqrt(d_ * std::log(2.0 / rho_));
  const double b = epsilon_ * rho_ / std::log(4.0 / rho_);
  return beta_constant_ * std::min(a, b);
}

std::int64_t sample_size_for(const Params& params, double c_n) {
  if (!(c_n > 0.0)) throw UsageError("sample_size_for: c_n must be positive");
  const double d = params.d();
  const double n = c_n * d * std::log(std::max(d / params.rho(), 1.0)) / params.beta();
  return static_cast<std::int64_t>(std::ceil(n));
}

HypothesisIndex::HypothesisIndex(std::vector<std::int32_t> coords, int k)
    : coords_(std::move(coords)), k_(k) {
  if (k < 1) throw UsageError("HypothesisIndex: k must be positive");
  for (auto& c : coords_) c = static_cast<std::int32_t>(mod_k(c, k));
}

HypothesisIndex HypothesisIndex::zero(int d, int k) {
  return HypothesisIndex(std::vector<std::int32_t>(static_cast<std::size_t>(d), 0), k);
}

HypothesisIndex HypothesisIndex::decode(std::uint64_t code, int d, int k) {
  std::vector<std::int32_t> c(static_cast<std::size_t>(d));
  for (int a = d - 1; a >= 0; --a) {
    c[static_cast<std::size_t>(a)] = static_cast<std::int32_t>(code % static_cast<std::uint64_t>(k));
    code /= static_cast<std::uint64_t>(k);
  }
  return HypothesisIndex(std::move(c), k);
}

std::uint64_t HypothesisIndex::encode() const {
  std::uint64_t code = 0;
  const auto kk = static_cast<std::uint64_t>(k_);
  for (auto c : coords_) {
    if (code > (std::numeric_limits<std::uint64_t>::max() - static_cast<std::uint64_t>(c)) / kk) {
      throw ResourceError("HypothesisIndex::encode: k^d does not fit in 64 bits",
                          std::numeric_limits<std::uint64_t>::max());
    }
    code = code * kk + static_cast<std::uint64_t>(c);
  }
  return code;
}

HypothesisIndex HypothesisIndex::shifted(std::span<const std::int32_t> offset) const {
  if (offset.size() != coords_.size()) throw UsageError("HypothesisIndex::shifted: length mismatch");
  std::vector<std::int32_t> c(coords_);
  for (std::size_t a = 0; a < c.size(); ++a) c[a] += offset[a];
  return HypothesisIndex(std::move(c), k_);
}

std::string HypothesisIndex::to_string() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t a = 0; a < coords_.size(); ++a) {
    if (a) os << ',';
    os << coords_[a];
  }
  os << ')';
  return os.str();
}

LabeledSample::LabeledSample(const HypothesisIndex& target, std::vector<LabeledPoint> points)
    : points_(std::move(points)) {
  for (const auto& lp : points_) {
    if (lp.point.axis < 0 || lp.point.axis >= target.d() || lp.point.position < 0 ||
        lp.point.position >= target.k()) {
      throw UsageError("LabeledSample: point outside [d] x Z_k");
    }
    if (lp.label != evaluate_hypothesis(target, lp.point)) {
      throw UsageError("LabeledSample: label disagrees with the generating hypothesis");
    }
  }
}

LabeledSample LabeledSample::unchecked(std::vector<LabeledPoint> points) {
  LabeledSample s;
  s.points_ = std::move(points);
  return s;
}

std::int64_t wrap_distance(std::int64_t x, std::int64_t y, std::int64_t k) {
  return std::min(mod_k(x - y, k), mod_k(y - x, k));
}

std::int64_t tuple_distance(const HypothesisIndex& u, const HypothesisIndex& v) {
  if (u.d() != v.d() || u.k() != v.k()) {
    throw UsageError("tuple_distance: hypotheses differ in length or modulus");
  }
  std::int64_t s = 0;
  for (std::size_t a = 0; a < u.coords().size(); ++a) s += wrap_distance(u[a], v[a], u.k());
  return s;
}

Labeling labeling_of(const HypothesisIndex& i) {
  Labeling f(static_cast<std::size_t>(i.d()) * static_cast<std::size_t>(i.k()));
  for (int a = 0; a < i.d(); ++a) {
    for (int b = 0; b < i.k(); ++b) {
      f[static_cast<std::size_t>(a) * static_cast<std::size_t>(i.k()) + static_cast<std::size_t>(b)] =
          evaluate_hypothesis(i, {a, b});
    }
  }
  return f;
}

namespace {

void require_shape(const HypothesisIndex& u, const Params& params, const char* who) {
  if (u.d() != params.d() || u.k() != params.k()) {
    throw UsageError(std::string(who) + ": hypothesis does not match Params (d, k)");
  }
}

}  // namespace

double exact_error(const HypothesisIndex& u, const HypothesisIndex& v, const Params& params) {
  require_shape(u, params, "exact_error");
  require_shape(v, params, "exact_error");
  return 2.0 * static_cast<double>(tuple_distance(u, v)) / static_cast<double>(params.domain_size());
}

double error_vs_labeling(const Labeling& f, const HypothesisIndex& u, const Params& params) {
  require_shape(u, params, "error_vs_labeling");
  if (f.size() != static_cast<std::size_t>(params.domain_size())) {
    throw UsageError("error_vs_labeling: labeling has " + std::to_string(f.size()) +
                     " entries, expected d*k = " + std::to_string(params.domain_size()));
  }
  const Labeling h = labeling_of(u);
  std::int64_t disagree = 0;
  for (std::size_t x = 0; x < f.size(); ++x) disagree += (f[x] != h[x]);
  return static_cast<double>(disagree) / static_cast<double>(f.size());
}

HypothesisIndex random_hypothesis(const Params& params, SplitMix64& rng) {
  std::vector<std::int32_t> c(static_cast<std::size_t>(params.d()));
  for (auto& x : c) x = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(params.k())));
  return HypothesisIndex(std::move(c), params.k());
}

Point random_point(const Params& params, SplitMix64& rng) {
  // One draw over the d*k points keeps axis and position jointly uniform.
  const auto x = rng.below(static_cast<std::uint64_t>(params.domain_size()));
  const auto k = static_cast<std::uint64_t>(params.k());
  return {static_cast<std::int32_t>(x / k), static_cast<std::int32_t>(x % k)};
}

LabeledSample sample_training_set(const Params& params, const HypothesisIndex& target,
                                  SplitMix64& rng) {
  require_shape(target, params, "sample_training_set");
  std::vector<LabeledPoint> pts;
  pts.reserve(static_cast<std::size_t>(params.n()));
  for (std::int64_t t = 0; t < params.n(); ++t) {
    const Point p = random_point(params, rng);
    pts.push_back({p, evaluate_hypothesis(target, p)});
  }
  return LabeledSample::unchecked(std::move(pts));
}

}  // namespace replearn
