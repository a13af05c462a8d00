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

#include "replearn/balls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/multiprecision/cpp_int.hpp>

#include "replearn/errors.hpp"

namespace replearn {

namespace {

BigInt binomial(std::int64_t n, std::int64_t m) {
  if (m < 0 || n < 0 || m > n) return 0;
  m = std::min(m, n - m);
  BigInt r = 1;
  for (std::int64_t i = 1; i <= m; ++i) {
    r *= (n - m + i);
    r /= i;
  }
  return r;
}

double ratio(const BigInt& num, const BigInt& den) {
  if (den == 0) return 0.0;
  return boost::multiprecision::cpp_rational(num, den).convert_to<double>();
}

}  // namespace

BallSpec BallSpec::unbounded(int d, std::int64_t radius) {
  if (d < 1) throw UsageError("BallSpec: d must be >= 1");
  if (radius < 0) throw UsageError("BallSpec: radius must be >= 0");
  return {d, radius, std::nullopt};
}

BallSpec BallSpec::wrap(int d, std::int64_t radius, int k) {
  if (d < 1) throw UsageError("BallSpec: d must be >= 1");
  if (radius < 0) throw UsageError("BallSpec: radius must be >= 0");
  if (k < 2) throw UsageError("BallSpec: modulus must be >= 2");
  return {d, radius, k};
}

std::int64_t BallSpec::coordinate_cap() const {
  return modulus ? std::min<std::int64_t>(*modulus / 2, radius) : radius;
}

BallTable::BallTable(const BallSpec& spec)
    : spec_(spec),
      cap_(spec.coordinate_cap()),
      max_t_(std::min<std::int64_t>(spec.radius, spec.d * spec.coordinate_cap())) {
  const auto d = static_cast<std::size_t>(spec.d);
  const auto len = static_cast<std::size_t>(max_t_) + 1;
  shells_.assign(d + 1, std::vector<BigInt>(len, BigInt(0)));
  prefix_.assign(d + 1, std::vector<BigInt>(len, BigInt(0)));
  shells_[d][0] = 1;
  for (std::size_t x = 0; x < len; ++x) prefix_[d][x] = 1;

  for (std::size_t j = d; j-- > 0;) {
    for (std::int64_t t = 0; t <= max_t_; ++t) {
      // shell(j, t) = shell(j+1, t) + 2 * sum_{s=1..cap} shell(j+1, t - s)
      BigInt v = shells_[j + 1][static_cast<std::size_t>(t)];
      v += 2 * (prefix(j + 1, t - 1) - prefix(j + 1, t - cap_ - 1));
      shells_[j][static_cast<std::size_t>(t)] = std::move(v);
    }
    BigInt run = 0;
    for (std::size_t x = 0; x < len; ++x) {
      run += shells_[j][x];
      prefix_[j][x] = run;
    }
  }
}

const BigInt& BallTable::shell(std::size_t j, std::int64_t t) const {
  static const BigInt kZero = 0;
  if (t < 0 || t > max_t_) return kZero;
  return shells_[j][static_cast<std::size_t>(t)];
}

BigInt BallTable::prefix(std::size_t j, std::int64_t x) const {
  if (x < 0) return 0;
  return prefix_[j][static_cast<std::size_t>(std::min(x, max_t_))];
}

BigInt BallTable::cumulative(std::int64_t t) const { return prefix(0, t); }

std::vector<std::int32_t> BallTable::sample(SplitMix64& rng) const {
  const auto& cum = prefix_.front();
  const BigInt x0 = uniform_below(volume(), rng);
  auto t = static_cast<std::int64_t>(std::upper_bound(cum.begin(), cum.end(), x0) - cum.begin());

  const auto d = static_cast<std::size_t>(spec_.d);
  std::vector<std::int32_t> delta(d, 0);
  for (std::size_t j = 0; j < d; ++j) {
    BigInt x = uniform_below(shell(j, t), rng);
    const BigInt& stay = shell(j + 1, t);
    if (x < stay) continue;
    x -= stay;
    const bool negative = static_cast<bool>(x & 1);
    const BigInt half = x >> 1;
    // Smallest s >= 1 with sum_{s'=1..s} shell(j+1, t-s') > half.
    const BigInt base = prefix(j + 1, t - 1);
    std::int64_t lo = 1, hi = std::min(t, cap_);
    while (lo < hi) {
      const std::int64_t mid = lo + (hi - lo) / 2;
      if (base - prefix(j + 1, t - mid - 1) > half) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    delta[j] = static_cast<std::int32_t>(negative ? -lo : lo);
    t -= lo;
  }
  return delta;
}

BigInt uniform_below(const BigInt& bound, SplitMix64& rng) {
  if (bound <= 0) throw UsageError("uniform_below: bound must be positive");
  if (bound <= std::numeric_limits<std::uint64_t>::max()) {
    return BigInt(rng.below(bound.convert_to<std::uint64_t>()));
  }
  const std::size_t bits = boost::multiprecision::msb(bound) + 1;
  for (;;) {
    BigInt r = 0;
    std::size_t have = 0;
    while (have < bits) {
      r <<= 64;
      r |= rng();
      have += 64;
    }
    r >>= (have - bits);
    if (r < bound) return r;
  }
}

BigInt l1_ball_count(int d, std::int64_t r) {
  if (d < 1) throw UsageError("l1_ball_count: d must be >= 1");
  if (r < 0) throw UsageError("l1_ball_count: r must be >= 0");
  BigInt total = 0;
  for (std::int64_t i = 0; i <= std::min<std::int64_t>(d, r); ++i) {
    total += (BigInt(1) << static_cast<unsigned>(i)) * binomial(d, i) * binomial(r, i);
  }
  return total;
}

BigInt wrap_ball_count(int d, std::int64_t r, int k) {
  if (r < 0) throw UsageError("wrap_ball_count: r must be >= 0");
  return BallTable(BallSpec::wrap(d, r, k)).volume();
}

BigInt zero_pattern_shell(int d, int zeros, std::int64_t t) {
  if (zeros < 0 || zeros > d) return 0;
  if (t == 0) return zeros == d ? 1 : 0;
  const int nonzero = d - zeros;
  if (nonzero == 0) return 0;
  return (BigInt(1) << static_cast<unsigned>(nonzero)) * binomial(d, zeros) *
         binomial(t - 1, nonzero - 1);
}

BigInt l1_shell_by_zero_patterns(int d, std::int64_t t) {
  BigInt s = 0;
  for (int z = 0; z <= d; ++z) s += zero_pattern_shell(d, z, t);
  return s;
}

bool zero_pattern_shells_monotone(int d, std::int64_t t_max) {
  for (int z = 0; z < d; ++z) {
    for (std::int64_t t = 2 * d; t < t_max; ++t) {
      if (zero_pattern_shell(d, z, t + 1) < zero_pattern_shell(d, z, t)) return false;
    }
  }
  return true;
}

std::vector<std::int32_t> sample_uniform_wrap_ball(const HypothesisIndex& center, std::int64_t radius,
                                                   const Params& params, SplitMix64& rng) {
  if (center.d() != params.d() || center.k() != params.k()) {
    throw UsageError("sample_uniform_wrap_ball: center does not match Params (d, k)");
  }
  return BallTable(BallSpec::wrap(params.d(), radius, params.k())).sample(rng);
}

InteriorReport interior_statistics(const Params& params, std::int64_t radius, double gamma,
                                   double beta, std::int64_t trials, SplitMix64& rng) {
  if (trials < 1) throw UsageError("interior_statistics: trials must be >= 1");
  const BallTable table(BallSpec::wrap(params.d(), radius, params.k()));
  const double eps = params.epsilon();
  const double rho = params.rho();
  const double k = params.k();

  InteriorReport rep;
  rep.radius = radius;
  rep.gamma = gamma;
  rep.beta = beta;
  rep.trials = trials;
  rep.q = static_cast<std::int64_t>(std::ceil(eps * gamma * k / 96.0 - 1e-12));
  rep.interior_exact = ratio(table.cumulative(radius - rep.q), table.volume());
  const bool k_large = k >= 384.0 / (eps * rho);
  rep.smallnorm_applies = k_large && gamma >= rho / 4.0 && gamma <= 0.5;
  rep.fewsmall_applies = k_large && beta * k >= 2.0;
  rep.fewsmall_bound = 2304.0 * params.d() * beta / eps + 3.0 * std::log(4.0 / rho);
  rep.small_count_histogram.assign(static_cast<std::size_t>(params.d()) + 1, 0);

  std::uint64_t interior = 0, few = 0;
  for (std::int64_t i = 0; i < trials; ++i) {
    const auto delta = table.sample(rng);
    std::int64_t norm = 0;
    std::size_t small = 0;
    for (auto x : delta) {
      norm += std::abs(x);
      if (2.0 * std::abs(x) < beta * k) ++small;
    }
    if (norm <= radius - rep.q) ++interior;
    if (static_cast<double>(small) <= rep.fewsmall_bound) ++few;
    ++rep.small_count_histogram[small];
  }
  const double n = static_cast<double>(trials);
  rep.interior_hat = static_cast<double>(interior) / n;
  rep.interior_sigma = std::sqrt(rep.interior_hat * (1.0 - rep.interior_hat) / n);
  rep.fewsmall_hat = static_cast<double>(few) / n;
  rep.fewsmall_sigma = std::sqrt(rep.fewsmall_hat * (1.0 - rep.fewsmall_hat) / n);
  if (rep.smallnorm_applies) {
    rep.smallnorm_holds = rep.interior_hat + 3.0 * rep.interior_sigma >= 1.0 - gamma;
  }
  if (rep.fewsmall_applies) {
    rep.fewsmall_holds = rep.fewsmall_hat + 3.0 * rep.fewsmall_sigma >= 1.0 - rho / 4.0;
  }
  return rep;
}

}  // namespace replearn
