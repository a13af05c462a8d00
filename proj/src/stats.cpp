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

#include "replearn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>

#include "replearn/errors.hpp"

namespace replearn::stats {

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  // Clamp so the interval always brackets the point estimate despite rounding.
  return {std::min(p, std::max(0.0, center - half)),
          std::max(p, std::min(1.0, center + half))};
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 16) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t mid = values.size() / 2;
  return pairwise_sum(values.first(mid)) + pairwise_sum(values.subspan(mid));
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw UsageError("tv_distance: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

std::vector<double> normalize(std::span<const std::uint64_t> counts) {
  const double total =
      static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}));
  std::vector<double> out(counts.size(), 0.0);
  if (total == 0.0) return out;
  for (std::size_t i = 0; i < counts.size(); ++i) out[i] = static_cast<double>(counts[i]) / total;
  return out;
}

namespace {

double chi_square_sf(double statistic, double dof) {
  if (dof <= 0.0) return 1.0;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, statistic));
}

}  // namespace

ChiSquareResult chi_square_gof(std::span<const std::uint64_t> observed,
                               std::span<const double> expected_probs) {
  if (observed.size() != expected_probs.size()) {
    throw UsageError("chi_square_gof: length mismatch");
  }
  const double n =
      static_cast<double>(std::accumulate(observed.begin(), observed.end(), std::uint64_t{0}));
  ChiSquareResult r;
  int cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = n * expected_probs[i];
    if (expected_probs[i] <= 0.0) {
      if (observed[i] != 0) {
        r.statistic = std::numeric_limits<double>::infinity();
        r.p_value = 0.0;
      }
      continue;
    }
    ++cells;
    const double diff = static_cast<double>(observed[i]) - e;
    r.statistic += diff * diff / e;
  }
  r.dof = std::max(0, cells - 1);
  if (std::isfinite(r.statistic)) r.p_value = chi_square_sf(r.statistic, r.dof);
  return r;
}

ChiSquareResult chi_square_independence(std::span<const std::uint64_t> table,
                                        std::size_t rows, std::size_t cols) {
  if (table.size() != rows * cols) throw UsageError("chi_square_independence: bad shape");
  std::vector<double> row_sum(rows, 0.0), col_sum(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const auto c = static_cast<double>(table[i * cols + j]);
      row_sum[i] += c;
      col_sum[j] += c;
      total += c;
    }
  }
  ChiSquareResult r;
  if (total == 0.0) return r;
  const auto live_rows = std::count_if(row_sum.begin(), row_sum.end(), [](double s) { return s > 0; });
  const auto live_cols = std::count_if(col_sum.begin(), col_sum.end(), [](double s) { return s > 0; });
  for (std::size_t i = 0; i < rows; ++i) {
    if (row_sum[i] == 0.0) continue;
    for (std::size_t j = 0; j < cols; ++j) {
      if (col_sum[j] == 0.0) continue;
      const double e = row_sum[i] * col_sum[j] / total;
      const double diff = static_cast<double>(table[i * cols + j]) - e;
      r.statistic += diff * diff / e;
    }
  }
  r.dof = static_cast<double>((live_rows - 1) * (live_cols - 1));
  r.p_value = chi_square_sf(r.statistic, r.dof);
  return r;
}

std::vector<double> binomial_pmf(int n, double p) {
  if (n < 0) throw UsageError("binomial_pmf: negative n");
  std::vector<double> out(static_cast<std::size_t>(n) + 1);
  boost::math::binomial dist(n, p);
  for (int i = 0; i <= n; ++i) out[static_cast<std::size_t>(i)] = boost::math::pdf(dist, i);
  return out;
}

std::vector<double> isotonic_non_increasing(std::span<const double> values,
                                            std::span<const double> weights) {
  if (!weights.empty() && weights.size() != values.size()) {
    throw UsageError("isotonic_non_increasing: weight length mismatch");
  }
  struct Block {
    double mean;
    double weight;
    std::size_t count;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < values.size(); ++i) {
    blocks.push_back({values[i], weights.empty() ? 1.0 : weights[i], 1});
    while (blocks.size() >= 2) {
      auto& b = blocks[blocks.size() - 1];
      auto& a = blocks[blocks.size() - 2];
      if (a.mean >= b.mean) break;
      const double w = a.weight + b.weight;
      a.mean = (a.mean * a.weight + b.mean * b.weight) / w;
      a.weight = w;
      a.count += b.count;
      blocks.pop_back();
    }
  }
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& b : blocks) out.insert(out.end(), b.count, b.mean);
  return out;
}

}  // namespace replearn::stats
