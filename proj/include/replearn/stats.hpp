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

#include <cstdint>
#include <span>
#include <vector>

namespace replearn::stats {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
};

// Wilson score interval for a binomial proportion. z = 1.959963985 gives 95%.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                         double z = 1.959963984540054);

// Pairwise (cascade) summation; error grows like O(log n) instead of O(n).
double pairwise_sum(std::span<const double> values);

// Half the l1 distance between two probability vectors of equal length.
double tv_distance(std::span<const double> p, std::span<const double> q);

// Empirical distribution from counts.
std::vector<double> normalize(std::span<const std::uint64_t> counts);

struct ChiSquareResult {
  double statistic = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

// Pearson goodness of fit of observed counts against expected probabilities.
// Cells with zero expected probability must have zero observations.
ChiSquareResult chi_square_gof(std::span<const std::uint64_t> observed,
                               std::span<const double> expected_probs);

// Pearson test of independence on a rows x cols contingency table stored
// row-major. Empty rows/columns are dropped before computing the dof.
ChiSquareResult chi_square_independence(std::span<const std::uint64_t> table,
                                        std::size_t rows, std::size_t cols);

// Binomial(n, p) probability mass for 0..n.
std::vector<double> binomial_pmf(int n, double p);

// Least-squares non-increasing fit (pool adjacent violators), optional weights.
std::vector<double> isotonic_non_increasing(std::span<const double> values,
                                            std::span<const double> weights = {});

}  // namespace replearn::stats
