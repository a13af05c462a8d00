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

#include "replearn/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <numbers>
#include <unordered_set>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "replearn/errors.hpp"

namespace replearn::spectral {

namespace {

std::uint64_t power_or_throw(std::uint64_t base, int exp, std::uint64_t limit, const char* what) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (r > limit / base) {
      throw ResourceError(std::string(what) + " exceeds " + std::to_string(limit),
                          std::numeric_limits<std::uint64_t>::max());
    }
    r *= base;
  }
  return r;
}

// Advances digits (base k, coordinate d-1 fastest) in encode() order.
bool next_tuple(std::vector<std::int32_t>& v, int k) {
  for (std::size_t a = v.size(); a-- > 0;) {
    if (++v[a] < k) return true;
    v[a] = 0;
  }
  return false;
}

std::int64_t inv_mod(std::int64_t a, std::int64_t k) {
  // Fermat; k prime.
  std::int64_t r = 1, b = mod_k(a, k), e = k - 2;
  while (e > 0) {
    if (e & 1) r = r * b % k;
    b = b * b % k;
    e >>= 1;
  }
  return r;
}

}  // namespace

CayleyInstance::CayleyInstance(int d, int k) : d_(d), k_(k) {
  if (d < 1) throw UsageError("CayleyInstance: d must be >= 1");
  if (k < 2 || !is_prime(k)) throw UsageError("CayleyInstance: k must be prime");
  generator_count_ = power_or_throw(3, d, kMaxGenerators, "3^d");
  generators_.resize(generator_count_ * static_cast<std::uint64_t>(d));
  const auto offset = static_cast<std::int64_t>((generator_count_ - 1) / 2);
  for (std::uint64_t g = 0; g < generator_count_; ++g) {
    std::int64_t m = static_cast<std::int64_t>(g) - offset;
    for (int a = 0; a < d; ++a) {
      std::int64_t t = mod_k(m, 3);  // 0, 1, 2
      if (t == 2) t = -1;
      generators_[g * static_cast<std::uint64_t>(d) + static_cast<std::uint64_t>(a)] =
          static_cast<std::int8_t>(t);
      m = (m - t) / 3;
    }
  }
}

std::uint64_t CayleyInstance::node_count() const {
  return power_or_throw(static_cast<std::uint64_t>(k_), d_, std::numeric_limits<std::uint64_t>::max(),
                        "k^d");
}

std::int64_t CayleyInstance::inner(std::span<const std::int32_t> v, std::uint64_t g) const {
  const auto z = generator(g);
  std::int64_t s = 0;
  for (int a = 0; a < d_; ++a) s += std::int64_t{v[static_cast<std::size_t>(a)]} * z[static_cast<std::size_t>(a)];
  return mod_k(s, k_);
}

double analytic_eigenvalue(std::span<const std::int32_t> v, const CayleyInstance& g) {
  if (static_cast<int>(v.size()) != g.d()) throw UsageError("analytic_eigenvalue: length mismatch");
  double s = 0.0;
  for (std::uint64_t z = 0; z < g.generator_count(); ++z) {
    const double x = std::sin(std::numbers::pi * static_cast<double>(g.inner(v, z)) / g.k());
    s += x * x;
  }
  return static_cast<double>(g.generator_count()) - 2.0 * s;
}

std::vector<double> analytic_spectrum(const CayleyInstance& g) {
  const std::uint64_t n = g.node_count();
  std::vector<double> out;
  out.reserve(n);
  std::vector<std::int32_t> v(static_cast<std::size_t>(g.d()), 0);
  do {
    out.push_back(analytic_eigenvalue(v, g));
  } while (next_tuple(v, g.k()));
  return out;
}

SpectrumReport eigen_check(int d, int k, std::size_t histogram_buckets) {
  const CayleyInstance g(d, k);
  const std::uint64_t n64 = power_or_throw(static_cast<std::uint64_t>(k), d, kMaxDenseNodes,
                                           "dense eigen check: k^d");
  const auto n = static_cast<Eigen::Index>(n64);

  SpectrumReport rep;
  rep.d = d;
  rep.k = k;
  rep.eigenvalues = analytic_spectrum(g);

  // Adjacency: A(u, u + z) = 1 for every z in Z (self-loop from z = 0).
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  std::vector<std::int32_t> u(static_cast<std::size_t>(d), 0);
  std::vector<std::int32_t> w(static_cast<std::size_t>(d));
  for (Eigen::Index row = 0; row < n; ++row) {
    for (std::uint64_t z = 0; z < g.generator_count(); ++z) {
      const auto zz = g.generator(z);
      for (std::size_t a = 0; a < w.size(); ++a) w[a] = static_cast<std::int32_t>(mod_k(u[a] + zz[a], k));
      A(row, static_cast<Eigen::Index>(HypothesisIndex(w, k).encode())) += 1.0;
    }
    next_tuple(u, k);
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(A, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  rep.dense_eigenvalues.assign(ev.data(), ev.data() + ev.size());
  std::sort(rep.dense_eigenvalues.begin(), rep.dense_eigenvalues.end());
  std::vector<double> sorted = rep.eigenvalues;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    rep.max_abs_deviation = std::max(rep.max_abs_deviation, std::abs(sorted[i] - rep.dense_eigenvalues[i]));
  }
  rep.trace = stats::pairwise_sum(rep.eigenvalues);
  rep.trace_relative_error = std::abs(rep.trace - static_cast<double>(n64)) / static_cast<double>(n64);

  // Characters as columns: X(w, v) = k^{-d/2} exp(2 pi i <v, w> / k).
  Eigen::MatrixXcd X(n, n);
  const double scale = std::pow(static_cast<double>(k), -0.5 * d);
  std::vector<std::int32_t> v(static_cast<std::size_t>(d), 0);
  for (Eigen::Index col = 0; col < n; ++col) {
    std::fill(w.begin(), w.end(), 0);
    for (Eigen::Index row = 0; row < n; ++row) {
      std::int64_t ip = 0;
      for (std::size_t a = 0; a < w.size(); ++a) ip += std::int64_t{v[a]} * w[a];
      const double phase = 2.0 * std::numbers::pi * static_cast<double>(mod_k(ip, k)) / k;
      X(row, col) = std::polar(scale, phase);
      next_tuple(w, k);
    }
    next_tuple(v, k);
  }
  const Eigen::MatrixXcd gram = X.adjoint() * X;
  rep.orthonormality_deviation = (gram - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
  Eigen::VectorXcd lambda(n);
  for (Eigen::Index i = 0; i < n; ++i) lambda(i) = rep.eigenvalues[static_cast<std::size_t>(i)];
  const Eigen::MatrixXcd residual = A.cast<std::complex<double>>() * X - X * lambda.asDiagonal();
  rep.eigenvector_residual = residual.cwiseAbs().maxCoeff();

  const double top = static_cast<double>(g.generator_count());
  rep.histogram_lo = -top;
  rep.histogram_hi = top;
  rep.histogram.assign(std::max<std::size_t>(histogram_buckets, 1), 0);
  const double width = (rep.histogram_hi - rep.histogram_lo) / static_cast<double>(rep.histogram.size());
  for (double x : rep.eigenvalues) {
    auto b = static_cast<std::size_t>(std::floor((x - rep.histogram_lo) / width));
    ++rep.histogram[std::min(b, rep.histogram.size() - 1)];
  }
  return rep;
}

namespace {

std::unordered_set<std::uint64_t> encode_set(std::span<const HypothesisIndex> T, const CayleyInstance& g) {
  std::unordered_set<std::uint64_t> set;
  set.reserve(T.size() * 2);
  for (const auto& u : T) {
    if (u.d() != g.d() || u.k() != g.k()) throw UsageError("edge count: vertex does not match (d, k)");
    set.insert(u.encode());
  }
  return set;
}

}  // namespace

std::uint64_t internal_edge_count(std::span<const HypothesisIndex> T, const CayleyInstance& g) {
  if (T.empty()) throw UsageError("internal_edge_count: T must be nonempty");
  const auto set = encode_set(T, g);
  const int k = g.k();
  std::uint64_t count = 0;
  std::vector<std::int32_t> w(static_cast<std::size_t>(g.d()));
  for (std::uint64_t code : set) {
    const auto u = HypothesisIndex::decode(code, g.d(), k);
    for (std::uint64_t z = 0; z < g.generator_count(); ++z) {
      const auto zz = g.generator(z);
      std::uint64_t c = 0;
      for (std::size_t a = 0; a < w.size(); ++a) {
        c = c * static_cast<std::uint64_t>(k) + static_cast<std::uint64_t>(mod_k(u[a] + zz[a], k));
      }
      count += set.count(c);
    }
  }
  return count;
}

std::uint64_t escaping_edge_count(std::span<const HypothesisIndex> T, const CayleyInstance& g) {
  const auto distinct = encode_set(T, g).size();
  return distinct * g.generator_count() - internal_edge_count(T, g);
}

double expansion_ratio(std::span<const HypothesisIndex> T, const CayleyInstance& g) {
  const auto distinct = encode_set(T, g).size();
  return static_cast<double>(internal_edge_count(T, g)) /
         (static_cast<double>(distinct) * static_cast<double>(g.generator_count()));
}

std::vector<std::uint8_t> tail_indicators(std::span<const std::int32_t> u, const CayleyInstance& g) {
  const TailInterval I(g.k());
  std::vector<std::uint8_t> x(g.generator_count());
  for (std::uint64_t z = 0; z < g.generator_count(); ++z) x[z] = I.contains(g.inner(u, z)) ? 0 : 1;
  return x;
}

std::int64_t indicator_sum(std::span<const std::int32_t> u, const CayleyInstance& g) {
  if (static_cast<int>(u.size()) != g.d()) throw UsageError("indicator_sum: length mismatch");
  const TailInterval I(g.k());
  std::int64_t s = 0;
  for (std::uint64_t z = 0; z < g.generator_count(); ++z) s += I.contains(g.inner(u, z)) ? 0 : 1;
  return s;
}

double indicator_sum_mean(const CayleyInstance& g) {
  // For z != 0, <u, z> is uniform on F_k when u is uniform.
  const double outside = 1.0 - static_cast<double>(g.k() / 2) / g.k();
  return 1.0 + static_cast<double>(g.generator_count() - 1) * outside;
}

namespace {

struct NodeStats {
  std::int64_t sum;
  double lambda;
};

NodeStats node_stats(std::span<const std::int32_t> u, const CayleyInstance& g, const TailInterval& I) {
  NodeStats s{0, static_cast<double>(g.generator_count())};
  double sin2 = 0.0;
  for (std::uint64_t z = 0; z < g.generator_count(); ++z) {
    const auto ip = g.inner(u, z);
    s.sum += I.contains(ip) ? 0 : 1;
    const double x = std::sin(std::numbers::pi * static_cast<double>(ip) / g.k());
    sin2 += x * x;
  }
  s.lambda -= 2.0 * sin2;
  return s;
}

}  // namespace

TailReport tail_and_moment_estimate(int d, int k, int r, std::int64_t trials, SplitMix64& rng) {
  if (r < 0 || r % 2 != 0) throw UsageError("tail_and_moment_estimate: r must be a nonnegative even integer");
  if (trials < 1) throw UsageError("tail_and_moment_estimate: trials must be >= 1");
  const CayleyInstance g(d, k);
  const TailInterval I(k);
  TailReport rep;
  rep.d = d;
  rep.k = k;
  rep.r = r;
  rep.trials = trials;
  rep.mean_exact = indicator_sum_mean(g);
  std::vector<double> powers;
  powers.reserve(static_cast<std::size_t>(trials));
  std::vector<std::int32_t> u(static_cast<std::size_t>(d));
  for (std::int64_t t = 0; t < trials; ++t) {
    for (auto& x : u) x = static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(k)));
    const auto s = node_stats(u, g, I);
    const bool tail = indicator_tail_event(s.sum, g.generator_count());
    const bool eigen_tail = eigenvalue_tail_event(s.lambda, g.generator_count());
    rep.tail_hits += tail;
    rep.eigen_tail_hits += eigen_tail;
    rep.implication_violations += (eigen_tail && !tail);
    powers.push_back(std::pow(static_cast<double>(s.sum) - rep.mean_exact, r));
  }
  rep.p_hat = static_cast<double>(rep.tail_hits) / static_cast<double>(trials);
  rep.p_ci = stats::wilson_interval(rep.tail_hits, static_cast<std::uint64_t>(trials));
  rep.moment_hat = stats::pairwise_sum(powers) / static_cast<double>(trials);
  return rep;
}

ExactTail exact_tail(int d, int k) {
  const CayleyInstance g(d, k);
  const TailInterval I(k);
  ExactTail e;
  e.nodes = power_or_throw(static_cast<std::uint64_t>(k), d, kMaxEnumeratedNodes, "exact tail: k^d");
  std::vector<std::int32_t> u(static_cast<std::size_t>(d), 0);
  do {
    const auto s = node_stats(u, g, I);
    const bool tail = indicator_tail_event(s.sum, g.generator_count());
    const bool eigen_tail = eigenvalue_tail_event(s.lambda, g.generator_count());
    e.tail_count += tail;
    e.eigen_tail_count += eigen_tail;
    e.implication_violations += (eigen_tail && !tail);
  } while (next_tuple(u, k));
  return e;
}

int rank_mod_k(ModMatrix m, int k) {
  if (k < 2 || !is_prime(k)) throw UsageError("rank_mod_k: k must be prime");
  if (m.empty()) return 0;
  const std::size_t cols = m.front().size();
  for (auto& row : m) {
    if (row.size() != cols) throw UsageError("rank_mod_k: ragged matrix");
    for (auto& x : row) x = mod_k(x, k);
  }
  int rank = 0;
  const std::size_t rows = m.size();
  for (std::size_t c = 0; c < cols && static_cast<std::size_t>(rank) < rows; ++c) {
    std::size_t pivot = static_cast<std::size_t>(rank);
    while (pivot < rows && m[pivot][c] == 0) ++pivot;
    if (pivot == rows) continue;
    std::swap(m[pivot], m[static_cast<std::size_t>(rank)]);
    auto& prow = m[static_cast<std::size_t>(rank)];
    const std::int64_t inv = inv_mod(prow[c], k);
    for (auto& x : prow) x = x * inv % k;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == static_cast<std::size_t>(rank) || m[i][c] == 0) continue;
      const std::int64_t f = m[i][c];
      for (std::size_t j = c; j < cols; ++j) m[i][j] = mod_k(m[i][j] - f * prow[j], k);
    }
    ++rank;
  }
  return rank;
}

LowRankReport low_rank_fraction_estimate(int d, int r, int k, std::int64_t trials, SplitMix64& rng) {
  if (d < 1 || r < 1 || r > d) throw UsageError("low_rank_fraction_estimate: need 1 <= r <= d");
  if (trials < 1) throw UsageError("low_rank_fraction_estimate: trials must be >= 1");
  LowRankReport rep;
  rep.d = d;
  rep.r = r;
  rep.k = k;
  rep.trials = trials;
  rep.threshold = r - std::log(static_cast<double>(d)) / std::log(3.0);
  rep.bound = std::pow(static_cast<double>(d), -0.5 * d) / d;
  rep.bound_applies = 2 * r <= d;
  rep.rank_histogram.assign(static_cast<std::size_t>(std::min(d, r)) + 1, 0);
  ModMatrix y(static_cast<std::size_t>(d), std::vector<std::int64_t>(static_cast<std::size_t>(r)));
  for (std::int64_t t = 0; t < trials; ++t) {
    for (auto& row : y) {
      for (auto& x : row) x = static_cast<std::int64_t>(rng.below(3)) - 1;
    }
    const int rank = rank_mod_k(y, k);
    ++rep.rank_histogram[static_cast<std::size_t>(rank)];
    if (rank <= rep.threshold + 1e-12) ++rep.low_rank;
  }
  rep.fraction = static_cast<double>(rep.low_rank) / static_cast<double>(trials);
  rep.ci = stats::wilson_interval(rep.low_rank, static_cast<std::uint64_t>(trials));
  return rep;
}

double littlewood_offord_bound(std::size_t s, int k) {
  const double sd = static_cast<double>(s);
  return std::min(0.5, 1.0 / k + std::exp(-sd / 8.0) + std::sqrt(32.0 / sd));
}

LittlewoodOffordReport littlewood_offord_estimate(std::span<const std::int64_t> x, std::int64_t y,
                                                  int k, std::int64_t trials, SplitMix64& rng) {
  if (x.empty()) throw UsageError("littlewood_offord_estimate: need at least one coefficient");
  if (k < 2 || !is_prime(k)) throw UsageError("littlewood_offord_estimate: k must be prime");
  std::vector<std::int64_t> coef(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    coef[i] = mod_k(x[i], k);
    if (coef[i] == 0) {
      throw UsageError("littlewood_offord_estimate: coefficient " + std::to_string(i) + " is 0 mod k");
    }
  }
  const std::int64_t target = mod_k(y, k);
  LittlewoodOffordReport rep;
  rep.s = x.size();
  rep.bound = littlewood_offord_bound(rep.s, k);

  std::uint64_t patterns = 1;
  bool small = true;
  for (std::size_t i = 0; i < rep.s; ++i) {
    if (patterns > kMaxExactSignPatterns / 3) {
      small = false;
      break;
    }
    patterns *= 3;
  }
  if (small) {
    // Ternary odometer over eps in {-1, 0, 1}^s with an incremental sum.
    std::vector<int> eps(rep.s, -1);
    std::int64_t sum = 0;
    for (auto c : coef) sum = mod_k(sum - c, k);
    std::uint64_t hits = 0;
    for (std::uint64_t p = 0; p < patterns; ++p) {
      hits += (sum == target);
      for (std::size_t i = 0; i < rep.s; ++i) {
        if (eps[i] < 1) {
          ++eps[i];
          sum = mod_k(sum + coef[i], k);
          break;
        }
        eps[i] = -1;
        sum = mod_k(sum - 2 * coef[i], k);
      }
    }
    rep.exact = true;
    rep.estimate = static_cast<double>(hits) / static_cast<double>(patterns);
  } else {
    if (trials < 1) throw UsageError("littlewood_offord_estimate: trials must be >= 1");
    std::uint64_t hits = 0;
    for (std::int64_t t = 0; t < trials; ++t) {
      std::int64_t sum = 0;
      for (auto c : coef) sum += (static_cast<std::int64_t>(rng.below(3)) - 1) * c;
      hits += (mod_k(sum, k) == target);
    }
    rep.estimate = static_cast<double>(hits) / static_cast<double>(trials);
    rep.sigma = std::sqrt(rep.estimate * (1.0 - rep.estimate) / static_cast<double>(trials));
  }
  rep.within_bound = rep.estimate <= rep.bound + 3.0 * rep.sigma;
  return rep;
}

IndependenceVerdict inner_product_independence_check(const ModMatrix& ys, int k) {
  if (ys.size() < 2) throw UsageError("independence check: need y_1 and at least one more vector");
  const std::size_t d = ys.front().size();
  for (const auto& y : ys) {
    if (y.size() != d) throw UsageError("independence check: vectors differ in length");
  }
  IndependenceVerdict v;
  v.rank_all = rank_mod_k(ys, k);
  v.rank_rest = rank_mod_k(ModMatrix(ys.begin() + 1, ys.end()), k);
  v.precondition_holds = v.rank_all == v.rank_rest + 1;

  const std::uint64_t nodes = power_or_throw(static_cast<std::uint64_t>(k), static_cast<int>(d),
                                             kMaxIndependenceNodes, "independence check: k^d");
  std::map<std::pair<std::int64_t, std::vector<std::int64_t>>, std::uint64_t> joint;
  std::vector<std::uint64_t> first(static_cast<std::size_t>(k), 0);
  std::map<std::vector<std::int64_t>, std::uint64_t> rest;
  std::vector<std::int32_t> w(d, 0);
  std::vector<std::int64_t> tail(ys.size() - 1);
  auto dot = [&](const std::vector<std::int64_t>& y) {
    std::int64_t s = 0;
    for (std::size_t a = 0; a < d; ++a) s += mod_k(y[a], k) * w[a];
    return mod_k(s, k);
  };
  do {
    const std::int64_t a = dot(ys[0]);
    for (std::size_t j = 1; j < ys.size(); ++j) tail[j - 1] = dot(ys[j]);
    ++joint[{a, tail}];
    ++first[static_cast<std::size_t>(a)];
    ++rest[tail];
  } while (next_tuple(w, k));

  // Exact product form: P(a, t) = P(a) P(t) <=> count(a, t) * N = count(a) * count(t),
  // including the cells that never occur.
  v.factorizes = true;
  for (std::int64_t a = 0; a < k && v.factorizes; ++a) {
    for (const auto& [t, ct] : rest) {
      const auto it = joint.find({a, t});
      const std::uint64_t c = it == joint.end() ? 0 : it->second;
      if (c * nodes != first[static_cast<std::size_t>(a)] * ct) {
        v.factorizes = false;
        break;
      }
    }
  }
  v.first_marginal_uniform =
      std::all_of(first.begin(), first.end(), [&](std::uint64_t c) { return c * static_cast<std::uint64_t>(k) == nodes; });
  return v;
}

}  // namespace replearn::spectral
