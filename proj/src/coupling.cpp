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

#include "replearn/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "replearn/errors.hpp"

namespace replearn {

CouplingMatrix::CouplingMatrix(int d) {
  if (d < 0) throw UsageError("CouplingMatrix: d must be >= 0");
  rows_.resize(static_cast<std::size_t>(d) + 1);
  for (std::size_t i = 0; i < rows_.size(); ++i) rows_[i].assign(i + 1, 0.0);
}

CouplingMatrix majorization_coupling(std::span<const double> x, std::span<const double> y, double tol) {
  if (x.empty() || x.size() != y.size()) {
    throw UsageError("majorization_coupling: x and y must have the same length d+1 >= 1");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= 0.0) || !(y[i] >= 0.0)) {
      throw UsageError("majorization_coupling: non-negative property fails at index " + std::to_string(i));
    }
  }
  const double sx = stats::pairwise_sum(x);
  const double sy = stats::pairwise_sum(y);
  const double scale = std::max({1.0, sx, sy});
  if (std::abs(sx - sy) > tol * scale) {
    throw UsageError("majorization_coupling: equal sum property fails (sum x = " + std::to_string(sx) +
                     ", sum y = " + std::to_string(sy) + ")");
  }
  double px = 0.0, py = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    px += x[t];
    py += y[t];
    if (px > py + tol * scale) {
      throw UsageError("majorization_coupling: dominating property fails at t = " + std::to_string(t));
    }
  }

  const int d = static_cast<int>(x.size()) - 1;
  CouplingMatrix p(d);
  std::vector<double> yy(y.begin(), y.end());
  for (int m = d; m >= 1; --m) {
    const auto mm = static_cast<std::size_t>(m);
    const double xm = x[mm];
    if (xm <= 0.0) {
      for (int j = 0; j <= m; ++j) p(m, j) = 1.0 / (m + 1);
      continue;
    }
    p(m, m) = std::clamp(yy[mm] / xm, 0.0, 1.0);
    double rest = 1.0 - p(m, m);
    for (int j = m - 1; j >= 0; --j) {
      const double v = std::clamp(std::min(yy[static_cast<std::size_t>(j)] / xm, rest), 0.0, 1.0);
      p(m, j) = v;
      rest -= v;
    }
    // Rounding leftovers only; row 0 absorbs them so the row sums to 1.
    if (rest > 0.0) p(m, 0) = std::min(1.0, p(m, 0) + rest);
    for (int j = 0; j <= m; ++j) {
      auto& v = yy[static_cast<std::size_t>(j)];
      v = std::max(0.0, v - xm * p(m, j));
    }
  }
  p(0, 0) = 1.0;
  return p;
}

CouplingCheck check_coupling(const CouplingMatrix& p, std::span<const double> x, std::span<const double> y) {
  const int d = p.d();
  if (x.size() != static_cast<std::size_t>(d) + 1 || y.size() != x.size()) {
    throw UsageError("check_coupling: length mismatch");
  }
  CouplingCheck c;
  for (int i = 0; i <= d; ++i) {
    const auto row = p.row(i);
    for (double v : row) c.range = std::max({c.range, -v, v - 1.0});
    c.row_sum = std::max(c.row_sum, std::abs(stats::pairwise_sum(row) - 1.0));
  }
  for (int j = 0; j <= d; ++j) {
    double s = 0.0;
    for (int i = j; i <= d; ++i) s += x[static_cast<std::size_t>(i)] * p(i, j);
    c.transport = std::max(c.transport, std::abs(s - y[static_cast<std::size_t>(j)]));
  }
  return c;
}

std::pair<Point, Point> boundary_points(const HypothesisIndex& u, int axis, int sigma) {
  const int k = u.k();
  const std::int64_t m = k / 2;
  const std::int64_t ua = u[static_cast<std::size_t>(axis)];
  // h_u is 1 on [u_a, u_a + m - 1]; the shifted interval gains one end and loses the other.
  const std::int64_t b1 = sigma > 0 ? ua : ua - 1;
  const std::int64_t b2 = b1 + m;
  return {Point{axis, static_cast<std::int32_t>(mod_k(b1, k))},
          Point{axis, static_cast<std::int32_t>(mod_k(b2, k))}};
}

namespace {

void require_shape(const HypothesisIndex& u, const Params& params, const char* who) {
  if (u.d() != params.d() || u.k() != params.k()) {
    throw UsageError(std::string(who) + ": hypothesis does not match Params (d, k)");
  }
}

std::vector<int> candidates(const HypothesisIndex& u, std::span<const std::int8_t> sigma,
                            std::span<const LabeledPoint> S, int d) {
  std::vector<std::uint8_t> hit(static_cast<std::size_t>(d), 0);
  std::vector<std::pair<Point, Point>> bounds;
  bounds.reserve(static_cast<std::size_t>(d));
  for (int a = 0; a < d; ++a) bounds.push_back(boundary_points(u, a, sigma[static_cast<std::size_t>(a)]));
  for (const auto& lp : S) {
    const auto& [p1, p2] = bounds[static_cast<std::size_t>(lp.point.axis)];
    if (lp.point == p1 || lp.point == p2) hit[static_cast<std::size_t>(lp.point.axis)] = 1;
  }
  std::vector<int> P;
  for (int a = 0; a < d; ++a) {
    if (!hit[static_cast<std::size_t>(a)]) P.push_back(a);
  }
  return P;
}

}  // namespace

std::vector<int> candidate_direction_set(const HypothesisIndex& u, std::span<const std::int8_t> sigma,
                                         const LabeledSample& S, const Params& params) {
  require_shape(u, params, "candidate_direction_set");
  if (sigma.size() != static_cast<std::size_t>(params.d())) {
    throw UsageError("candidate_direction_set: sigma must have length d");
  }
  for (auto s : sigma) {
    if (s != 1 && s != -1) throw UsageError("candidate_direction_set: sigma entries must be +1 or -1");
  }
  for (const auto& lp : S) {
    if (lp.point.axis < 0 || lp.point.axis >= params.d() || lp.point.position < 0 ||
        lp.point.position >= params.k()) {
      throw UsageError("candidate_direction_set: sample point outside [d] x Z_k");
    }
  }
  return candidates(u, sigma, S.points(), params.d());
}

SizeLaw SizeLaw::supplied(std::vector<double> probs) {
  if (probs.empty()) throw UsageError("SizeLaw: need d+1 >= 1 probabilities");
  for (double p : probs) {
    if (!(p >= 0.0)) throw UsageError("SizeLaw: probabilities must be non-negative");
  }
  if (std::abs(stats::pairwise_sum(probs) - 1.0) > 1e-9) throw UsageError("SizeLaw: probabilities must sum to 1");
  SizeLaw law;
  law.probs = std::move(probs);
  law.source = Source::kSupplied;
  return law;
}

std::string to_string(SizeLaw::Source s) {
  switch (s) {
    case SizeLaw::Source::kExact:
      return "exact";
    case SizeLaw::Source::kEmpirical:
      return "empirical";
    case SizeLaw::Source::kSupplied:
      return "supplied";
  }
  return "?";
}

SizeLaw exact_candidate_size_law(int d, int k, std::int64_t n) {
  if (d < 1 || k < 3 || n < 0) throw UsageError("exact_candidate_size_law: need d >= 1, k >= 3, n >= 0");
  const auto dd = static_cast<std::size_t>(d);
  std::vector<double> hits(dd + 1, 0.0), next(dd + 1);
  hits[0] = 1.0;
  const double points = static_cast<double>(d) * k;
  for (std::int64_t t = 0; t < n; ++t) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t h = 0; h <= dd; ++h) {
      const double fresh = 2.0 * static_cast<double>(dd - h) / points;
      next[h] += hits[h] * (1.0 - fresh);
      if (h < dd) next[h + 1] += hits[h] * fresh;
    }
    hits.swap(next);
  }
  SizeLaw law;
  law.probs.resize(dd + 1);
  for (std::size_t i = 0; i <= dd; ++i) law.probs[i] = hits[dd - i];
  law.source = SizeLaw::Source::kExact;
  return law;
}

SizeLaw empirical_candidate_size_law(const Params& params, std::uint64_t draws, SplitMix64& rng) {
  if (draws == 0) throw UsageError("empirical_candidate_size_law: draws must be >= 1");
  const auto d = static_cast<std::size_t>(params.d());
  std::vector<std::uint64_t> counts(d + 1, 0);
  std::vector<std::int8_t> sigma(d);
  for (std::uint64_t t = 0; t < draws; ++t) {
    const auto u = random_hypothesis(params, rng);
    for (auto& s : sigma) s = rng.below(2) ? 1 : -1;
    const auto S = sample_training_set(params, u, rng);
    ++counts[candidates(u, sigma, S.points(), params.d()).size()];
  }
  SizeLaw law;
  law.probs = stats::normalize(counts);
  law.source = SizeLaw::Source::kEmpirical;
  law.draws = draws;
  return law;
}

std::vector<double> target_size_law(int d) { return stats::binomial_pmf(d, 2.0 / 3.0); }

double dkw_margin(std::uint64_t draws, double alpha) {
  if (draws == 0) return 1.0;
  return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(draws)));
}

std::string DominanceReport::diagnostics() const {
  std::ostringstream os;
  os << std::setprecision(6);
  if (holds) {
    os << "CDF dominance holds (largest gap " << worst_gap << ", margin " << margin << ")";
  } else {
    const auto t = static_cast<std::size_t>(worst_t);
    os << "CDF dominance fails at t = " << worst_t << ": Pr[|P| <= t] = " << cdf_p[t]
       << " > Pr[|Q| <= t] = " << cdf_q[t] << " (margin " << margin
       << "); any step law is at least " << tv_lower_bound << " from uniform in TV";
  }
  os << "; regime k >= 4n/(ln(81/80) d) = " << regime_k_min << (regime_holds ? " holds" : " fails");
  return os.str();
}

DominanceReport check_dominance(const SizeLaw& law, const Params& params, double margin) {
  if (law.d() != params.d()) throw UsageError("check_dominance: law has the wrong dimension");
  const auto q = target_size_law(params.d());
  DominanceReport r;
  r.margin = margin;
  r.cdf_p.resize(q.size());
  r.cdf_q.resize(q.size());
  std::partial_sum(law.probs.begin(), law.probs.end(), r.cdf_p.begin());
  std::partial_sum(q.begin(), q.end(), r.cdf_q.begin());
  for (std::size_t t = 0; t < q.size(); ++t) {
    const double gap = r.cdf_p[t] - r.cdf_q[t];
    if (gap > r.worst_gap) {
      r.worst_gap = gap;
      r.worst_t = static_cast<int>(t);
    }
  }
  r.holds = r.worst_gap <= margin;
  r.tv_lower_bound = r.worst_gap;
  r.regime_k_min = 4.0 * static_cast<double>(params.n()) / (std::log(81.0 / 80.0) * params.d());
  r.regime_holds = params.k() >= r.regime_k_min;
  return r;
}

std::uint64_t direction_index(std::span<const std::int8_t> z) {
  std::uint64_t idx = 0;
  for (std::size_t a = z.size(); a-- > 0;) idx = idx * 3 + static_cast<std::uint64_t>(z[a] + 1);
  return idx;
}

StepSampler::StepSampler(const Params& params, SizeLaw law, DominancePolicy policy,
                         std::optional<double> margin)
    : params_(params), law_(std::move(law)) {
  if (law_.d() != params.d()) throw UsageError("StepSampler: law of |P| must have d+1 entries");
  const double m = margin.value_or(law_.source == SizeLaw::Source::kEmpirical ? dkw_margin(law_.draws)
                                                                                : 1e-12);
  dominance_ = check_dominance(law_, params_, m);
  if (!dominance_.holds && policy == DominancePolicy::kStrict) {
    throw VerificationError("random step: " + dominance_.diagnostics());
  }
  // F = min(F_P, F_Q) is unchanged when dominance holds exactly and removes
  // sub-margin noise otherwise.
  coupled_.resize(law_.probs.size());
  double prev = 0.0;
  for (std::size_t t = 0; t < coupled_.size(); ++t) {
    const double f = std::max(prev, std::min(dominance_.cdf_p[t], dominance_.cdf_q[t]));
    coupled_[t] = f - prev;
    prev = f;
  }
  coupled_.back() += 1.0 - prev;
  repaired_ = dominance_.worst_gap > 0.0;
  coupling_ = majorization_coupling(coupled_, target_size_law(params_.d()));
}

StepOutcome StepSampler::step(const HypothesisIndex& u, const LabeledSample& S, SplitMix64& rng) const {
  require_shape(u, params_, "random_step");
  if (static_cast<std::int64_t>(S.size()) != params_.n()) {
    throw UsageError("random_step: sample has " + std::to_string(S.size()) + " points, Params has n = " +
                     std::to_string(params_.n()));
  }
  const auto d = static_cast<std::size_t>(params_.d());
  StepOutcome out;
  out.u = u;
  out.signs.resize(d);
  for (auto& s : out.signs) s = rng.below(2) ? 1 : -1;
  out.candidate_set = candidate_direction_set(u, out.signs, S, params_);

  const int i = static_cast<int>(out.candidate_set.size());
  const auto row = coupling_.row(i);
  const double r = rng.uniform();
  int j = -1;
  double cum = 0.0;
  for (int c = 0; c <= i; ++c) {
    cum += row[static_cast<std::size_t>(c)];
    if (r < cum) {
      j = c;
      break;
    }
  }
  if (j < 0) {
    // r landed in the rounding slack above the last positive entry.
    for (j = i; j > 0 && row[static_cast<std::size_t>(j)] <= 0.0; --j) {
    }
  }

  // Keep a uniform j-subset of P (partial Fisher-Yates).
  out.kept = out.candidate_set;
  for (int c = 0; c < j; ++c) {
    const auto pick = static_cast<std::size_t>(c) + rng.below(static_cast<std::uint64_t>(i - c));
    std::swap(out.kept[static_cast<std::size_t>(c)], out.kept[pick]);
  }
  out.kept.resize(static_cast<std::size_t>(j));
  std::sort(out.kept.begin(), out.kept.end());

  out.direction.assign(d, 0);
  for (int a : out.kept) out.direction[static_cast<std::size_t>(a)] = out.signs[static_cast<std::size_t>(a)];
  std::vector<std::int32_t> offset(out.direction.begin(), out.direction.end());
  out.v = u.shifted(offset);
  return out;
}

StepOutcome random_step(const HypothesisIndex& u, const LabeledSample& S, const Params& params,
                        SplitMix64& rng) {
  const StepSampler sampler(params, exact_candidate_size_law(params.d(), params.k(), params.n()));
  return sampler.step(u, S, rng);
}

namespace {

inline constexpr std::uint64_t kMaxVBins = 4096;
inline constexpr std::size_t kSampleBuckets = 8;

std::uint64_t sample_hash(std::span<const LabeledPoint> S) {
  std::uint64_t h = mix64(S.size());
  for (const auto& lp : S) {
    h = mix64(h ^ (static_cast<std::uint64_t>(lp.point.axis) << 32 | static_cast<std::uint32_t>(lp.point.position)));
  }
  return h;
}

}  // namespace

StepVerification verify_step_distribution(const Params& params, std::uint64_t trials, SplitMix64& rng) {
  if (params.d() > kMaxVerifyDimension) {
    throw UsageError("verify_step_distribution: d must be <= " + std::to_string(kMaxVerifyDimension));
  }
  if (trials == 0) throw UsageError("verify_step_distribution: trials must be >= 1");
  const StepSampler sampler(params, exact_candidate_size_law(params.d(), params.k(), params.n()),
                            DominancePolicy::kReportOnly);
  const int d = params.d();
  const auto k = static_cast<std::uint64_t>(params.k());

  StepVerification rep;
  rep.d = d;
  rep.k = params.k();
  rep.n = params.n();
  rep.trials = trials;
  rep.dominance = sampler.dominance();
  rep.repaired = sampler.repaired();

  std::uint64_t zcount = 1;
  for (int a = 0; a < d; ++a) zcount *= 3;
  // Leading coordinates of v, as many as fit in kMaxVBins.
  int lead = 0;
  std::uint64_t vbins = 1;
  while (lead < d && vbins * k <= kMaxVBins) {
    vbins *= k;
    ++lead;
  }
  rep.v_bins = vbins;
  rep.s_buckets = kSampleBuckets;
  rep.direction_counts.assign(zcount, 0);
  std::vector<std::uint64_t> v_counts(vbins, 0), u_counts(vbins, 0);
  std::vector<std::uint64_t> v_by_s(k * kSampleBuckets, 0), z_by_s(zcount * kSampleBuckets, 0);
  rep.kept_size_counts.assign(static_cast<std::size_t>(d) + 1, 0);
  rep.candidate_size_counts.assign(static_cast<std::size_t>(d) + 1, 0);

  auto bin = [&](const HypothesisIndex& h) {
    std::uint64_t b = 0;
    for (int a = 0; a < lead; ++a) b = b * k + static_cast<std::uint64_t>(h[static_cast<std::size_t>(a)]);
    return b;
  };

  const std::uint64_t master = rng();
  for (std::uint64_t t = 0; t < trials; ++t) {
    auto target_rng = derive_stream(master, t, StreamRole::kTarget);
    auto sample_rng = derive_stream(master, t, StreamRole::kSample1);
    auto step_rng = derive_stream(master, t, StreamRole::kAux);
    const auto u = random_hypothesis(params, target_rng);
    const auto S = sample_training_set(params, u, sample_rng);
    const auto out = sampler.step(u, S, step_rng);

    bool in_z = true;
    for (int a = 0; a < d; ++a) {
      const auto diff = mod_k(std::int64_t{out.v[static_cast<std::size_t>(a)]} - u[static_cast<std::size_t>(a)],
                              params.k());
      const std::int64_t z = diff == 0 ? 0 : diff == 1 ? 1 : diff == params.k() - 1 ? -1 : 2;
      if (z != out.direction[static_cast<std::size_t>(a)]) in_z = false;
      if (z != 0 && !std::binary_search(out.candidate_set.begin(), out.candidate_set.end(), a)) in_z = false;
    }
    rep.support_violations += !in_z;
    for (const auto& lp : S) {
      if (evaluate_hypothesis(out.v, lp.point) != evaluate_hypothesis(u, lp.point)) {
        ++rep.label_violations;
        break;
      }
    }

    const auto zi = direction_index(out.direction);
    const auto bucket = sample_hash(S.points()) % kSampleBuckets;
    ++rep.direction_counts[zi];
    ++v_counts[bin(out.v)];
    ++u_counts[bin(u)];
    ++v_by_s[static_cast<std::uint64_t>(out.v[0]) * kSampleBuckets + bucket];
    ++z_by_s[zi * kSampleBuckets + bucket];
    ++rep.kept_size_counts[out.kept.size()];
    ++rep.candidate_size_counts[out.candidate_set.size()];
  }

  const std::vector<double> uz(zcount, 1.0 / static_cast<double>(zcount));
  rep.direction_tv = stats::tv_distance(stats::normalize(rep.direction_counts), uz);
  rep.direction_chi2 = stats::chi_square_gof(rep.direction_counts, uz);
  const std::vector<double> uv(vbins, 1.0 / static_cast<double>(vbins));
  rep.v_tv = stats::tv_distance(stats::normalize(v_counts), uv);
  rep.v_chi2 = stats::chi_square_gof(v_counts, uv);
  rep.u_tv = stats::tv_distance(stats::normalize(u_counts), uv);
  rep.v_given_s_chi2 = stats::chi_square_independence(v_by_s, k, kSampleBuckets);
  rep.direction_given_s_chi2 = stats::chi_square_independence(z_by_s, zcount, kSampleBuckets);
  const auto q = target_size_law(d);
  rep.kept_size_tv = stats::tv_distance(stats::normalize(rep.kept_size_counts), q);
  rep.kept_size_chi2 = stats::chi_square_gof(rep.kept_size_counts, q);
  return rep;
}

}  // namespace replearn
