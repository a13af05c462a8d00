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

#include "replearn/learner.hpp"

#include <algorithm>
#include <limits>
#include <unordered_map>

#include "replearn/errors.hpp"

namespace replearn {

std::uint64_t hypothesis_priority(const SharedKey& key, std::span<const std::int32_t> coords) {
  std::uint64_t h = mix64(key.hi ^ mix64(key.lo + kGolden));
  for (std::size_t a = 0; a < coords.size(); ++a) {
    h = mix64((h ^ static_cast<std::uint64_t>(coords[a])) + kGolden * (a + 1));
  }
  return h;
}

bool precedes(const SharedKey& key, const HypothesisIndex& a, const HypothesisIndex& b) {
  const auto pa = hypothesis_priority(key, a);
  const auto pb = hypothesis_priority(key, b);
  if (pa != pb) return pa < pb;
  return a < b;
}

TransitionEstimate estimate_transitions(const LabeledSample& sample, const Params& params) {
  const int d = params.d();
  const int k = params.k();
  // -1 = unobserved, otherwise the label seen at that position.
  std::vector<std::int8_t> seen(static_cast<std::size_t>(d) * static_cast<std::size_t>(k), -1);
  std::vector<bool> conflict(static_cast<std::size_t>(d), false);
  for (const auto& lp : sample) {
    const auto [a, b] = lp.point;
    if (a < 0 || a >= d || b < 0 || b >= k) {
      throw UsageError("estimate_transitions: sample point outside [d] x Z_k");
    }
    auto& cell = seen[static_cast<std::size_t>(a) * static_cast<std::size_t>(k) + static_cast<std::size_t>(b)];
    if (cell < 0) {
      cell = static_cast<std::int8_t>(lp.label != 0);
    } else if (cell != static_cast<std::int8_t>(lp.label != 0)) {
      conflict[static_cast<std::size_t>(a)] = true;
    }
  }

  TransitionEstimate est;
  std::vector<std::int32_t> center(static_cast<std::size_t>(d), 0);
  std::vector<std::int32_t> observed;
  observed.reserve(static_cast<std::size_t>(k));
  for (int a = 0; a < d; ++a) {
    if (conflict[static_cast<std::size_t>(a)]) est.conflicting_label_axes.push_back(a);
    const auto* row = &seen[static_cast<std::size_t>(a) * static_cast<std::size_t>(k)];
    observed.clear();
    bool any0 = false, any1 = false;
    for (int b = 0; b < k; ++b) {
      if (row[b] < 0) continue;
      observed.push_back(b);
      (row[b] ? any1 : any0) = true;
    }
    if (!any0 || !any1) {
      est.degenerate_axes.push_back(a);
      continue;
    }
    int transitions = 0;
    const std::size_t m = observed.size();
    for (std::size_t j = 0; j < m; ++j) {
      const auto cur = observed[j];
      const auto pred = observed[(j + m - 1) % m];
      if (row[cur] == 1 && row[pred] == 0) {
        if (transitions++ == 0) center[static_cast<std::size_t>(a)] = cur;
      }
    }
    if (transitions > 1) est.multi_transition_axes.push_back(a);
  }
  est.center = HypothesisIndex(std::move(center), k);
  return est;
}

BigInt acceptance_ball_size(const Params& params, std::int64_t radius) {
  return wrap_ball_count(params.d(), radius, params.k());
}

namespace {

// Visits every offset vector with entries in [-cap, cap] and l1 norm <= budget
// in lexicographic order; f receives the current offsets.
template <typename F>
void visit_offsets(std::vector<std::int32_t>& off, std::size_t axis, std::int64_t cap,
                   std::int64_t budget, F& f) {
  if (axis == off.size()) {
    f(std::span<const std::int32_t>(off));
    return;
  }
  const std::int64_t m = std::min(cap, budget);
  for (std::int64_t x = -m; x <= m; ++x) {
    off[axis] = static_cast<std::int32_t>(x);
    visit_offsets(off, axis + 1, cap, budget - (x < 0 ? -x : x), f);
  }
}

template <typename F>
void for_each_offset(int d, std::int64_t cap, std::int64_t radius, F&& f) {
  std::vector<std::int32_t> off(static_cast<std::size_t>(d), 0);
  visit_offsets(off, 0, cap, radius, f);
}

void check_ball_cap(const Params& params, std::int64_t radius) {
  const std::int64_t cap = std::min<std::int64_t>(params.half(), radius);
  // (2 cap + 1)^d bounds the ball; only count exactly when the bound is large.
  long double bound = 1.0L;
  for (int a = 0; a < params.d(); ++a) bound *= static_cast<long double>(2 * cap + 1);
  if (bound <= static_cast<long double>(params.ball_cap())) return;
  const BigInt size = acceptance_ball_size(params, radius);
  if (size > params.ball_cap()) {
    const std::uint64_t need = size > std::numeric_limits<std::uint64_t>::max()
                                   ? std::numeric_limits<std::uint64_t>::max()
                                   : size.convert_to<std::uint64_t>();
    throw ResourceError("acceptance ball holds " + size.str() +
                            " hypotheses, above the cap of " + std::to_string(params.ball_cap()) +
                            "; raise ball_cap to at least " + std::to_string(need),
                        need);
  }
}

void check_center(const HypothesisIndex& center, const Params& params) {
  if (center.d() != params.d() || center.k() != params.k()) {
    throw UsageError("acceptance ball: center does not match Params (d, k)");
  }
}

}  // namespace

void enumerate_acceptance_ball(const HypothesisIndex& center, std::int64_t radius,
                               const Params& params,
                               const std::function<void(const HypothesisIndex&)>& visit) {
  check_center(center, params);
  if (radius < 0) throw UsageError("acceptance ball: radius must be >= 0");
  check_ball_cap(params, radius);
  for_each_offset(params.d(), params.half(), radius,
                  [&](std::span<const std::int32_t> off) { visit(center.shifted(off)); });
}

std::vector<HypothesisIndex> collect_acceptance_ball(const HypothesisIndex& center,
                                                     std::int64_t radius, const Params& params) {
  std::vector<HypothesisIndex> out;
  enumerate_acceptance_ball(center, radius, params,
                            [&](const HypothesisIndex& i) { out.push_back(i); });
  return out;
}

HypothesisIndex select_in_ball(const HypothesisIndex& center, std::int64_t radius,
                               const Params& params, const SharedKey& key) {
  check_center(center, params);
  if (radius < 0) throw UsageError("acceptance ball: radius must be >= 0");
  check_ball_cap(params, radius);
  const int k = params.k();
  const auto d = static_cast<std::size_t>(params.d());
  std::vector<std::int32_t> cur(d), best(d);
  std::uint64_t best_priority = std::numeric_limits<std::uint64_t>::max();
  bool have = false;
  for_each_offset(params.d(), params.half(), radius, [&](std::span<const std::int32_t> off) {
    for (std::size_t a = 0; a < d; ++a) {
      cur[a] = static_cast<std::int32_t>(mod_k(std::int64_t{center[a]} + off[a], k));
    }
    const auto p = hypothesis_priority(key, cur);
    if (!have || p < best_priority || (p == best_priority && cur < best)) {
      best_priority = p;
      best = cur;
      have = true;
    }
  });
  return HypothesisIndex(std::move(best), k);
}

LearnResult replicable_learn_detailed(const LabeledSample& sample, const Params& params,
                                      const SharedKey& key) {
  LearnResult r;
  r.estimate = estimate_transitions(sample, params);
  r.radius = params.acceptance_radius();
  r.output = select_in_ball(r.estimate.center, r.radius, params, key);
  return r;
}

namespace {

std::uint64_t checked_power(std::uint64_t base, std::int64_t exp, std::uint64_t limit) {
  std::uint64_t r = 1;
  for (std::int64_t i = 0; i < exp; ++i) {
    if (base != 0 && r > limit / base) return limit + 1;
    r *= base;
  }
  return r;
}

}  // namespace

ModeEntry exact_mode(const Params& params, const HypothesisIndex& target, const SharedKey& key) {
  if (target.d() != params.d() || target.k() != params.k()) {
    throw UsageError("exact_mode: target does not match Params (d, k)");
  }
  const auto points = static_cast<std::uint64_t>(params.domain_size());
  const std::uint64_t total = checked_power(points, params.n(), kMaxModeSamples);
  if (total > kMaxModeSamples) {
    throw ResourceError("exact_mode: (dk)^n exceeds " + std::to_string(kMaxModeSamples) +
                            " samples",
                        std::numeric_limits<std::uint64_t>::max());
  }

  const auto n = static_cast<std::size_t>(params.n());
  const auto k = static_cast<std::uint64_t>(params.k());
  const std::int64_t radius = params.acceptance_radius();
  // The output depends on S only through b^S.
  std::unordered_map<std::uint64_t, HypothesisIndex> by_center;
  std::map<HypothesisIndex, std::uint64_t> outputs;
  std::vector<std::uint64_t> digits(n, 0);
  std::vector<LabeledPoint> pts(n);
  for (std::uint64_t s = 0; s < total; ++s) {
    for (std::size_t t = 0; t < n; ++t) {
      const Point p{static_cast<std::int32_t>(digits[t] / k), static_cast<std::int32_t>(digits[t] % k)};
      pts[t] = {p, evaluate_hypothesis(target, p)};
    }
    const auto est = estimate_transitions(LabeledSample::unchecked(pts), params);
    const auto code = est.center.encode();
    auto it = by_center.find(code);
    if (it == by_center.end()) {
      it = by_center.emplace(code, select_in_ball(est.center, radius, params, key)).first;
    }
    ++outputs[it->second];
    for (std::size_t t = 0; t < n; ++t) {
      if (++digits[t] < points) break;
      digits[t] = 0;
    }
  }

  ModeEntry e;
  e.target = target;
  e.total = total;
  std::map<Labeling, HypothesisIndex> hyp_of;
  for (const auto& [h, c] : outputs) {
    auto f = labeling_of(h);
    e.distribution[f] += c;
    hyp_of.emplace(std::move(f), h);
  }
  // std::map iterates labelings in lexicographic order, so strict '>' keeps
  // the lexicographically smallest among tied maxima.
  for (const auto& [f, c] : e.distribution) {
    if (c > e.mode_count) {
      e.mode_count = c;
      e.mode_labeling = f;
      e.mode_hypothesis = hyp_of.at(f);
    }
  }
  return e;
}

ModeClasses build_mode_classes(const Params& params, const SharedKey& key) {
  const std::uint64_t hyps =
      checked_power(static_cast<std::uint64_t>(params.k()), params.d(), kMaxModeHypotheses);
  if (hyps > kMaxModeHypotheses) {
    throw ResourceError("build_mode_classes: k^d exceeds " + std::to_string(kMaxModeHypotheses),
                        std::numeric_limits<std::uint64_t>::max());
  }
  ModeClasses mc;
  mc.entries.reserve(hyps);
  for (std::uint64_t code = 0; code < hyps; ++code) {
    const auto u = HypothesisIndex::decode(code, params.d(), params.k());
    mc.entries.push_back(exact_mode(params, u, key));
    const auto& e = mc.entries.back();
    if (error_vs_labeling(e.mode_labeling, u, params) <= params.epsilon()) {
      mc.class_map[e.mode_labeling].push_back(u);
      ++mc.retained;
    } else {
      ++mc.dropped;
    }
  }
  for (const auto& [f, members] : mc.class_map) {
    mc.largest_class = std::max(mc.largest_class, members.size());
  }
  const double ek = params.epsilon() * params.k();
  mc.cf_bound = std::pow(6.0 * ek, params.d());
  mc.cf_bound_applies = ek >= 2.0 && params.d() >= 8;
  if (mc.cf_bound_applies) {
    mc.cf_bound_holds = static_cast<double>(mc.largest_class) <= mc.cf_bound;
  }
  return mc;
}

}  // namespace replearn
