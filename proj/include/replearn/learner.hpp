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

// The replicable learner: per-axis transition estimates, the wrap-around
// acceptance ball around them, and selection of the accepted hypothesis with
// the smallest shared-key priority. Also exact mode computation for tiny
// instances.

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "replearn/balls.hpp"
#include "replearn/domain.hpp"

namespace replearn {

// Shared randomness r. Two runs with the same key see the same priority for
// every hypothesis, which is the same as sharing one uniform shuffle of H.
struct SharedKey {
  std::uint64_t hi = 0;
  std::uint64_t lo = 0;

  static SharedKey from_stream(SplitMix64& rng) {
    const auto hi = rng();
    return {hi, rng()};
  }
  friend bool operator==(const SharedKey&, const SharedKey&) = default;
};

// Keyed 64-bit priority of a hypothesis, bit-exact:
//   h = mix64(key.hi ^ mix64(key.lo + kGolden))
//   for a = 0..d-1:  h = mix64((h ^ uint64(i_a)) + kGolden * (a + 1))
// with mix64 the SplitMix64 finalizer. Lower priority = earlier in the shuffle.
std::uint64_t hypothesis_priority(const SharedKey& key, std::span<const std::int32_t> coords);

inline std::uint64_t hypothesis_priority(const SharedKey& key, const HypothesisIndex& i) {
  return hypothesis_priority(key, i.coords());
}

// (priority, coords) order; the coords break 64-bit ties lexicographically.
bool precedes(const SharedKey& key, const HypothesisIndex& a, const HypothesisIndex& b);

struct TransitionEstimate {
  HypothesisIndex center;
  // Axes with more than one observed 0 -> 1 transition (only possible for
  // corrupted labels); the first transition in sorted order was used.
  std::vector<int> multi_transition_axes;
  // Axes where one position carried both labels; the first label seen was used.
  std::vector<int> conflicting_label_axes;
  // Axes with no 0-labels or no 1-labels, estimated as 0.
  std::vector<int> degenerate_axes;
};

// b^S: per axis, the observed position labeled 1 whose cyclic predecessor
// among the observed positions is labeled 0; 0 if the axis lacks either label.
TransitionEstimate estimate_transitions(const LabeledSample& sample, const Params& params);

// Exact size of {i : nu(center, i) <= radius}.
BigInt acceptance_ball_size(const Params& params, std::int64_t radius);

// Calls visit(i) for every i with nu(center, i) <= radius, once each, in
// lexicographic order of the offset vectors (each offset in
// [-floor(k/2), floor(k/2)]). Throws ResourceError when the exact ball size
// exceeds params.ball_cap().
void enumerate_acceptance_ball(const HypothesisIndex& center, std::int64_t radius,
                               const Params& params,
                               const std::function<void(const HypothesisIndex&)>& visit);

std::vector<HypothesisIndex> collect_acceptance_ball(const HypothesisIndex& center,
                                                     std::int64_t radius, const Params& params);

struct LearnResult {
  HypothesisIndex output;
  TransitionEstimate estimate;
  std::int64_t radius = 0;
};

// The first hypothesis of the keyed shuffle accepted by the sample, i.e.
// the minimum-priority element of the acceptance ball around b^S with radius
// params.acceptance_radius().
LearnResult replicable_learn_detailed(const LabeledSample& sample, const Params& params,
                                      const SharedKey& key);

inline HypothesisIndex replicable_learn(const LabeledSample& sample, const Params& params,
                                        const SharedKey& key) {
  return replicable_learn_detailed(sample, params, key).output;
}

// The argmin step alone, for callers that already have b^S.
HypothesisIndex select_in_ball(const HypothesisIndex& center, std::int64_t radius,
                               const Params& params, const SharedKey& key);

// Exact output law of the learner for one target: every ordered sample in
// X^n is enumerated once (all equiprobable).
struct ModeEntry {
  HypothesisIndex target;
  Labeling mode_labeling;
  HypothesisIndex mode_hypothesis;
  std::uint64_t mode_count = 0;
  std::uint64_t total = 0;  // (dk)^n
  // labeling -> number of samples producing it; counts sum to total.
  std::map<Labeling, std::uint64_t> distribution;

  double mode_probability() const {
    return static_cast<double>(mode_count) / static_cast<double>(total);
  }
};

inline constexpr std::uint64_t kMaxModeSamples = 10'000'000;
inline constexpr std::uint64_t kMaxModeHypotheses = 10'000;

// Throws ResourceError when (dk)^n > kMaxModeSamples.
ModeEntry exact_mode(const Params& params, const HypothesisIndex& target, const SharedKey& key);

struct ModeClasses {
  // mode(h_u) for every u, indexed by u.encode().
  std::vector<ModeEntry> entries;
  // C_f: hypotheses u with mode(h_u) = f and er_{h_u}(f) <= epsilon.
  std::map<Labeling, std::vector<HypothesisIndex>> class_map;
  std::size_t retained = 0;
  std::size_t dropped = 0;
  // |C_f| <= (6 eps k)^d is only claimed when eps k >= 2 and d >= 8.
  bool cf_bound_applies = false;
  double cf_bound = 0.0;
  std::size_t largest_class = 0;
  bool cf_bound_holds = true;
};

// Throws ResourceError when k^d > kMaxModeHypotheses or exact_mode is infeasible.
ModeClasses build_mode_classes(const Params& params, const SharedKey& key);

}  // namespace replearn
