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
#include <map>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "replearn/errors.hpp"

namespace replearn {
namespace {

std::vector<HypothesisIndex> all_tuples(int d, int k) {
  std::vector<HypothesisIndex> out;
  std::uint64_t total = 1;
  for (int a = 0; a < d; ++a) total *= static_cast<std::uint64_t>(k);
  for (std::uint64_t c = 0; c < total; ++c) out.push_back(HypothesisIndex::decode(c, d, k));
  return out;
}

LabeledSample sample_of(const HypothesisIndex& target, const std::vector<Point>& pts) {
  std::vector<LabeledPoint> lp;
  for (const auto& p : pts) lp.push_back({p, evaluate_hypothesis(target, p)});
  return LabeledSample(target, lp);
}

Params with_radius_fraction(Params p, double f) {
  p.set_radius_fraction(f);
  return p;
}

// One-axis transition by direct scan: the 1-labeled observed position whose
// nearest observed position going backwards round the cycle is 0-labeled.
int one_axis_transition(const std::map<int, int>& observed) {
  bool has0 = false, has1 = false;
  for (const auto& [b, l] : observed) (l ? has1 : has0) = true;
  if (!has0 || !has1) return 0;
  for (const auto& [b, l] : observed) {
    if (l != 1) continue;
    auto it = observed.find(b);
    const int prev_label = it == observed.begin() ? observed.rbegin()->second : std::prev(it)->second;
    if (prev_label == 0) return b;
  }
  return -1;
}

TEST(Priority, BitExactValues) {
  const std::vector<std::int32_t> c = {3, 4};
  EXPECT_EQ(hypothesis_priority(SharedKey{1, 2}, c), 0x4ebf2ed7e1e8e06cULL);
  EXPECT_EQ(hypothesis_priority(SharedKey{0, 0}, std::span<const std::int32_t>{}), 0x48218226ff3cd4bfULL);
  EXPECT_EQ(hypothesis_priority(SharedKey{0xdeadbeef, 0x12345678}, HypothesisIndex({0, 28, 13, 7}, 29)),
            0xedb359e23970bda4ULL);
}

TEST(Priority, SameKeySamePriority) {
  SplitMix64 rng(1);
  const auto key = SharedKey::from_stream(rng);
  const SharedKey copy = key;
  for (const auto& h : all_tuples(2, 7)) EXPECT_EQ(hypothesis_priority(key, h), hypothesis_priority(copy, h));
}

TEST(Transitions, HandSimulatedExample) {
  const Params p(1, 7, 0.1, 0.1, 0.1, 3);
  const HypothesisIndex t({2}, 7);
  const auto S = sample_of(t, {{0, 1}, {0, 2}, {0, 5}});
  const auto est = estimate_transitions(S, p);
  EXPECT_EQ(est.center, t);
  EXPECT_TRUE(est.degenerate_axes.empty());
}

TEST(Transitions, AllZeroAxisFallsBackToZero) {
  const Params p(2, 7, 0.1, 0.1, 0.1, 3);
  const HypothesisIndex t({2, 4}, 7);
  // Axis 1 sees only positions 0, 1, 2, which h_t labels 0.
  const auto S = sample_of(t, {{0, 1}, {0, 2}, {1, 0}, {1, 1}, {1, 2}});
  const auto est = estimate_transitions(S, p);
  EXPECT_EQ(est.center, HypothesisIndex({2, 0}, 7));
  EXPECT_EQ(est.degenerate_axes, std::vector<int>{1});
}

TEST(Transitions, FullCoverageRecoversTarget) {
  const Params p(3, 11, 0.1, 0.1, 0.1, 0);
  SplitMix64 rng(2);
  for (int rep = 0; rep < 50; ++rep) {
    const auto t = random_hypothesis(p, rng);
    std::vector<Point> pts;
    for (int a = 0; a < 3; ++a) {
      for (int b = 10; b >= 0; --b) pts.push_back({a, b});
    }
    EXPECT_EQ(estimate_transitions(sample_of(t, pts), p).center, t);
  }
}

TEST(Transitions, WrapAroundPredecessor) {
  // Target 5 with k = 7 labels {5, 6, 0} as 1. Observed {1, 6}: 6 is preceded by 1.
  const Params p(1, 7, 0.1, 0.1, 0.1, 2);
  EXPECT_EQ(estimate_transitions(sample_of(HypothesisIndex({5}, 7), {{0, 1}, {0, 6}}), p).center[0], 6);
  // Observed {0, 3}: 0 (label 1) wraps back to 3 (label 0).
  EXPECT_EQ(estimate_transitions(sample_of(HypothesisIndex({5}, 7), {{0, 3}, {0, 0}}), p).center[0], 0);
}

TEST(Transitions, CorruptedLabelsAreFlagged) {
  const Params p(1, 7, 0.1, 0.1, 0.1, 4);
  // 0,1,0,1 around the cycle has two transitions.
  const auto S = LabeledSample::unchecked({{{0, 0}, 0}, {{0, 1}, 1}, {{0, 2}, 0}, {{0, 3}, 1}, {{0, 3}, 0}});
  const auto est = estimate_transitions(S, p);
  EXPECT_EQ(est.center[0], 1);
  EXPECT_EQ(est.multi_transition_axes, std::vector<int>{0});
  EXPECT_EQ(est.conflicting_label_axes, std::vector<int>{0});
}

TEST(Transitions, MatchesDirectScanOnRandomSamples) {
  const Params p(3, 13, 0.1, 0.1, 0.1, 8);
  SplitMix64 rng(3);
  for (int rep = 0; rep < 2000; ++rep) {
    const auto t = random_hypothesis(p, rng);
    const auto S = sample_training_set(p, t, rng);
    std::vector<std::map<int, int>> seen(3);
    for (const auto& lp : S) seen[static_cast<std::size_t>(lp.point.axis)][lp.point.position] = lp.label;
    const auto est = estimate_transitions(S, p);
    for (int a = 0; a < 3; ++a) EXPECT_EQ(est.center[static_cast<std::size_t>(a)], one_axis_transition(seen[static_cast<std::size_t>(a)]));
  }
}

TEST(AcceptanceBall, Examples) {
  const Params p1(1, 7, 0.1, 0.1, 0.1, 0);
  const auto b = collect_acceptance_ball(HypothesisIndex({0}, 7), 1, p1);
  EXPECT_EQ(b, (std::vector<HypothesisIndex>{HypothesisIndex({6}, 7), HypothesisIndex({0}, 7), HypothesisIndex({1}, 7)}));

  const Params p2(2, 5, 0.1, 0.1, 0.1, 0);
  EXPECT_EQ(collect_acceptance_ball(HypothesisIndex({3, 1}, 5), 2, p2).size(), 13u);
  EXPECT_EQ(acceptance_ball_size(p2, 2), 13);
}

TEST(AcceptanceBall, EqualsFilteredEnumeration) {
  for (int k : {3, 5, 7}) {
    for (int d : {1, 2, 3}) {
      const Params p(d, k, 0.1, 0.1, 0.1, 0);
      const auto all = all_tuples(d, k);
      const auto& center = all[all.size() / 3];
      for (int r = 0; r <= d * (k / 2) + 1; ++r) {
        std::set<HypothesisIndex> expect;
        for (const auto& h : all) {
          if (tuple_distance(center, h) <= r) expect.insert(h);
        }
        const auto got = collect_acceptance_ball(center, r, p);
        EXPECT_EQ(std::set<HypothesisIndex>(got.begin(), got.end()), expect);
        EXPECT_EQ(got.size(), expect.size());
        EXPECT_EQ(acceptance_ball_size(p, r), expect.size());
      }
    }
  }
}

TEST(AcceptanceBall, CapRaisesResourceError) {
  Params p(6, 101, 0.5, 0.1, 0.1, 0);
  p.set_ball_cap(1000);
  try {
    collect_acceptance_ball(HypothesisIndex::zero(6, 101), 10, p);
    FAIL();
  } catch (const ResourceError& e) {
    EXPECT_EQ(e.required_cap(), acceptance_ball_size(p, 10).convert_to<std::uint64_t>());
  }
  EXPECT_THROW(select_in_ball(HypothesisIndex::zero(6, 101), 10, p, SharedKey{}), ResourceError);
  EXPECT_THROW(collect_acceptance_ball(HypothesisIndex::zero(5, 101), 1, p), UsageError);
  EXPECT_THROW(collect_acceptance_ball(HypothesisIndex::zero(6, 101), -1, p), UsageError);
}

TEST(Selection, RadiusZeroReturnsCenter) {
  const Params p = with_radius_fraction(Params(3, 11, 0.3, 0.1, 0.1, 40), 0.0);
  SplitMix64 rng(4);
  for (int rep = 0; rep < 100; ++rep) {
    const auto t = random_hypothesis(p, rng);
    const auto S = sample_training_set(p, t, rng);
    const auto key = SharedKey::from_stream(rng);
    EXPECT_EQ(replicable_learn(S, p, key), estimate_transitions(S, p).center);
  }
}

TEST(Selection, FullCoverageWithRadiusZeroIsExact) {
  const Params p = with_radius_fraction(Params(2, 7, 0.3, 0.1, 0.1, 0), 0.0);
  const HypothesisIndex t({4, 6}, 7);
  std::vector<Point> pts;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 7; ++b) pts.push_back({a, b});
  }
  EXPECT_EQ(replicable_learn(sample_of(t, pts), p, SharedKey{9, 9}), t);
}

TEST(Selection, EqualsFirstAcceptedInExplicitShuffle) {
  SplitMix64 rng(5);
  for (auto [d, k] : {std::pair{2, 7}, std::pair{3, 11}, std::pair{4, 7}, std::pair{2, 97}}) {
    const Params p(d, k, 0.1, 0.1, 0.1, 0);
    auto all = all_tuples(d, k);
    for (int rep = 0; rep < 20; ++rep) {
      const auto key = SharedKey::from_stream(rng);
      std::sort(all.begin(), all.end(), [&](const auto& a, const auto& b) {
        const auto pa = hypothesis_priority(key, a), pb = hypothesis_priority(key, b);
        return pa != pb ? pa < pb : a < b;
      });
      const auto center = random_hypothesis(p, rng);
      for (std::int64_t r : {0, 1, 2, 5}) {
        const auto first = std::find_if(all.begin(), all.end(), [&](const auto& h) { return tuple_distance(center, h) <= r; });
        ASSERT_NE(first, all.end());
        EXPECT_EQ(select_in_ball(center, r, p, key), *first);
      }
    }
  }
}

TEST(Selection, OutputStaysInsideTheBall) {
  const Params p(4, 29, 0.3, 0.1, 0.1, 30);
  SplitMix64 rng(6);
  for (int rep = 0; rep < 300; ++rep) {
    const auto t = random_hypothesis(p, rng);
    const auto S = sample_training_set(p, t, rng);
    const auto r = replicable_learn_detailed(S, p, SharedKey::from_stream(rng));
    EXPECT_EQ(r.radius, 8);
    EXPECT_LE(tuple_distance(r.estimate.center, r.output), r.radius);
  }
}

TEST(Selection, MutualAcceptanceImpliesSameOutput) {
  const Params p(4, 29, 0.3, 0.1, 0.1, 30);
  const auto R = p.acceptance_radius();
  SplitMix64 rng(7);
  int mutual = 0;
  for (int rep = 0; rep < 3000; ++rep) {
    const auto t = random_hypothesis(p, rng);
    const auto key = SharedKey::from_stream(rng);
    const auto a = replicable_learn_detailed(sample_training_set(p, t, rng), p, key);
    const auto b = replicable_learn_detailed(sample_training_set(p, t, rng), p, key);
    if (tuple_distance(a.output, b.estimate.center) <= R && tuple_distance(b.output, a.estimate.center) <= R) {
      ++mutual;
      EXPECT_EQ(a.output, b.output);
    }
  }
  EXPECT_GT(mutual, 100);
}

TEST(Selection, DeterministicInSampleThroughCenter) {
  const Params p(2, 11, 0.3, 0.1, 0.1, 0);
  const HypothesisIndex t({3, 8}, 11);
  const SharedKey key{5, 6};
  // Different samples with the same b^S.
  const auto s1 = sample_of(t, {{0, 2}, {0, 3}, {1, 7}, {1, 8}});
  const auto s2 = sample_of(t, {{0, 0}, {0, 3}, {0, 3}, {1, 1}, {1, 5}, {1, 8}});
  ASSERT_EQ(estimate_transitions(s1, p).center, estimate_transitions(s2, p).center);
  EXPECT_EQ(replicable_learn(s1, p, key), replicable_learn(s2, p, key));
  EXPECT_EQ(replicable_learn(s1, p, key), replicable_learn(s1, p, key));
}

TEST(Mode, WholeSpaceBallGivesGlobalMinimum) {
  const Params p = with_radius_fraction(Params(2, 5, 0.5, 0.1, 0.1, 2), 1.0);
  ASSERT_GE(p.acceptance_radius(), 4);
  const SharedKey key{11, 12};
  auto all = all_tuples(2, 5);
  const auto best = *std::min_element(all.begin(), all.end(), [&](const auto& a, const auto& b) { return precedes(key, a, b); });
  const auto e = exact_mode(p, HypothesisIndex({1, 3}, 5), key);
  EXPECT_EQ(e.mode_hypothesis, best);
  EXPECT_EQ(e.mode_probability(), 1.0);
  EXPECT_EQ(e.total, 100u);
}

TEST(Mode, EmptySampleHasProbabilityOne) {
  const Params p(2, 7, 0.3, 0.1, 0.1, 0);
  const auto e = exact_mode(p, HypothesisIndex({2, 2}, 7), SharedKey{1, 1});
  EXPECT_EQ(e.total, 1u);
  EXPECT_EQ(e.mode_probability(), 1.0);
  EXPECT_EQ(e.mode_hypothesis, select_in_ball(HypothesisIndex::zero(2, 7), p.acceptance_radius(), p, SharedKey{1, 1}));
}

TEST(Mode, MatchesExhaustiveTabulation) {
  const Params p = with_radius_fraction(Params(1, 3, 0.3, 0.1, 0.1, 2), 0.0);
  for (int tc = 0; tc < 3; ++tc) {
    const HypothesisIndex t({tc}, 3);
    // Nine ordered samples of two positions; with radius 0 the output is b^S.
    std::map<Labeling, std::uint64_t> tally;
    for (int x = 0; x < 3; ++x) {
      for (int y = 0; y < 3; ++y) {
        std::map<int, int> seen;
        seen[x] = evaluate_hypothesis(t, {0, x});
        seen[y] = evaluate_hypothesis(t, {0, y});
        const int b = one_axis_transition(seen);
        Labeling f(3);
        for (int z = 0; z < 3; ++z) f[static_cast<std::size_t>(z)] = ((z - b + 3) % 3) < 1;
        ++tally[f];
      }
    }
    Labeling mode;
    std::uint64_t best = 0;
    for (const auto& [f, c] : tally) {
      if (c > best) {
        best = c;
        mode = f;
      }
    }
    const auto e = exact_mode(p, t, SharedKey{3, 4});
    EXPECT_EQ(e.total, 9u);
    EXPECT_EQ(e.distribution, tally);
    EXPECT_EQ(e.mode_labeling, mode);
    EXPECT_EQ(e.mode_count, best);
  }
}

TEST(Mode, DistributionSumsToTotal) {
  const Params p(2, 5, 0.4, 0.1, 0.1, 3);
  const auto e = exact_mode(p, HypothesisIndex({4, 0}, 5), SharedKey{7, 8});
  std::uint64_t sum = 0;
  for (const auto& [f, c] : e.distribution) sum += c;
  EXPECT_EQ(sum, e.total);
  EXPECT_EQ(e.total, 1000u);
  EXPECT_EQ(e.distribution.at(e.mode_labeling), e.mode_count);
}

TEST(Mode, ScaleLimits) {
  EXPECT_THROW(exact_mode(Params(2, 11, 0.3, 0.1, 0.1, 8), HypothesisIndex::zero(2, 11), SharedKey{}), ResourceError);
  EXPECT_THROW(build_mode_classes(Params(5, 7, 0.3, 0.1, 0.1, 0), SharedKey{}), ResourceError);
}

TEST(ModeClasses, WholeSpaceBallGivesOneClass) {
  const Params p = with_radius_fraction(Params(2, 3, 0.999, 0.1, 0.1, 1), 1.0);
  const auto mc = build_mode_classes(p, SharedKey{21, 22});
  ASSERT_EQ(mc.class_map.size(), 1u);
  EXPECT_EQ(mc.class_map.begin()->second.size(), 9u);
  EXPECT_EQ(mc.retained, 9u);
  EXPECT_EQ(mc.dropped, 0u);
  EXPECT_FALSE(mc.cf_bound_applies);
}

TEST(ModeClasses, PartitionRetainedHypotheses) {
  const Params p(2, 5, 0.3, 0.1, 0.1, 2);
  const auto mc = build_mode_classes(p, SharedKey{31, 32});
  std::set<HypothesisIndex> seen;
  std::size_t members = 0;
  for (const auto& [f, us] : mc.class_map) {
    for (const auto& u : us) {
      EXPECT_TRUE(seen.insert(u).second);
      EXPECT_EQ(mc.entries[u.encode()].mode_labeling, f);
      EXPECT_LE(error_vs_labeling(f, u, p), p.epsilon());
    }
    members += us.size();
  }
  EXPECT_EQ(members, mc.retained);
  EXPECT_EQ(mc.retained + mc.dropped, 25u);
}

}  // namespace
}  // namespace replearn
