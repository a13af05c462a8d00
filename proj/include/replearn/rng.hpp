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
#include <limits>
#include <span>

namespace replearn {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer (Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// SplitMix64 as a UniformRandomBitGenerator. Every random stream in the
// library is one of these, passed explicitly.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  constexpr explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    state_ += kGolden;
    return mix64(state_);
  }

  // Uniform integer in [0, bound). Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t bound) noexcept;

  // Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  constexpr std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

// Roles for per-trial substreams in experiment harnesses.
enum class StreamRole : std::uint64_t {
  kTarget = 1,
  kKey = 2,
  kSample1 = 3,
  kSample2 = 4,
  kAux = 5,
};

// Substream seed for (master, index, role):
//   s = mix64(master + kGolden)
//   s = mix64(s ^ index)
//   s = mix64(s + role * kGolden)
// Distinct (index, role) pairs give unrelated SplitMix64 starting points.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                          std::uint64_t role) noexcept;

inline SplitMix64 derive_stream(std::uint64_t master, std::uint64_t index,
                                StreamRole role) noexcept {
  return SplitMix64(derive_seed(master, index, static_cast<std::uint64_t>(role)));
}

}  // namespace replearn
