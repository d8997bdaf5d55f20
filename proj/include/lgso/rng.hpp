// Copyright 2026 The LGSO Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace lgso {

using Rng = std::mt19937_64;

// Stream domains. Every random draw in a run comes from a stream keyed by
// (master seed, domain, indices...), so results do not depend on the order in
// which work is scheduled.
enum class Stream : std::uint64_t {
  kSimulate = 1,
  kLhs = 2,
  kSurrogateTrain = 3,
  kSurrogateGrad = 4,
  kPolicy = 5,
  kNumDiff = 6,
  kOracle = 7,
  kBias = 8,
  kEpsilon = 9,
  kMonitor = 10,
  kMixing = 11,
  kTest = 12,
  kEvaluate = 13,
  kSweep = 14,
};

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, Stream domain,
                                 std::initializer_list<std::uint64_t> idx = {}) {
  std::uint64_t h = mix64(master ^ 0x6c67736f5f726e67ULL);
  h = mix64(h ^ static_cast<std::uint64_t>(domain));
  for (std::uint64_t i : idx) h = mix64(h ^ i);
  return h;
}

inline Rng make_stream(std::uint64_t master, Stream domain,
                       std::initializer_list<std::uint64_t> idx = {}) {
  return Rng(derive_seed(master, domain, idx));
}

inline double std_normal(Rng& rng) {
  return std::normal_distribution<double>(0.0, 1.0)(rng);
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace lgso
