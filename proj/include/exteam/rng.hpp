// Copyright 2026 The exteam Authors
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

#ifndef EXTEAM_RNG_HPP_
#define EXTEAM_RNG_HPP_

#include <cstdint>
#include <random>
#include <span>

namespace exteam {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; decorrelates (seed, stream) pairs.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  return Rng(mix_seed(seed, stream));
}

// Uniform double in [0, 1) with 53 random bits, independent of the
// standard library's distribution implementation.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Inverse-CDF draw from a probability vector using a single uniform.
inline std::size_t sample_index(std::span<const double> probs, double u) {
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

}  // namespace exteam

#endif  // EXTEAM_RNG_HPP_
