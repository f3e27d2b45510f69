// Copyright 2026 The userside authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef USERSIDE_RNG_HPP
#define USERSIDE_RNG_HPP

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

/**
 * @file rng.hpp
 * @brief Seeded random source with a portable, documented draw sequence.
 *
 * Everything random in this library flows through `Rng` so that a fixed seed
 * reproduces runs bit for bit across platforms and compiler versions. The
 * raw stream is std::mt19937_64, whose output sequence the C++ standard
 * pins down exactly; the derived draws below avoid all
 * implementation-defined distribution classes.
 */

namespace userside {

/** One mixing round of splitmix64, used to derive independent sub-seeds. */
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/**
 * Deterministic random source.
 *
 * State-advance contract, relied on by reproducibility tests:
 *  - `next_u64` consumes exactly one engine output;
 *  - `next_unit` consumes exactly one engine output;
 *  - `next_below(n)` consumes a geometric number of outputs (one in the
 *    common case) via rejection sampling, so it is unbiased for every `n`;
 *  - `pick_weighted` and `shuffle` are defined in terms of the above.
 */
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /** Raw 64-bit engine output. */
  std::uint64_t next_u64() { return gen_(); }

  /** Uniform double in [0, 1) with 53 random mantissa bits. */
  double next_unit() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  /** Uniform integer in [0, n), unbiased via rejection. Requires n > 0. */
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("next_below needs n > 0");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t draw;
    do {
      draw = gen_();
    } while (draw >= limit);
    return draw % n;
  }

  /**
   * Index drawn proportionally to non-negative `weights` (not necessarily
   * normalised). Uses one `next_unit` draw against the cumulative sums.
   */
  std::size_t pick_weighted(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw std::invalid_argument("weights must sum to a positive value");
    const double target = next_unit() * total;
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      cum += weights[i];
      if (target < cum) return i;
    }
    return weights.size() - 1;
  }

  /** Fisher-Yates shuffle driven by `next_below`; portable unlike std::shuffle. */
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

private:
  std::mt19937_64 gen_;
};

}  // namespace userside

#endif  // USERSIDE_RNG_HPP
