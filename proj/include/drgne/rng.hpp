// Copyright 2026 The drgne Authors.
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

#ifndef DRGNE_RNG_HPP_
#define DRGNE_RNG_HPP_

// Counter-based random numbers. Every draw is a pure function of
// (seed, stream, counter), so results do not depend on evaluation order or on
// how work is split across threads.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace drgne {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(splitmix64(splitmix64(seed) ^ splitmix64(~stream))) {
    if (stream == 0) key_ = splitmix64(seed);
  }

  std::uint64_t bits(std::uint64_t counter) const {
    return splitmix64(key_ ^ counter);
  }

  // Uniform on the open interval (0, 1).
  double uniform(std::uint64_t counter) const {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via the cosine branch of Box-Muller on counters 2k, 2k+1.
  double normal(std::uint64_t k) const {
    const double u1 = uniform(2 * k);
    const double u2 = uniform(2 * k + 1);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t key_;
};

}  // namespace drgne

#endif  // DRGNE_RNG_HPP_
