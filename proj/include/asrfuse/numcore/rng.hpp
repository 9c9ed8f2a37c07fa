// asrfuse/numcore/rng.hpp

// Copyright 2026  The asrfuse Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ASRFUSE_NUMCORE_RNG_HPP_
#define ASRFUSE_NUMCORE_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>
#include <vector>

namespace asrfuse {

/// xoshiro256** seeded through splitmix64.  All sampling helpers are
/// implemented here rather than through <random> distributions so that
/// streams are bit-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) { Seed(seed); }

  /// Independent stream for (seed, stream id); used to derive per-step
  /// generators so resumed runs see the same randomness.
  Rng(std::uint64_t seed, std::uint64_t stream) {
    Seed(seed ^ (0x9E3779B97F4A7C15ULL * (stream + 1)));
  }

  void Seed(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto &s : state_) s = SplitMix(&x);
    have_spare_normal_ = false;
  }

  std::uint64_t NextU64() {
    const std::uint64_t result = Rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = Rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1).
  double Uniform() { return static_cast<double>(NextU64() >> 11) * 0x1.0p-53; }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  /// Uniform integer in [0, n).  n must be positive.
  std::size_t Index(std::size_t n) {
    // Lemire-style rejection keeps the result unbiased.
    const std::uint64_t bound = n;
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = NextU64();
      if (r >= threshold) return static_cast<std::size_t>(r % bound);
    }
  }

  bool Bernoulli(double p) { return Uniform() < p; }

  /// Standard normal via the polar Box-Muller method.
  double Normal() {
    if (have_spare_normal_) {
      have_spare_normal_ = false;
      return spare_normal_;
    }
    double u, v, s;
    do {
      u = 2.0 * Uniform() - 1.0;
      v = 2.0 * Uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_normal_ = v * m;
    have_spare_normal_ = true;
    return u * m;
  }

  double Normal(double mean, double stddev) { return mean + stddev * Normal(); }

  /// Standard Gumbel(0, 1) sample.
  double Gumbel() {
    double u = Uniform();
    while (u <= 0.0) u = Uniform();
    return -std::log(-std::log(u));
  }

  template <typename T>
  void Shuffle(std::vector<T> *v) {
    for (std::size_t i = v->size(); i > 1; --i) {
      std::swap((*v)[i - 1], (*v)[Index(i)]);
    }
  }

 private:
  static std::uint64_t Rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  static std::uint64_t SplitMix(std::uint64_t *x) {
    std::uint64_t z = (*x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_[4];
  double spare_normal_ = 0.0;
  bool have_spare_normal_ = false;
};

}  // namespace asrfuse

#endif  // ASRFUSE_NUMCORE_RNG_HPP_
