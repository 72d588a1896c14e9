// This file is part of psdfit, a library for fitting nonnegative and
// cone-valued functions with positive semidefinite kernel models.
//
// Copyright (c) 2026 The psdfit authors
// SPDX-License-Identifier: MIT

#ifndef PSDFIT_RNG_HPP
#define PSDFIT_RNG_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "psdfit/common.hpp"

namespace psdfit {

// Deterministic, portable random number generator.
//
// The generator is xoshiro256++ (Blackman & Vigna), seeded through splitmix64.
// All derived distributions (uniform doubles from the top 53 bits, integers by
// rejection, normals by the Box-Muller transform) are implemented here with
// fixed algorithms, so a given (seed, stream) pair produces the same sequence
// on every platform.  The standard library's distribution objects are
// deliberately avoided: their output is implementation-defined and would break
// byte-identical reruns across toolchains.
//
// Independent substreams for different purposes (data generation, fold
// splitting, Monte Carlo sampling, ...) are obtained by passing distinct
// `stream` labels for the same user-facing seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
    // splitmix64 over (seed, stream) fills the xoshiro state; the stream label
    // is folded in with a large odd constant so streams are decorrelated.
    std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    for (auto& s : state_) {
      x += 0x9E3779B97F4A7C15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
      s = z ^ (z >> 31);
    }
    has_cached_normal_ = false;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform double in [0, 1), using the top 53 bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform double in [lo, hi).
  double uniform(double lo, double hi) {
    detail::require(hi > lo, "Rng::uniform: requires hi > lo");
    return lo + (hi - lo) * uniform();
  }

  // Uniform integer in [lo, hi] inclusive, by rejection (unbiased).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    detail::require(hi >= lo, "Rng::uniform_int: requires hi >= lo");
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(next_u64());  // full range
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t draw;
    do {
      draw = next_u64();
    } while (draw >= limit);
    return lo + static_cast<std::int64_t>(draw % span);
  }

  // Standard normal via the Box-Muller transform (pairs cached).
  double normal() {
    if (has_cached_normal_) {
      has_cached_normal_ = false;
      return cached_normal_;
    }
    // 1 - uniform() lies in (0, 1], keeping the logarithm finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * M_PI * u2;
    cached_normal_ = radius * std::sin(angle);
    has_cached_normal_ = true;
    return radius * std::cos(angle);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  VectorX<double> normal_vector(Index n) {
    VectorX<double> v(n);
    for (Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  // Fisher-Yates shuffle with the generator's own integer draws.
  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t state_[4];
  bool has_cached_normal_;
  double cached_normal_ = 0;
};

}  // namespace psdfit

#endif  // PSDFIT_RNG_HPP
