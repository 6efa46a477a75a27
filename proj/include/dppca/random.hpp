//
// Copyright 2026 The dppca Authors
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
//
// Counter-based pseudo-random generator used project-wide.
//
// Every randomized routine in this library draws from Philox4x32-10 streams.
// The generator is chosen (over std::mt19937 and friends) because it is
// splittable: independent streams are derived from (key, tag) pairs, so a
// trial, a shuffle, or a single noise draw can be given its own stream and
// results never depend on evaluation order or thread scheduling.  All
// floating-point sampling (uniform, normal, Laplace) is implemented here on
// top of the raw counter stream, so a given seed produces bit-identical
// samples on every platform with IEEE doubles and a correctly rounded libm.

#ifndef DPPCA_RANDOM_HPP_
#define DPPCA_RANDOM_HPP_

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace dppca {

namespace internal {

// Stream tags shared across the algorithms and their tests, so that a test
// can reconstruct e.g. the exact shuffle or noise stream a private run used.
inline constexpr std::uint64_t kInitTag = 0x1111;
inline constexpr std::uint64_t kShuffleTag = 0x2222;
inline constexpr std::uint64_t kNoiseTag = 0x3333;

}  // namespace internal

// splitmix64 finalizer; used to derive stream keys from (seed, tag) tuples.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Combines a key with a tag into a new key.  Order-sensitive, so
// mix_key(mix_key(s, a), b) != mix_key(mix_key(s, b), a) in general.
inline std::uint64_t mix_key(std::uint64_t key, std::uint64_t tag) {
  return mix64(key ^ (0x9E3779B97F4A7C15ULL + mix64(tag)));
}

// Philox4x32-10 counter generator with convenience samplers.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(seed) {}

  // Derives an independent stream.  Distinct tags give (for all practical
  // purposes) independent streams; the same (seed, tag) always gives the
  // same stream.
  Rng split(std::uint64_t tag) const { return Rng(mix_key(key_, tag)); }
  Rng split(std::uint64_t tag_a, std::uint64_t tag_b) const {
    return Rng(mix_key(mix_key(key_, tag_a), tag_b));
  }

  std::uint32_t next_u32() {
    if (pos_ == 4) {
      philox_block();
      pos_ = 0;
    }
    return out_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    const std::uint64_t lo = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform on [0, 1), 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_pos() { return 1.0 - uniform01(); }

  // Uniform integer in [0, bound); rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("below: bound must be > 0");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t r;
    do {
      r = next_u64();
    } while (r >= limit);
    return r % bound;
  }

  // Standard normal via Box-Muller; the paired draw is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // Laplace(scale) by inverse CDF from a uniform on (-1/2, 1/2].
  double laplace(double scale) {
    if (!(scale > 0.0)) {
      throw std::invalid_argument("laplace: scale must be > 0");
    }
    const double u = 0.5 - uniform01();  // (-1/2, 1/2]
    const double sign = (u >= 0.0) ? 1.0 : -1.0;
    return -scale * sign * std::log1p(-2.0 * std::abs(u));
  }

 private:
  void philox_block() {
    // Advance the 128-bit counter.
    if (++ctr_[0] == 0 && ++ctr_[1] == 0 && ++ctr_[2] == 0) ++ctr_[3];

    std::uint32_t x0 = ctr_[0], x1 = ctr_[1], x2 = ctr_[2], x3 = ctr_[3];
    std::uint32_t k0 = static_cast<std::uint32_t>(key_);
    std::uint32_t k1 = static_cast<std::uint32_t>(key_ >> 32);
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = 0xD2511F53ULL * x0;
      const std::uint64_t p1 = 0xCD9E8D57ULL * x2;
      const std::uint32_t y0 =
          static_cast<std::uint32_t>(p1 >> 32) ^ x1 ^ k0;
      const std::uint32_t y1 = static_cast<std::uint32_t>(p1);
      const std::uint32_t y2 =
          static_cast<std::uint32_t>(p0 >> 32) ^ x3 ^ k1;
      const std::uint32_t y3 = static_cast<std::uint32_t>(p0);
      x0 = y0;
      x1 = y1;
      x2 = y2;
      x3 = y3;
      k0 += 0x9E3779B9U;
      k1 += 0xBB67AE85U;
    }
    out_[0] = x0;
    out_[1] = x1;
    out_[2] = x2;
    out_[3] = x3;
  }

  std::uint64_t key_;
  std::uint32_t ctr_[4] = {0, 0, 0, 0};
  std::uint32_t out_[4] = {0, 0, 0, 0};
  int pos_ = 4;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace dppca

#endif  // DPPCA_RANDOM_HPP_
