/*
 * Copyright 2026 The dppca Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "dppca/random.hpp"

#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <vector>

#include "gtest/gtest.h"

namespace dppca {
namespace {

TEST(Mix64Test, IsDeterministicAndSpreadsInputs) {
  EXPECT_EQ(mix64(0), mix64(0));
  EXPECT_NE(mix64(0), mix64(1));
  EXPECT_NE(mix64(1), mix64(2));
  // Single-bit input changes flip roughly half the output bits.
  const std::uint64_t diff = mix64(12345) ^ mix64(12344);
  int bits = 0;
  for (std::uint64_t d = diff; d != 0; d >>= 1) bits += static_cast<int>(d & 1);
  EXPECT_GT(bits, 16);
  EXPECT_LT(bits, 48);
}

TEST(MixKeyTest, IsOrderSensitive) {
  const std::uint64_t seed = 0xDEADBEEF;
  EXPECT_NE(mix_key(mix_key(seed, 1), 2), mix_key(mix_key(seed, 2), 1));
  EXPECT_EQ(mix_key(seed, 7), mix_key(seed, 7));
  EXPECT_NE(mix_key(seed, 7), mix_key(seed, 8));
}

TEST(RngTest, SameSeedSameStream) {
  Rng a(42);
  Rng b(42);
  for (int i = 0; i < 1000; ++i) {
    ASSERT_EQ(a.next_u64(), b.next_u64());
  }
}

TEST(RngTest, DifferentSeedsDifferentStreams) {
  Rng a(42);
  Rng b(43);
  int agree = 0;
  for (int i = 0; i < 1000; ++i) {
    if (a.next_u64() == b.next_u64()) ++agree;
  }
  EXPECT_EQ(agree, 0);
}

TEST(RngTest, SplitGivesIndependentReproducibleStreams) {
  Rng root(7);
  Rng a = root.split(1);
  Rng b = root.split(2);
  Rng a2 = Rng(7).split(1);
  int agree = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t xa = a.next_u64();
    ASSERT_EQ(xa, a2.next_u64());
    if (xa == b.next_u64()) ++agree;
  }
  EXPECT_EQ(agree, 0);
}

TEST(RngTest, TwoLevelSplitIsOrderSensitive) {
  Rng root(99);
  Rng ab = root.split(1, 2);
  Rng ba = root.split(2, 1);
  EXPECT_NE(ab.next_u64(), ba.next_u64());
  // split(a, b) is split(a) then split(b).
  Rng chained = root.split(1).split(2);
  Rng paired = root.split(1, 2);
  for (int i = 0; i < 100; ++i) {
    ASSERT_EQ(chained.next_u64(), paired.next_u64());
  }
}

TEST(RngTest, SplitDoesNotPerturbParent) {
  Rng a(5);
  Rng b(5);
  (void)a.split(123);
  for (int i = 0; i < 100; ++i) {
    ASSERT_EQ(a.next_u64(), b.next_u64());
  }
}

TEST(RngTest, Uniform01StaysInHalfOpenUnitInterval) {
  Rng rng(2026);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.005);
}

TEST(RngTest, Uniform01FillsBinsEvenly) {
  Rng rng(17);
  const int kBins = 16;
  const int n = 160000;
  std::vector<int> counts(kBins, 0);
  for (int i = 0; i < n; ++i) {
    ++counts[static_cast<int>(rng.uniform01() * kBins)];
  }
  for (int c : counts) {
    EXPECT_NEAR(c, n / kBins, 500);
  }
}

TEST(RngTest, ConsecutiveUniformDrawsAreUncorrelated) {
  Rng rng(31);
  const int n = 100000;
  double prev = rng.uniform01();
  double sum_xy = 0.0, sum_x = 0.0, sum_y = 0.0, sum_x2 = 0.0, sum_y2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double cur = rng.uniform01();
    sum_xy += prev * cur;
    sum_x += prev;
    sum_y += cur;
    sum_x2 += prev * prev;
    sum_y2 += cur * cur;
    prev = cur;
  }
  const double cov = sum_xy / n - (sum_x / n) * (sum_y / n);
  const double vx = sum_x2 / n - (sum_x / n) * (sum_x / n);
  const double vy = sum_y2 / n - (sum_y / n) * (sum_y / n);
  EXPECT_LT(std::abs(cov / std::sqrt(vx * vy)), 0.015);
}

TEST(RngTest, UniformPosIsPositiveAndAtMostOne) {
  Rng rng(4);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform_pos();
    ASSERT_GT(u, 0.0);
    ASSERT_LE(u, 1.0);
  }
}

TEST(RngTest, BelowCoversRangeWithoutBias) {
  Rng rng(11);
  const std::uint64_t kBound = 7;
  std::vector<int> counts(kBound, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) {
    const std::uint64_t v = rng.below(kBound);
    ASSERT_LT(v, kBound);
    ++counts[static_cast<std::size_t>(v)];
  }
  for (int c : counts) {
    EXPECT_NEAR(c, n / static_cast<int>(kBound), 400);
  }
  EXPECT_EQ(rng.below(1), 0u);
  EXPECT_THROW(rng.below(0), std::invalid_argument);
}

TEST(RngTest, NormalHasStandardMoments) {
  Rng rng(123);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    ASSERT_TRUE(std::isfinite(x));
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(var, 1.0, 0.02);
}

TEST(RngTest, NormalTailMassMatchesGaussian) {
  Rng rng(321);
  const int n = 200000;
  int beyond_two = 0;
  for (int i = 0; i < n; ++i) {
    if (std::abs(rng.normal()) > 2.0) ++beyond_two;
  }
  // P(|Z| > 2) = 0.0455; the binomial 5-sigma band is about +-0.0023.
  EXPECT_NEAR(static_cast<double>(beyond_two) / n, 0.0455, 0.004);
}

TEST(RngTest, NormalSequenceIsReproducibleAcrossSpares) {
  Rng a(55);
  Rng b(55);
  for (int i = 0; i < 101; ++i) {  // odd count exercises the cached spare
    ASSERT_EQ(a.normal(), b.normal());
  }
}

TEST(RngTest, LaplaceMatchesScaleMoments) {
  Rng rng(77);
  const double kScale = 0.5;
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  int negative = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.laplace(kScale);
    sum += x;
    sum2 += x * x;
    if (x < 0.0) ++negative;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  EXPECT_NEAR(mean, 0.0, 0.01);
  EXPECT_NEAR(var, 2.0 * kScale * kScale, 0.02);  // Var = 2 scale^2
  EXPECT_NEAR(static_cast<double>(negative) / n, 0.5, 0.01);
}

TEST(RngTest, LaplaceRejectsNonPositiveScale) {
  Rng rng(1);
  EXPECT_THROW(rng.laplace(0.0), std::invalid_argument);
  EXPECT_THROW(rng.laplace(-1.0), std::invalid_argument);
}

}  // namespace
}  // namespace dppca
