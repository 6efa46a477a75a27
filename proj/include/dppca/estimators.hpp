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
// Variance-adaptive private estimators used inside the minibatch PCA loop:
// a private estimate of the top eigenvalue of the gradient covariance
// (subsample-and-aggregate into a stability histogram over geometric bins)
// and a private mean with histogram-located truncation.

#ifndef DPPCA_ESTIMATORS_HPP_
#define DPPCA_ESTIMATORS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dppca/errors.hpp"
#include "dppca/metrics.hpp"
#include "dppca/privacy.hpp"
#include "dppca/random.hpp"

namespace dppca {

// Geometric bins [2^{i/4}, 2^{(i+1)/4}) indexed by i = floor(4*log2(value)).
// The index is computed from the exponent/mantissa decomposition and snapped
// to the nearest integer when within 1e-12 relative, so values that are a
// whole power of 2^{1/4} land in the bin they are the lower edge of, and
// exact power-of-two rescalings of the input shift indices exactly.
inline std::int64_t geometric_bin_index(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(
        "geometric_bin_index: value must be finite and > 0");
  }
  int exponent = 0;
  const double mantissa = std::frexp(value, &exponent);  // in [0.5, 1)
  double quarter_logs =
      4.0 * (static_cast<double>(exponent) + std::log2(mantissa));
  const double snapped = std::nearbyint(quarter_logs);
  if (std::abs(quarter_logs - snapped) <=
      1e-12 * std::max(1.0, std::abs(quarter_logs))) {
    quarter_logs = snapped;
  }
  return static_cast<std::int64_t>(std::floor(quarter_logs));
}

// Lower edge 2^{index/4} of a geometric bin.
inline double geometric_bin_lower_edge(std::int64_t index) {
  return std::exp2(static_cast<double>(index) / 4.0);
}

// Result of the private top-eigenvalue estimator: a bin lower edge, the
// reserved zero value, or nothing at all when every histogram bin was
// removed by the stability threshold (the caller must skip its update).
struct EigenEstimate {
  std::optional<double> value;

  bool is_bottom() const { return !value.has_value(); }
};

namespace internal {

// Reserved bin for exactly-zero eigenvalue estimates (all-identical
// gradients); sorts below every real bin so deterministic tie-breaking
// toward smaller indices favors the conservative zero estimate.
inline constexpr std::int64_t kZeroEigenvalueBin =
    std::numeric_limits<std::int64_t>::min();

// Top eigenvalue of (1/count) * G * G^T for the column block
// [begin, begin+count) of `columns`, computed on whichever Gram matrix
// (d x d or count x count) is smaller.
inline double block_covariance_top_eigenvalue(
    const std::vector<Vector>& columns, std::size_t begin,
    std::size_t count) {
  const Eigen::Index d = columns[begin].size();
  const Eigen::Index b = static_cast<Eigen::Index>(count);
  Matrix gram;
  if (b < d) {
    gram.resize(b, b);
    for (Eigen::Index i = 0; i < b; ++i) {
      for (Eigen::Index j = i; j < b; ++j) {
        const double v = columns[begin + static_cast<std::size_t>(i)].dot(
                             columns[begin + static_cast<std::size_t>(j)]) /
                         static_cast<double>(b);
        gram(i, j) = v;
        gram(j, i) = v;
      }
    }
  } else {
    gram = Matrix::Zero(d, d);
    for (std::size_t i = begin; i < begin + count; ++i) {
      gram.noalias() += columns[i] * columns[i].transpose();
    }
    gram /= static_cast<double>(b);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(gram, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw EstimationFailedError(
        "block_covariance_top_eigenvalue: eigendecomposition failed");
  }
  return std::max(solver.eigenvalues()[solver.eigenvalues().size() - 1], 0.0);
}

}  // namespace internal

// Private estimate of the top eigenvalue of the gradient covariance.
// Pipeline: (1) pair consecutive gradients and difference them, cancelling
// the unknown mean; (2) split the differences into `k` subsets and take
// each subset's empirical-covariance top eigenvalue; (3) place the k
// estimates into geometric bins and release a stability histogram at the
// full given budget; (4) return the lower edge of the heaviest surviving
// bin (ties toward the smaller bin).  Returns bottom when every bin was
// removed.  zeta is the allowed failure probability of the estimate.
//
// The subset count uses k = ceil(4 ln(1/(delta*zeta)) / epsilon), floored
// at ceil((4 ln(2/delta) + 2) / epsilon) so that the histogram's stability
// threshold (2 ln(2/delta)/(epsilon k) + 1/k) stays at most ~1/2: a unit
// constant here would push the threshold above total mass 1 at practical
// sizes and remove every bin always.
inline EigenEstimate private_top_eigenvalue(
    const std::vector<Vector>& gradients, const PrivacyBudget& budget,
    double zeta, std::uint64_t seed) {
  budget.validate();
  if (!(zeta > 0.0 && zeta < 1.0)) {
    throw std::invalid_argument(
        "private_top_eigenvalue: zeta must be in (0,1)");
  }
  const std::int64_t pairs = static_cast<std::int64_t>(gradients.size()) / 2;
  if (pairs < 1) {
    throw InsufficientSamplesError(
        "private_top_eigenvalue: need at least 2 gradients");
  }
  const Eigen::Index d = gradients[0].size();
  std::vector<Vector> differences;
  differences.reserve(static_cast<std::size_t>(pairs));
  for (std::int64_t i = 0; i < pairs; ++i) {
    const Vector& even = gradients[static_cast<std::size_t>(2 * i + 1)];
    const Vector& odd = gradients[static_cast<std::size_t>(2 * i)];
    if (even.size() != d || odd.size() != d) {
      throw std::invalid_argument(
          "private_top_eigenvalue: mixed gradient dimensions");
    }
    differences.push_back(even - odd);
  }

  const double target = 4.0 * std::log(1.0 / (budget.delta * zeta)) /
                        budget.epsilon;
  const double survival_floor =
      (4.0 * std::log(2.0 / budget.delta) + 2.0) / budget.epsilon;
  std::int64_t k = static_cast<std::int64_t>(
      std::ceil(std::max(target, survival_floor)));
  k = std::clamp<std::int64_t>(k, 1, pairs);
  const std::int64_t block = pairs / k;

  std::vector<std::int64_t> bins;
  bins.reserve(static_cast<std::size_t>(k));
  for (std::int64_t j = 0; j < k; ++j) {
    const double top = internal::block_covariance_top_eigenvalue(
        differences, static_cast<std::size_t>(j * block),
        static_cast<std::size_t>(block));
    bins.push_back(top > 0.0 ? geometric_bin_index(top)
                             : internal::kZeroEigenvalueBin);
  }

  const HistogramOutcome histogram = stable_histogram(
      bins, k, budget, seed, BinDescriptor::geometric(std::exp2(0.25)));
  if (histogram.empty()) return EigenEstimate{std::nullopt};

  std::int64_t best_bin = 0;
  double best_mass = -1.0;
  for (const auto& [bin, mass] : histogram.counts) {
    if (mass > best_mass) {  // ordered iteration: ties keep the smaller bin
      best_mass = mass;
      best_bin = bin;
    }
  }
  if (best_bin == internal::kZeroEigenvalueBin) return EigenEstimate{0.0};
  return EigenEstimate{geometric_bin_lower_edge(best_bin)};
}

// Coordinate-wise truncation region: each gradient coordinate j is clamped
// to [center[j] - half_width, center[j] + half_width] before averaging.
struct TruncationBox {
  Vector center;
  double half_width = 0.0;
};

struct PrivateMeanResult {
  Vector mean;
  // Gradient coordinates (over all samples) that the box actually clamped.
  std::int64_t truncated_coordinates = 0;
  TruncationBox box;
  // Standard deviation of the Gaussian noise added per coordinate.
  double noise_std = 0.0;
};

// Private mean of B gradient vectors, adaptive to the scale lambda_hat (an
// upper-envelope estimate of the gradient covariance's top eigenvalue).
// Per coordinate, a stability histogram over bins of width
//   tau = 2^{1/4} * tail_factor * sqrt(lambda_hat) * ln^a(25)
// locates the data (budget (eps/(4 sqrt(2 d ln(4/delta))), delta/(4d)) per
// coordinate, which recomposes to (eps/2, delta/2) under advanced
// composition); coordinates are truncated to the located bin edge +-
//   r = 3 * tail_factor * sqrt(lambda_hat) * ln^a(B d / zeta)
// and the truncated average is released through the Gaussian mechanism at
// the remaining (eps/2, delta/2), i.e. with per-coordinate noise std
//   sigma = 12 tail_factor sqrt(lambda_hat) ln^a(Bd/zeta)
//           * sqrt(2 d ln(2.5/delta)) / (eps B).
// Throws EstimationFailedError when any coordinate's histogram loses all
// bins (there is then no defined truncation center for that coordinate).
inline PrivateMeanResult private_mean(const std::vector<Vector>& gradients,
                                      const PrivacyBudget& budget, double zeta,
                                      double lambda_hat, double tail_factor,
                                      double tail_exponent,
                                      std::uint64_t seed) {
  budget.validate();
  if (budget.epsilon >= 0.9) {
    throw std::out_of_range(
        "private_mean: epsilon must be < 0.9 (advanced composition)");
  }
  if (!(zeta > 0.0 && zeta < 1.0)) {
    throw std::invalid_argument("private_mean: zeta must be in (0,1)");
  }
  if (!(lambda_hat > 0.0)) {
    throw std::invalid_argument("private_mean: lambda_hat must be > 0");
  }
  if (!(tail_factor > 0.0) || !(tail_exponent > 0.0)) {
    throw std::invalid_argument(
        "private_mean: tail parameters must be > 0");
  }
  if (gradients.empty()) {
    throw std::invalid_argument("private_mean: no gradients");
  }
  const std::int64_t count = static_cast<std::int64_t>(gradients.size());
  const Eigen::Index d = gradients[0].size();
  for (const Vector& g : gradients) {
    if (g.size() != d) {
      throw std::invalid_argument("private_mean: mixed gradient dimensions");
    }
  }

  const double scale = tail_factor * std::sqrt(lambda_hat);
  const double tau =
      std::exp2(0.25) * scale * std::pow(std::log(25.0), tail_exponent);
  const double log_bd = std::log(static_cast<double>(count) *
                                 static_cast<double>(d) / zeta);
  const double radius = 3.0 * scale * std::pow(log_bd, tail_exponent);
  const double noise_std =
      12.0 * scale * std::pow(log_bd, tail_exponent) *
      std::sqrt(2.0 * static_cast<double>(d) *
                std::log(2.5 / budget.delta)) /
      (budget.epsilon * static_cast<double>(count));

  const PrivacyBudget half{budget.epsilon / 2.0, budget.delta / 2.0};
  const PrivacyBudget per_coordinate =
      advanced_composition_split(half, static_cast<std::int64_t>(d));

  Rng root(seed);
  TruncationBox box{Vector::Zero(d), radius};

  // Locate each coordinate with its own histogram.  Bins are the intervals
  // (l*tau, (l+1)*tau], so a value g lands in bin ceil(g/tau) - 1.
  for (Eigen::Index j = 0; j < d; ++j) {
    std::vector<std::int64_t> bins;
    bins.reserve(gradients.size());
    for (const Vector& g : gradients) {
      const double position = g[j] / tau;
      if (!(std::abs(position) < 9.0e18)) {
        throw std::invalid_argument(
            "private_mean: gradient coordinate out of binnable range");
      }
      bins.push_back(
          static_cast<std::int64_t>(std::ceil(position)) - 1);
    }
    Rng coordinate_rng = root.split(0x6a11, static_cast<std::uint64_t>(j));
    const HistogramOutcome histogram =
        stable_histogram(bins, count, per_coordinate, coordinate_rng,
                         BinDescriptor::linear(tau));
    if (histogram.empty()) {
      throw EstimationFailedError(
          "private_mean: histogram lost all bins for a coordinate");
    }
    std::int64_t best_bin = 0;
    double best_mass = -1.0;
    for (const auto& [bin, mass] : histogram.counts) {
      if (mass > best_mass) {  // ordered: ties keep the smaller edge
        best_mass = mass;
        best_bin = bin;
      }
    }
    box.center[j] = static_cast<double>(best_bin) * tau;
  }

  PrivateMeanResult result{Vector::Zero(d), 0, box, noise_std};
  for (const Vector& g : gradients) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const double lo = box.center[j] - radius;
      const double hi = box.center[j] + radius;
      const double v = g[j];
      if (v < lo || v > hi) {
        ++result.truncated_coordinates;
        result.mean[j] += std::clamp(v, lo, hi);
      } else {
        result.mean[j] += v;
      }
    }
  }
  result.mean /= static_cast<double>(count);

  Rng noise = root.split(internal::kNoiseTag);
  for (Eigen::Index j = 0; j < d; ++j) {
    result.mean[j] += noise_std * noise.normal();
  }
  return result;
}

}  // namespace dppca

#endif  // DPPCA_ESTIMATORS_HPP_
