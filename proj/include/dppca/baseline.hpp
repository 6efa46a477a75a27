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
// One-shot Gaussian-mechanism baseline: perturb the empirical covariance
// with a symmetric Gaussian matrix calibrated to its replace-one
// sensitivity and return the top eigenvector.  The batch-free reference
// point the streaming algorithms are compared against.

#ifndef DPPCA_BASELINE_HPP_
#define DPPCA_BASELINE_HPP_

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "dppca/metrics.hpp"
#include "dppca/model.hpp"
#include "dppca/privacy.hpp"
#include "dppca/random.hpp"

namespace dppca {

// Norm bound that holds for all samples of a Gaussian-tailed stream with
// top eigenvalue lambda1 except with probability ~zeta:
// sqrt(lambda1 * d * ln(n/zeta)).
inline double baseline_norm_bound(double lambda1, Eigen::Index dim,
                                  std::int64_t n, double zeta) {
  if (!(lambda1 > 0.0) || dim <= 0 || n < 1) {
    throw std::invalid_argument(
        "baseline_norm_bound: lambda1, dim, n must be positive");
  }
  if (!(zeta > 0.0 && zeta < 1.0)) {
    throw std::invalid_argument("baseline_norm_bound: zeta must be in (0,1)");
  }
  return std::sqrt(lambda1 * static_cast<double>(dim) *
                   std::log(static_cast<double>(n) / zeta));
}

struct BaselineResult {
  UnitVector estimate;
  // Samples whose norm exceeded the bound and were projected onto the ball.
  std::int64_t projected_samples = 0;
};

// Top eigenvector of Sigma_hat + Z, where Sigma_hat is the centered
// empirical covariance of the (norm-projected) sample vectors and Z is a
// symmetric matrix with i.i.d. N(0, ((norm_bound^2/(n epsilon)) *
// sqrt(2 ln(1.25/delta)))^2) upper-triangle entries mirrored below.
// Requires the rank-one sample representation (the vectors themselves).
inline BaselineResult gaussian_mechanism_pca(const Dataset& data,
                                             double norm_bound,
                                             const PrivacyBudget& budget,
                                             std::uint64_t seed) {
  budget.validate();
  if (data.size() < 1) {
    throw std::invalid_argument("gaussian_mechanism_pca: empty dataset");
  }
  if (!(norm_bound > 0.0) || !std::isfinite(norm_bound)) {
    throw std::invalid_argument(
        "gaussian_mechanism_pca: norm_bound must be finite and > 0");
  }
  const Eigen::Index d = data.dim;
  const double n = static_cast<double>(data.size());

  BaselineResult result{UnitVector::normalized(Vector::Unit(d, 0)), 0};
  Matrix projected(d, data.size());
  for (std::int64_t i = 0; i < data.size(); ++i) {
    const SampleMatrix& s = data.samples[static_cast<std::size_t>(i)];
    if (!s.has_factor()) {
      throw std::invalid_argument(
          "gaussian_mechanism_pca: requires vector (rank-one) samples");
    }
    Vector x = s.factor();
    const double norm = x.norm();
    if (norm > norm_bound) {
      x *= norm_bound / norm;
      ++result.projected_samples;
    }
    projected.col(i) = x;
  }

  const Vector mean = projected.rowwise().mean();
  Matrix covariance = Matrix::Zero(d, d);
  for (std::int64_t i = 0; i < data.size(); ++i) {
    const Vector centered = projected.col(i) - mean;
    covariance.noalias() += centered * centered.transpose();
  }
  covariance /= n;

  // sigma = (norm_bound^2 / (n epsilon)) * sqrt(2 ln(1.25/delta)).
  const double sigma = gaussian_sigma(norm_bound * norm_bound / n, budget);
  Rng noise = Rng(seed).split(internal::kNoiseTag);
  Matrix perturbation(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      const double z = sigma * noise.normal();
      perturbation(i, j) = z;
      perturbation(j, i) = z;
    }
  }
  result.estimate = top_eigpair(covariance + perturbation).second;
  return result;
}

}  // namespace dppca

#endif  // DPPCA_BASELINE_HPP_
