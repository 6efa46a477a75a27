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
// Data model: streams of i.i.d. symmetric sample matrices A_i with
// E[A_i] = Sigma, the scalar regularity parameters the algorithms consume,
// and the synthetic distributions the experiments draw from.

#ifndef DPPCA_MODEL_HPP_
#define DPPCA_MODEL_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dppca/metrics.hpp"
#include "dppca/random.hpp"

namespace dppca {

// Distribution-level description of a sample-matrix stream.  The scalar
// fields are the regularity bounds the learning-rate schedules and clipping
// thresholds are computed from:
//
//   deviation_bound      almost-sure bound on ||A_i - Sigma||_2 / lambda1
//   variance_bound       bound on ||E[(A_i - Sigma)(A_i - Sigma)^T]||_2
//                        / lambda1^2
//   tail_factor,         sub-Weibull tail control of directional deviations
//   tail_exponent        |u^T (A_i - Sigma) v|: factor K and exponent a
//   directional_var      worst-case directional gradient covariance
//                        max_{||u||=1} ||Cov((A_i - Sigma) u)||_2 / lambda1^2
//   gap_ratio            lambda1 / (lambda1 - lambda2); +inf when there is
//                        no spectral gap
struct ModelParams {
  Eigen::Index dim = 0;
  Matrix covariance;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double gap_ratio = std::numeric_limits<double>::infinity();
  double deviation_bound = 0.0;
  double variance_bound = 0.0;
  double tail_factor = 0.0;
  double tail_exponent = 1.0;
  double directional_var = 0.0;

  double gap() const { return lambda1 - lambda2; }

  void validate() const {
    if (dim <= 0) throw std::invalid_argument("ModelParams: dim must be > 0");
    if (covariance.rows() != dim || covariance.cols() != dim) {
      throw std::invalid_argument("ModelParams: covariance shape mismatch");
    }
    if (!(lambda1 >= lambda2) || !(lambda2 >= 0.0)) {
      throw std::invalid_argument(
          "ModelParams: need lambda1 >= lambda2 >= 0");
    }
    if (!(deviation_bound >= 0.0) || !(variance_bound >= 0.0) ||
        !(tail_factor >= 0.0) || !(tail_exponent > 0.0) ||
        !(directional_var >= 0.0)) {
      throw std::invalid_argument("ModelParams: negative regularity bound");
    }
  }
};

// One stream element A_i.  Samples of the form A = x x^T keep only the
// factor x, and A w is evaluated as x (x^T w): for d-dimensional data this
// turns every pass over the stream from O(n d^2) into O(n d), which is what
// makes the larger experiment grids run in seconds.
class SampleMatrix {
 public:
  static SampleMatrix from_factor(Vector x) {
    SampleMatrix s;
    s.factor_ = std::move(x);
    return s;
  }

  static SampleMatrix from_dense(Matrix a) {
    if (a.rows() != a.cols() || a.rows() == 0) {
      throw std::invalid_argument("SampleMatrix: dense sample must be square");
    }
    SampleMatrix s;
    s.dense_ = std::move(a);
    return s;
  }

  Eigen::Index dim() const {
    return factor_ ? factor_->size() : dense_->rows();
  }

  bool has_factor() const { return factor_.has_value(); }
  const Vector& factor() const {
    if (!factor_) throw std::logic_error("SampleMatrix: no factor stored");
    return *factor_;
  }

  // A w, without materializing A for rank-one samples.
  Vector apply(const Vector& w) const {
    if (factor_) return *factor_ * factor_->dot(w);
    return *dense_ * w;
  }

  // The full matrix; rank-one samples materialize x x^T on demand.
  Matrix materialize() const {
    if (factor_) return *factor_ * factor_->transpose();
    return *dense_;
  }

 private:
  SampleMatrix() = default;
  std::optional<Vector> factor_;
  std::optional<Matrix> dense_;
};

// A finite realized stream plus the seed that produced it.
struct Dataset {
  std::vector<SampleMatrix> samples;
  Eigen::Index dim = 0;
  std::uint64_t seed = 0;

  Eigen::Index size() const {
    return static_cast<Eigen::Index>(samples.size());
  }
};

namespace internal {

// Factor L with L L^T = covariance, via the symmetric eigendecomposition so
// that singular covariances are accepted.  Rejects matrices with an
// eigenvalue below -1e-10 * scale; clamps small negative eigenvalues to 0.
inline Matrix psd_factor(const Matrix& covariance) {
  if (covariance.rows() != covariance.cols() || covariance.rows() == 0) {
    throw std::invalid_argument("covariance must be square and non-empty");
  }
  if (!covariance.allFinite()) {
    throw std::invalid_argument("covariance has NaN or Inf");
  }
  const Matrix sym = 0.5 * (covariance + covariance.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("covariance eigendecomposition failed");
  }
  const Vector& evals = solver.eigenvalues();
  const double scale = std::max(std::abs(evals[evals.size() - 1]), 1.0);
  Vector roots(evals.size());
  for (Eigen::Index i = 0; i < evals.size(); ++i) {
    if (evals[i] < -1e-10 * scale) {
      throw std::invalid_argument("covariance is not positive semi-definite");
    }
    roots[i] = std::sqrt(std::max(evals[i], 0.0));
  }
  return solver.eigenvectors() * roots.asDiagonal();
}

inline Vector standard_normal_vector(Eigen::Index d, Rng& rng) {
  Vector z(d);
  for (Eigen::Index i = 0; i < d; ++i) z[i] = rng.normal();
  return z;
}

// Uniform direction on the sphere.
inline Vector sphere_vector(Eigen::Index d, Rng& rng) {
  for (;;) {
    Vector z = standard_normal_vector(d, rng);
    const double n = z.norm();
    if (n > 0.0) return z / n;
  }
}

}  // namespace internal

// n samples A_i = x_i x_i^T with x_i ~ N(0, covariance).  Deterministic in
// (covariance, n, seed).
inline Dataset sample_gaussian_dataset(const Matrix& covariance,
                                       Eigen::Index n, std::uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("sample size must be > 0");
  const Matrix factor = internal::psd_factor(covariance);
  const Eigen::Index d = covariance.rows();
  Rng rng(seed);
  Dataset data;
  data.dim = d;
  data.seed = seed;
  data.samples.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    data.samples.push_back(SampleMatrix::from_factor(
        factor * internal::standard_normal_vector(d, rng)));
  }
  return data;
}

// n samples x_i = s_i * spike + noise, s_i = +/-1 equiprobable and
// noise ~ N(0, noise_var * I).  The spike must be unit norm.  This is the
// separated signal/noise stream: the signal part of E[x x^T] is the rank-one
// spike, all randomness lives at scale sqrt(noise_var).
inline Dataset sample_toy_dataset(const Vector& spike, double noise_var,
                                  Eigen::Index n, std::uint64_t seed) {
  if (n <= 0) throw std::invalid_argument("sample size must be > 0");
  const double norm = spike.norm();
  if (!(norm >= 1.0 - 1e-9 && norm <= 1.0 + 1e-9)) {
    throw std::invalid_argument("toy spike must be unit norm");
  }
  if (!(noise_var >= 0.0)) {
    throw std::invalid_argument("noise_var must be >= 0");
  }
  const double sd = std::sqrt(noise_var);
  const Eigen::Index d = spike.size();
  Rng rng(seed);
  Dataset data;
  data.dim = d;
  data.seed = seed;
  data.samples.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sign = (rng.next_u32() & 1u) ? 1.0 : -1.0;
    Vector x = sign * spike;
    if (sd > 0.0) x += sd * internal::standard_normal_vector(d, rng);
    data.samples.push_back(SampleMatrix::from_factor(std::move(x)));
  }
  return data;
}

namespace internal {

inline std::pair<double, double> top_two_eigenvalues(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym,
                                               Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigendecomposition failed");
  }
  const Vector& evals = solver.eigenvalues();
  const Eigen::Index d = evals.size();
  const double l1 = evals[d - 1];
  const double l2 = (d >= 2) ? evals[d - 2] : 0.0;
  return {l1, l2};
}

inline double gap_ratio_of(double l1, double l2) {
  const double gap = l1 - l2;
  // Treat a relative gap at floating-point noise level as no gap at all.
  if (!(gap > 1e-13 * std::max(l1, 1e-300))) {
    return std::numeric_limits<double>::infinity();
  }
  return l1 / gap;
}

}  // namespace internal

// Regularity parameters for the Gaussian stream A_i = x_i x_i^T,
// x_i ~ N(0, covariance), with all constants hidden by the asymptotic
// characterization set to one:  deviation_bound = d log n, variance_bound =
// d, tail_factor = 4, tail_exponent = 1, directional_var = 1.
inline ModelParams gaussian_model_params(const Matrix& covariance,
                                         Eigen::Index n) {
  if (n < 2) throw std::invalid_argument("need n >= 2");
  if (covariance.rows() != covariance.cols() || covariance.rows() == 0) {
    throw std::invalid_argument("covariance must be square and non-empty");
  }
  if (!covariance.allFinite()) {
    throw std::invalid_argument("covariance has NaN or Inf");
  }
  const Matrix sym = 0.5 * (covariance + covariance.transpose());
  const auto [l1, l2] = internal::top_two_eigenvalues(sym);
  if (!(l1 >= 0.0)) {
    throw std::invalid_argument("covariance is not positive semi-definite");
  }
  ModelParams p;
  p.dim = covariance.rows();
  p.covariance = sym;
  p.lambda1 = l1;
  p.lambda2 = std::max(l2, 0.0);
  p.gap_ratio = internal::gap_ratio_of(p.lambda1, p.lambda2);
  const double d = static_cast<double>(p.dim);
  p.deviation_bound = d * std::log(static_cast<double>(n));
  p.variance_bound = d;
  p.tail_factor = 4.0;
  p.tail_exponent = 1.0;
  p.directional_var = 1.0;
  p.validate();
  return p;
}

// Regularity parameters for the separated signal/noise stream, unit
// constants: lambda1 = 1 + noise_var, lambda2 = noise_var, variance_bound =
// d * noise_var, tail_factor = 1, tail_exponent = 1, directional_var =
// noise_var.  deviation_bound keeps the Gaussian-style d log n envelope.
inline ModelParams toy_model_params(const Vector& spike, double noise_var,
                                    Eigen::Index n) {
  if (n < 2) throw std::invalid_argument("need n >= 2");
  const double norm = spike.norm();
  if (!(norm >= 1.0 - 1e-9 && norm <= 1.0 + 1e-9)) {
    throw std::invalid_argument("toy spike must be unit norm");
  }
  if (!(noise_var >= 0.0)) {
    throw std::invalid_argument("noise_var must be >= 0");
  }
  const Eigen::Index d = spike.size();
  ModelParams p;
  p.dim = d;
  p.covariance = noise_var * Matrix::Identity(d, d) +
                 spike * spike.transpose();
  p.lambda1 = 1.0 + noise_var;
  p.lambda2 = noise_var;
  p.gap_ratio = p.lambda1;  // lambda1 / (lambda1 - lambda2), gap is 1
  p.deviation_bound =
      static_cast<double>(d) * std::log(static_cast<double>(n));
  p.variance_bound = static_cast<double>(d) * noise_var;
  p.tail_factor = 1.0;
  p.tail_exponent = 1.0;
  p.directional_var = noise_var;
  p.validate();
  return p;
}

// Copy of the dataset with samples[index] replaced; the neighboring-dataset
// relation the privacy tests exercise.
inline Dataset make_neighboring(const Dataset& data, Eigen::Index index,
                                SampleMatrix replacement) {
  if (index < 0 || index >= data.size()) {
    throw std::out_of_range("make_neighboring: index out of range");
  }
  if (replacement.dim() != data.dim) {
    throw std::invalid_argument("make_neighboring: dimension mismatch");
  }
  Dataset copy = data;
  copy.samples[static_cast<std::size_t>(index)] = std::move(replacement);
  return copy;
}

}  // namespace dppca

#endif  // DPPCA_MODEL_HPP_
