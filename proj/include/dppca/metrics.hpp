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
// Subspace-distance metric and the dense reference eigensolver that the
// tests and the covariance-perturbation baseline use as ground truth.

#ifndef DPPCA_METRICS_HPP_
#define DPPCA_METRICS_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace dppca {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// A vector constrained to (numerically) unit Euclidean norm.  Directions are
// what every estimator in this library returns; wrapping them keeps "forgot
// to normalize" bugs out of the metric layer.
class UnitVector {
 public:
  // Validates that v is already unit norm to within 1e-9.
  explicit UnitVector(Vector v) : v_(std::move(v)) {
    const double n = v_.norm();
    if (!(n >= 1.0 - 1e-9 && n <= 1.0 + 1e-9)) {
      throw std::invalid_argument("UnitVector: input is not unit norm");
    }
  }

  // Normalizes v; rejects the zero vector (and anything non-finite).
  static UnitVector normalized(const Vector& v) {
    const double n = v.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
      throw std::invalid_argument(
          "UnitVector::normalized: cannot normalize zero or non-finite "
          "vector");
    }
    return UnitVector(Vector(v / n), unchecked_tag{});
  }

  const Vector& coeffs() const { return v_; }
  Eigen::Index dim() const { return v_.size(); }
  double dot(const UnitVector& other) const { return v_.dot(other.v_); }

 private:
  struct unchecked_tag {};
  UnitVector(Vector v, unchecked_tag) : v_(std::move(v)) {}
  Vector v_;
};

// sin of the principal angle between the lines spanned by u and v:
// sqrt(max(0, 1 - <u,v>^2)).  Sign-invariant, always in [0, 1].  Inputs are
// defensively normalized; a zero vector is rejected.
inline double sin_distance(const Vector& u, const Vector& v) {
  if (u.size() != v.size()) {
    throw std::invalid_argument("sin_distance: dimension mismatch");
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (!(nu > 0.0) || !(nv > 0.0) || !std::isfinite(nu) || !std::isfinite(nv)) {
    throw std::invalid_argument("sin_distance: zero or non-finite input");
  }
  const double c = u.dot(v) / (nu * nv);
  return std::sqrt(std::max(0.0, 1.0 - c * c));
}

inline double sin_distance(const UnitVector& u, const UnitVector& v) {
  return sin_distance(u.coeffs(), v.coeffs());
}

// Top eigenpair of a symmetric matrix, used as the exact reference answer
// when checking the streaming estimators.  The input is symmetrized as
// (m + m^T)/2 first, so slightly asymmetric accumulations are accepted.
// Sign convention: the returned vector's largest-magnitude coordinate is
// positive (first such index wins ties), so results are reproducible.
inline std::pair<double, UnitVector> top_eigpair(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw std::invalid_argument("top_eigpair: matrix must be square");
  }
  if (!m.allFinite()) {
    throw std::invalid_argument("top_eigpair: matrix has NaN or Inf");
  }
  const Matrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("top_eigpair: eigendecomposition failed");
  }
  // Eigenvalues are ascending; the top pair is the last column.
  const Eigen::Index last = sym.rows() - 1;
  Vector v = solver.eigenvectors().col(last);
  Eigen::Index imax = 0;
  double amax = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    if (a > amax + 0.0) {  // strict: first index with the max magnitude wins
      amax = a;
      imax = i;
    }
  }
  if (v[imax] < 0.0) v = -v;
  return {solver.eigenvalues()[last], UnitVector::normalized(v)};
}

}  // namespace dppca

#endif  // DPPCA_METRICS_HPP_
