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
// Non-private streaming PCA: one pass of projected stochastic gradient
// ascent on the Rayleigh quotient (w <- normalize(w + eta_t A_t w)) with the
// inverse-time learning-rate schedule whose burn-in offset is derived from
// the distribution's regularity parameters.

#ifndef DPPCA_OJA_HPP_
#define DPPCA_OJA_HPP_

#include <cmath>
#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <type_traits>

#include "dppca/metrics.hpp"
#include "dppca/model.hpp"
#include "dppca/random.hpp"

namespace dppca {

// Inverse-time step sizes eta_t = gain / (gap * (offset + t)).  The offset
// delays large early steps until the iterate has stabilized; the gain must
// exceed 1/2 for the variance term of the error bound to be summable.
struct LearningRateSchedule {
  double gain = 1.0;    // numerator multiplier, > 1/2
  double offset = 0.0;  // burn-in shift, >= 0
  double gap = 1.0;     // top-eigenvalue gap the rate normalizes by, > 0

  double operator()(std::int64_t t) const {
    return gain / (gap * (offset + static_cast<double>(t)));
  }

  void validate() const {
    if (!(gain > 0.5)) {
      throw std::invalid_argument("LearningRateSchedule: gain must be > 1/2");
    }
    if (!(offset >= 0.0) || !std::isfinite(offset)) {
      throw std::invalid_argument(
          "LearningRateSchedule: offset must be finite and >= 0");
    }
    if (!(gap > 0.0) || !std::isfinite(gap)) {
      throw std::invalid_argument(
          "LearningRateSchedule: gap must be finite and > 0");
    }
  }
};

// Burn-in offset that makes the inverse-time schedule safe for a stream
// with the given regularity parameters:
//   offset = 20 * max(kappa*M*gain, kappa^2*(V+1)*gain^2 / ln(1 + zeta/100))
// where kappa is the gap ratio, M the spectral deviation bound and V the
// second-moment bound.  zeta is the allowed failure probability.
inline double oja_offset(const ModelParams& params, double gain,
                         double zeta) {
  params.validate();
  if (!(gain > 0.5)) {
    throw std::invalid_argument("oja_offset: gain must be > 1/2");
  }
  if (!(zeta > 0.0 && zeta < 1.0)) {
    throw std::invalid_argument("oja_offset: zeta must be in (0,1)");
  }
  const double kappa = params.gap_ratio;
  if (!std::isfinite(kappa)) {
    throw std::invalid_argument("oja_offset: distribution has no gap");
  }
  const double drift_branch = kappa * params.deviation_bound * gain;
  const double variance_branch = kappa * kappa *
                                 (params.variance_bound + 1.0) * gain * gain /
                                 std::log1p(zeta / 100.0);
  return 20.0 * std::max(drift_branch, variance_branch);
}

// Full schedule for a stream with the given parameters.
inline LearningRateSchedule oja_schedule(const ModelParams& params,
                                         double gain, double zeta) {
  LearningRateSchedule s;
  s.gain = gain;
  s.offset = oja_offset(params, gain, zeta);
  s.gap = params.gap();
  s.validate();
  return s;
}

// One sequential pass of w <- normalize(w + eta_t A_t w) over the stream,
// starting from a uniformly random unit vector drawn from the seed.  `rate`
// is any callable mapping the 1-based step index to a step size; the
// LearningRateSchedule above is validated, ad-hoc callables are trusted.
// A zero-norm iterate (measure-zero event) restarts the step from a fresh
// random direction.
template <typename Rate>
UnitVector run_oja(const Dataset& data, const Rate& rate,
                   std::uint64_t seed) {
  if constexpr (std::is_same_v<std::decay_t<Rate>, LearningRateSchedule>) {
    rate.validate();
  }
  if (data.size() < 1) {
    throw std::invalid_argument("run_oja: empty dataset");
  }
  Rng init = Rng(seed).split(internal::kInitTag);
  Vector w = internal::sphere_vector(data.dim, init);
  for (std::int64_t t = 1; t <= data.size(); ++t) {
    const SampleMatrix& a = data.samples[static_cast<std::size_t>(t - 1)];
    const double eta = rate(t);
    for (;;) {
      Vector next = w + eta * a.apply(w);
      const double norm = next.norm();
      if (norm > 0.0) {
        w = next / norm;
        break;
      }
      std::cerr << "run_oja: zero-norm iterate at step " << t
                << ", restarting from a fresh direction\n";
      w = internal::sphere_vector(data.dim, init);
    }
  }
  return UnitVector::normalized(w);
}

}  // namespace dppca

#endif  // DPPCA_OJA_HPP_
