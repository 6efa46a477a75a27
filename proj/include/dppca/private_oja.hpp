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
// Differentially private streaming PCA by per-sample gradient clipping and
// Gaussian noise injection, with the sample order shuffled so that the
// per-step local guarantee is amplified by anonymity; plus the minibatch
// variant that averages clipped gradients and accounts by serial
// composition over the batch steps.

#ifndef DPPCA_PRIVATE_OJA_HPP_
#define DPPCA_PRIVATE_OJA_HPP_

#include <cmath>
#include <cstdint>
#include <iostream>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

#include "dppca/metrics.hpp"
#include "dppca/model.hpp"
#include "dppca/oja.hpp"
#include "dppca/privacy.hpp"
#include "dppca/random.hpp"

namespace dppca {

// Gradient clipping threshold plus the multiplier that scales the injected
// Gaussian noise relative to the threshold.
struct ClipConfig {
  double beta = 1.0;              // clipping norm bound, > 0
  double noise_multiplier = 0.0;  // noise scale relative to beta, >= 0

  void validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) {
      throw std::invalid_argument("ClipConfig: beta must be finite and > 0");
    }
    if (!(noise_multiplier >= 0.0) || !std::isfinite(noise_multiplier)) {
      throw std::invalid_argument(
          "ClipConfig: noise_multiplier must be finite and >= 0");
    }
  }
};

// x scaled down to norm at most beta; direction preserved, identity when
// already inside the ball (zero maps to itself).
inline Vector clip(const Vector& x, double beta) {
  if (!(beta > 0.0)) {
    throw std::invalid_argument("clip: beta must be > 0");
  }
  const double norm = x.norm();
  if (norm <= beta) return x;
  return x * (beta / norm);
}

// Clipping threshold that leaves gradients untouched with high probability
// on a stream with top eigenvalue lambda1 and sub-Weibull directional tails
// (factor tail_factor, exponent tail_exponent, scale directional_scale):
//   beta = lambda1 * sqrt(d) * (tail_factor * directional_scale *
//          ln^a(n*d/zeta) + 1).
inline double clipping_threshold(double lambda1, Eigen::Index dim,
                                 double tail_factor, double directional_scale,
                                 std::int64_t n, double zeta,
                                 double tail_exponent = 1.0) {
  if (!(lambda1 > 0.0) || dim <= 0 || n < 1) {
    throw std::invalid_argument(
        "clipping_threshold: lambda1, dim, n must be positive");
  }
  if (!(tail_factor >= 0.0) || !(directional_scale >= 0.0) ||
      !(tail_exponent > 0.0)) {
    throw std::invalid_argument(
        "clipping_threshold: negative tail parameter");
  }
  if (!(zeta > 0.0 && zeta < 1.0)) {
    throw std::invalid_argument("clipping_threshold: zeta must be in (0,1)");
  }
  const double log_term = std::log(static_cast<double>(n) *
                                   static_cast<double>(dim) / zeta);
  return lambda1 * std::sqrt(static_cast<double>(dim)) *
         (tail_factor * directional_scale *
              std::pow(log_term, tail_exponent) +
          1.0);
}

// Noise multiplier for the per-sample shuffled algorithm, together with
// whether the target budget lies in the regime where shuffle amplification
// covers it (epsilon <= sqrt(ln(n/delta)/n)).
struct NoiseMultiplier {
  double value = 0.0;
  bool regime_valid = false;
};

inline NoiseMultiplier noise_multiplier(std::int64_t n,
                                        const PrivacyBudget& budget) {
  budget.validate();
  if (n < 1) {
    throw std::invalid_argument("noise_multiplier: n must be >= 1");
  }
  const double nn = static_cast<double>(n);
  const double log_term = std::log(nn / budget.delta);
  NoiseMultiplier m;
  m.value = log_term / (budget.epsilon * std::sqrt(nn));
  m.regime_valid = budget.epsilon <= std::sqrt(log_term / nn);
  return m;
}

// Noise multiplier for the minibatch variant: the per-step Gaussian
// mechanism at unit sensitivity under an even serial split of the budget
// over T steps.  Throws if epsilon/T reaches the Gaussian mechanism's limit.
inline double minibatch_noise_multiplier(std::int64_t steps,
                                         const PrivacyBudget& budget) {
  budget.validate();
  if (steps < 1) {
    throw std::invalid_argument(
        "minibatch_noise_multiplier: steps must be >= 1");
  }
  const double s = static_cast<double>(steps);
  return gaussian_sigma(1.0, PrivacyBudget{budget.epsilon / s,
                                           budget.delta / s});
}

// Uniformly random permutation of {0, ..., n-1} (Fisher-Yates).  Exposed so
// tests can reconstruct the exact order a private run visited.
inline std::vector<std::int64_t> shuffled_order(std::int64_t n, Rng& rng) {
  if (n < 0) throw std::invalid_argument("shuffled_order: n must be >= 0");
  std::vector<std::int64_t> order(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    order[static_cast<std::size_t>(i)] = i;
  }
  for (std::int64_t i = n - 1; i > 0; --i) {
    const std::int64_t j = static_cast<std::int64_t>(
        rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[static_cast<std::size_t>(i)],
              order[static_cast<std::size_t>(j)]);
  }
  return order;
}

struct PrivateOjaReport {
  // Steps where the gradient actually exceeded the clipping threshold.
  std::int64_t clipped_steps = 0;
  // Whether the target budget lies in the shuffle-amplification regime.
  bool regime_valid = false;
};

struct PrivateOjaResult {
  UnitVector estimate;
  PrivateOjaReport report;
};

// Observer that ignores the per-step iterates.
struct NullStepObserver {
  void operator()(std::int64_t /*t*/, const Vector& /*before*/,
                  const Vector& /*updated_unnormalized*/) const {}
};

// Per-sample clipped, noised pass over the shuffled stream:
//   w' = w + eta_t clip_beta(A_t w) + 2 eta_t beta alpha z_t,  z_t ~ N(0,I),
// normalized each step.  The observer (if given) sees each pre-normalization
// iterate, which is what noise-calibration tests measure.
template <typename Rate, typename Observer = NullStepObserver>
PrivateOjaResult run_private_oja(const Dataset& data,
                                 const PrivacyBudget& budget, const Rate& rate,
                                 const ClipConfig& clip_cfg, std::uint64_t seed,
                                 Observer&& observe = Observer{}) {
  if constexpr (std::is_same_v<std::decay_t<Rate>, LearningRateSchedule>) {
    rate.validate();
  }
  budget.validate();
  clip_cfg.validate();
  if (data.size() < 1) {
    throw std::invalid_argument("run_private_oja: empty dataset");
  }
  const Eigen::Index d = data.dim;
  Rng root(seed);
  Rng init = root.split(internal::kInitTag);
  Rng shuffle_rng = root.split(internal::kShuffleTag);
  Rng noise = root.split(internal::kNoiseTag);
  const std::vector<std::int64_t> order = shuffled_order(data.size(),
                                                         shuffle_rng);

  PrivateOjaResult result{UnitVector::normalized(Vector::Unit(d, 0)), {}};
  result.report.regime_valid = noise_multiplier(data.size(),
                                                budget).regime_valid;

  Vector w = internal::sphere_vector(d, init);
  const double noise_scale = 2.0 * clip_cfg.beta * clip_cfg.noise_multiplier;
  for (std::int64_t t = 1; t <= data.size(); ++t) {
    const SampleMatrix& a =
        data.samples[static_cast<std::size_t>(order[static_cast<std::size_t>(
            t - 1)])];
    const double eta = rate(t);
    Vector g = a.apply(w);
    if (g.norm() > clip_cfg.beta) {
      g = clip(g, clip_cfg.beta);
      ++result.report.clipped_steps;
    }
    Vector z(d);
    for (Eigen::Index i = 0; i < d; ++i) z[i] = noise.normal();
    for (;;) {
      Vector next = w + eta * g + eta * noise_scale * z;
      observe(t, w, next);
      const double norm = next.norm();
      if (norm > 0.0) {
        w = next / norm;
        break;
      }
      std::cerr << "run_private_oja: zero-norm iterate at step " << t
                << ", restarting from a fresh direction\n";
      w = internal::sphere_vector(d, init);
      g = a.apply(w);
      if (g.norm() > clip_cfg.beta) g = clip(g, clip_cfg.beta);
    }
  }
  result.estimate = UnitVector::normalized(w);
  return result;
}

struct MinibatchOjaResult {
  UnitVector estimate;
  // Samples (across all steps) whose gradient exceeded the threshold.
  std::int64_t clipped_samples = 0;
};

// Minibatch variant: T steps over contiguous batches of B = floor(n/T)
// samples,
//   w' = w + (eta_t/B) sum_i clip_beta(A_i w) + (2 eta_t beta alpha_g / B) z,
// where alpha_g is clip_cfg.noise_multiplier (see
// minibatch_noise_multiplier for the serial-composition calibration).
// Unlike the per-sample variant this is valid at any epsilon the Gaussian
// mechanism's per-step split allows.
template <typename Rate>
MinibatchOjaResult run_minibatch_clipped_oja(const Dataset& data,
                                             const PrivacyBudget& budget,
                                             std::int64_t steps,
                                             const Rate& rate,
                                             const ClipConfig& clip_cfg,
                                             std::uint64_t seed) {
  if constexpr (std::is_same_v<std::decay_t<Rate>, LearningRateSchedule>) {
    rate.validate();
  }
  budget.validate();
  clip_cfg.validate();
  if (data.size() < 1) {
    throw std::invalid_argument("run_minibatch_clipped_oja: empty dataset");
  }
  if (steps < 1 || steps > data.size()) {
    throw std::invalid_argument(
        "run_minibatch_clipped_oja: need 1 <= steps <= n");
  }
  const std::int64_t batch = data.size() / steps;
  const Eigen::Index d = data.dim;
  Rng root(seed);
  Rng init = root.split(internal::kInitTag);
  Rng noise = root.split(internal::kNoiseTag);

  MinibatchOjaResult result{UnitVector::normalized(Vector::Unit(d, 0)), 0};
  Vector w = internal::sphere_vector(d, init);
  const double b = static_cast<double>(batch);
  for (std::int64_t t = 1; t <= steps; ++t) {
    const double eta = rate(t);
    const std::int64_t base = (t - 1) * batch;
    Vector z(d);
    for (Eigen::Index i = 0; i < d; ++i) z[i] = noise.normal();
    const double noise_scale =
        2.0 * eta * clip_cfg.beta * clip_cfg.noise_multiplier / b;
    for (;;) {
      Vector mean_grad = Vector::Zero(d);
      std::int64_t clipped_here = 0;
      for (std::int64_t i = 0; i < batch; ++i) {
        const SampleMatrix& a =
            data.samples[static_cast<std::size_t>(base + i)];
        Vector g = a.apply(w);
        if (g.norm() > clip_cfg.beta) {
          g = clip(g, clip_cfg.beta);
          ++clipped_here;
        }
        mean_grad += g;
      }
      mean_grad /= b;
      Vector next = w + eta * mean_grad + noise_scale * z;
      const double norm = next.norm();
      if (norm > 0.0) {
        w = next / norm;
        result.clipped_samples += clipped_here;
        break;
      }
      std::cerr << "run_minibatch_clipped_oja: zero-norm iterate at step "
                << t << ", restarting from a fresh direction\n";
      w = internal::sphere_vector(d, init);
    }
  }
  result.estimate = UnitVector::normalized(w);
  return result;
}

}  // namespace dppca

#endif  // DPPCA_PRIVATE_OJA_HPP_
