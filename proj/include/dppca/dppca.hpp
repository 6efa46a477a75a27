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
// Minibatch private PCA: per batch, a private estimate of the gradient
// covariance's top eigenvalue (first half-batch) calibrates a private mean
// of the gradients (second half-batch), which drives one projected ascent
// step.  Also: the learning-rate schedule adapted to the batched, noised
// stream, and a doubling-grid tuner for when the schedule inputs are
// unknown.

#ifndef DPPCA_DPPCA_HPP_
#define DPPCA_DPPCA_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "dppca/errors.hpp"
#include "dppca/estimators.hpp"
#include "dppca/metrics.hpp"
#include "dppca/model.hpp"
#include "dppca/oja.hpp"
#include "dppca/privacy.hpp"
#include "dppca/private_oja.hpp"
#include "dppca/random.hpp"

namespace dppca {

struct DpPcaConfig {
  PrivacyBudget budget;
  std::int64_t batch_size = 0;  // >= 4 so each half-batch can be paired
  double zeta = 0.01;           // total failure probability to spread
  LearningRateSchedule schedule;
  double tail_factor = 4.0;    // sub-Weibull tail factor of the stream
  double tail_exponent = 1.0;  // sub-Weibull tail exponent
  std::uint64_t seed = 0;

  void validate() const {
    budget.validate();
    if (batch_size < 4) {
      throw std::invalid_argument("DpPcaConfig: batch_size must be >= 4");
    }
    if (!(zeta > 0.0 && zeta < 1.0)) {
      throw std::invalid_argument("DpPcaConfig: zeta must be in (0,1)");
    }
    if (!(tail_factor > 0.0) || !(tail_exponent > 0.0)) {
      throw std::invalid_argument(
          "DpPcaConfig: tail parameters must be > 0");
    }
  }
};

// Budget bookkeeping for one run.  Each sample is touched by exactly one of
// the two half-batch mechanisms, so under parallel composition the
// per-sample guarantee is the max of the halves; the serial booking (their
// sum, equal to the configured budget) is the conservative number reported
// upstream.
struct PrivacyLedger {
  PrivacyBudget eigenvalue_budget{0.0, 0.0};
  PrivacyBudget mean_budget{0.0, 0.0};
  PrivacyBudget per_sample_parallel{0.0, 0.0};
  PrivacyBudget per_sample_serial{0.0, 0.0};
};

struct DpPcaReport {
  std::int64_t steps = 0;
  // Per step: the private eigenvalue estimate (NaN where the step was
  // skipped before an estimate was produced; a step skipped at the mean
  // stage keeps its eigenvalue estimate) and the number of clamped
  // gradient coordinates.
  std::vector<double> eigenvalue_estimates;
  std::vector<std::int64_t> truncation_counts;
  std::vector<std::int64_t> skipped_step_indices;  // 1-based
  PrivacyLedger ledger;

  std::int64_t skipped_steps() const {
    return static_cast<std::int64_t>(skipped_step_indices.size());
  }
  // Mean of the successful steps' eigenvalue estimates (NaN if none).
  double mean_eigenvalue_estimate() const {
    double sum = 0.0;
    std::int64_t n = 0;
    for (double v : eigenvalue_estimates) {
      if (!std::isnan(v)) {
        sum += v;
        ++n;
      }
    }
    return n > 0 ? sum / static_cast<double>(n)
                 : std::numeric_limits<double>::quiet_NaN();
  }
};

struct DpPcaResult {
  UnitVector estimate;
  DpPcaReport report;
};

namespace internal {

inline constexpr std::uint64_t kEigenTag = 0x4444;
inline constexpr std::uint64_t kMeanTag = 0x5555;

}  // namespace internal

// Core loop with an arbitrary step-size callable (1-based step -> eta).
// Each batch spends (eps/2, delta/2) on the eigenvalue estimate over the
// first floor(B/2) samples and (eps/2, delta/2) on the private mean over
// the next floor(B/2); failure probability zeta is spread as zeta/(2T) per
// mechanism call.  A bottom eigenvalue outcome or a failed mean estimate
// skips that batch's update (recorded, not fatal).
template <typename Rate>
DpPcaResult run_dppca_with_rate(const Dataset& data, const DpPcaConfig& cfg,
                                const Rate& rate) {
  cfg.validate();
  if (data.size() < cfg.batch_size) {
    throw std::invalid_argument("run_dppca: need at least one full batch");
  }
  const std::int64_t batch = cfg.batch_size;
  const std::int64_t steps = data.size() / batch;
  const std::int64_t half = batch / 2;
  const Eigen::Index d = data.dim;

  const PrivacyBudget half_budget{cfg.budget.epsilon / 2.0,
                                  cfg.budget.delta / 2.0};
  const double step_zeta = cfg.zeta / (2.0 * static_cast<double>(steps));

  DpPcaResult result{UnitVector::normalized(Vector::Unit(d, 0)), {}};
  DpPcaReport& report = result.report;
  report.steps = steps;
  report.eigenvalue_estimates.assign(
      static_cast<std::size_t>(steps),
      std::numeric_limits<double>::quiet_NaN());
  report.truncation_counts.assign(static_cast<std::size_t>(steps), 0);
  report.ledger.eigenvalue_budget = half_budget;
  report.ledger.mean_budget = half_budget;
  report.ledger.per_sample_parallel =
      parallel_compose({half_budget, half_budget});
  report.ledger.per_sample_serial = serial_compose({half_budget, half_budget});

  Rng root(cfg.seed);
  Rng init = root.split(internal::kInitTag);
  Vector w = internal::sphere_vector(d, init);

  std::vector<Vector> gradients(static_cast<std::size_t>(half));
  for (std::int64_t t = 1; t <= steps; ++t) {
    const std::int64_t base = (t - 1) * batch;

    for (std::int64_t i = 0; i < half; ++i) {
      gradients[static_cast<std::size_t>(i)] =
          data.samples[static_cast<std::size_t>(base + i)].apply(w);
    }
    const EigenEstimate eig = private_top_eigenvalue(
        gradients, half_budget, step_zeta,
        mix_key(mix_key(cfg.seed, internal::kEigenTag),
                static_cast<std::uint64_t>(t)));
    if (eig.is_bottom()) {
      report.skipped_step_indices.push_back(t);
      continue;
    }
    const double lambda_hat = std::max(*eig.value, 1e-12);
    report.eigenvalue_estimates[static_cast<std::size_t>(t - 1)] =
        lambda_hat;

    for (std::int64_t i = 0; i < half; ++i) {
      gradients[static_cast<std::size_t>(i)] =
          data.samples[static_cast<std::size_t>(base + half + i)].apply(w);
    }
    PrivateMeanResult mean;
    try {
      mean = private_mean(gradients, half_budget, step_zeta,
                          2.0 * lambda_hat, cfg.tail_factor,
                          cfg.tail_exponent,
                          mix_key(mix_key(cfg.seed, internal::kMeanTag),
                                  static_cast<std::uint64_t>(t)));
    } catch (const EstimationFailedError&) {
      report.skipped_step_indices.push_back(t);
      continue;
    }
    report.truncation_counts[static_cast<std::size_t>(t - 1)] =
        mean.truncated_coordinates;

    const double eta = rate(t);
    for (;;) {
      Vector next = w + eta * mean.mean;
      const double norm = next.norm();
      if (norm > 0.0) {
        w = next / norm;
        break;
      }
      std::cerr << "run_dppca: zero-norm iterate at step " << t
                << ", restarting from a fresh direction\n";
      w = internal::sphere_vector(d, init);
    }
  }
  result.estimate = UnitVector::normalized(w);
  return result;
}

inline DpPcaResult run_dppca(const Dataset& data, const DpPcaConfig& cfg) {
  cfg.schedule.validate();
  return run_dppca_with_rate(data, cfg, cfg.schedule);
}

// Scale of the Gaussian noise entering one averaged batch update of size
// `batch` under the given budget:
//   16 * K * gamma * lambda1 * ln^a(B d / zeta) * sqrt(2 d ln(2.5/delta))
//     / (epsilon * B),
// an upper envelope for the private mean's per-step noise across the run.
inline double dppca_noise_scale(const ModelParams& params,
                                const PrivacyBudget& budget,
                                std::int64_t batch, double zeta) {
  params.validate();
  budget.validate();
  if (batch < 1) {
    throw std::invalid_argument("dppca_noise_scale: batch must be >= 1");
  }
  if (!(zeta > 0.0 && zeta < 1.0)) {
    throw std::invalid_argument("dppca_noise_scale: zeta must be in (0,1)");
  }
  const double b = static_cast<double>(batch);
  const double d = static_cast<double>(params.dim);
  const double gamma = std::sqrt(params.directional_var);
  return 16.0 * params.tail_factor * gamma * params.lambda1 *
         std::pow(std::log(b * d / zeta), params.tail_exponent) *
         std::sqrt(2.0 * d * std::log(2.5 / budget.delta)) /
         (budget.epsilon * b);
}

// Burn-in offset for the batched, noised stream.  The batch average plus
// injected noise behaves like a stream with effective deviation bound
//   M_eff = M lambda1 ln(dT/zeta)/B + sqrt(V lambda1^2 ln(dT/zeta)/B)
//           + noise_scale (sqrt(d) + sqrt(ln(T/zeta)))
// and effective variance bound
//   V_eff = V lambda1^2 / B + noise_scale^2 d,
// giving offset = 20 max(M_eff g / gap, (V_eff + lambda1^2) g^2 /
//                        (gap^2 ln(1 + zeta/100))).
inline double dppca_offset(const ModelParams& params, double noise_scale,
                           double gain, double zeta, std::int64_t batch,
                           std::int64_t steps) {
  params.validate();
  if (!std::isfinite(params.gap_ratio)) {
    throw std::invalid_argument("dppca_offset: distribution has no gap");
  }
  if (!(gain > 0.5)) {
    throw std::invalid_argument("dppca_offset: gain must be > 1/2");
  }
  if (!(zeta > 0.0 && zeta < 1.0)) {
    throw std::invalid_argument("dppca_offset: zeta must be in (0,1)");
  }
  if (batch < 1 || steps < 1) {
    throw std::invalid_argument(
        "dppca_offset: batch and steps must be >= 1");
  }
  if (!(noise_scale >= 0.0)) {
    throw std::invalid_argument("dppca_offset: noise_scale must be >= 0");
  }
  const double b = static_cast<double>(batch);
  const double t = static_cast<double>(steps);
  const double d = static_cast<double>(params.dim);
  const double l1 = params.lambda1;
  const double gap = params.gap();
  const double log_dt = std::log(d * t / zeta);
  const double m_eff = params.deviation_bound * l1 * log_dt / b +
                       std::sqrt(params.variance_bound * l1 * l1 * log_dt /
                                 b) +
                       noise_scale *
                           (std::sqrt(d) + std::sqrt(std::log(t / zeta)));
  const double v_eff =
      params.variance_bound * l1 * l1 / b + noise_scale * noise_scale * d;
  const double drift_branch = m_eff * gain / gap;
  const double variance_branch = (v_eff + l1 * l1) * gain * gain /
                                 (gap * gap * std::log1p(zeta / 100.0));
  return 20.0 * std::max(drift_branch, variance_branch);
}

// Step size for step t of the batched private run.
inline double dppca_learning_rate(std::int64_t t, const ModelParams& params,
                                  double noise_scale, double gain,
                                  double zeta, std::int64_t batch,
                                  std::int64_t steps) {
  if (t < 1) throw std::invalid_argument("dppca_learning_rate: t must be >= 1");
  const double offset =
      dppca_offset(params, noise_scale, gain, zeta, batch, steps);
  return gain / (params.gap() * (offset + static_cast<double>(t)));
}

inline LearningRateSchedule dppca_schedule(const ModelParams& params,
                                           double noise_scale, double gain,
                                           double zeta, std::int64_t batch,
                                           std::int64_t steps) {
  LearningRateSchedule s;
  s.gain = gain;
  s.offset = dppca_offset(params, noise_scale, gain, zeta, batch, steps);
  s.gap = params.gap();
  s.validate();
  return s;
}

// Whether (n, budget) lie in the regime where the batched analysis applies:
// ln n must dominate the squared gap ratio and n the schedule's sample-size
// requirement (evaluated with unit constants, T = (ln n)^2, B = n/T).
// Reported as a flag, never enforced: desk-scale runs intentionally probe
// outside the asymptotic regime.
inline bool dppca_regime_valid(const ModelParams& params, std::int64_t n,
                               const PrivacyBudget& budget) {
  params.validate();
  budget.validate();
  if (n < 3) return false;
  if (!std::isfinite(params.gap_ratio)) return false;
  const double nn = static_cast<double>(n);
  const double log_n = std::log(nn);
  if (log_n < params.gap_ratio * params.gap_ratio) return false;
  const double d = static_cast<double>(params.dim);
  const double l1 = params.lambda1;
  const double gap = params.gap();
  const double steps = log_n * log_n;
  const double gamma = std::sqrt(params.directional_var);
  const double poly_log =
      std::pow(std::log(nn * d / log_n), params.tail_exponent);
  const double sum =
      params.deviation_bound * l1 * log_n * std::log(d * log_n) / gap +
      std::sqrt(params.variance_bound * l1 * l1 * std::log(d * steps)) /
          gap +
      gamma * l1 * poly_log *
          std::sqrt(std::log(1.0 / budget.delta) * std::log(log_n)) *
          log_n * d / (gap * budget.epsilon) +
      params.variance_bound * l1 * l1 * log_n * log_n / (gap * gap) +
      gamma * l1 * poly_log * std::sqrt(std::log(1.0 / budget.delta)) *
          log_n * log_n * d / (gap * budget.epsilon);
  return nn >= sum;
}

// ---------------------------------------------------------------------------
// Doubling-grid learning-rate tuner.

struct TuneResult {
  // Winning step-size parameters: eta_t = rate_gain / (rate_offset + t).
  double rate_gain = 1.0;
  double rate_offset = 1.0;
  UnitVector estimate;
  // Error of the winner: exact when a reference direction was supplied,
  // otherwise the private proxy described at tune_learning_rate.
  double error_estimate = 1.0;
  bool converged = false;
  std::int64_t rounds = 0;
  // Total privacy charged across all candidate evaluations; stays strictly
  // below the configured budget for every permitted round cap.
  PrivacyBudget spent{0.0, 0.0};
};

namespace internal {

inline constexpr std::uint64_t kTuneTag = 0x7777;
inline constexpr std::uint64_t kQuotientTag = 0x8888;

// Noisy clipped Rayleigh quotient (1/n) sum_i clamp(w^T A_i w, +-bound) plus
// Gaussian-mechanism noise at the given budget (epsilon capped at 0.9; the
// charge may exceed what the mechanism uses, never the reverse).  Returns
// the noisy quotient and the noise std actually applied.
inline std::pair<double, double> noisy_clipped_quotient(
    const Dataset& data, const Vector& w, double bound,
    const PrivacyBudget& budget, std::uint64_t seed) {
  double sum = 0.0;
  for (const SampleMatrix& a : data.samples) {
    sum += std::clamp(w.dot(a.apply(w)), -bound, bound);
  }
  const double n = static_cast<double>(data.size());
  const PrivacyBudget capped{std::min(budget.epsilon, 0.9), budget.delta};
  const double sigma = gaussian_sigma(2.0 * bound / n, capped);
  Rng rng = Rng(seed).split(kQuotientTag);
  return {sum / n + sigma * rng.normal(), sigma};
}

}  // namespace internal

// Searches step-size parameters (g, o) for eta_t = g/(o + t) over doubling
// grids, spending a geometrically decreasing budget slice per candidate.
// Round i evaluates the frame of the grid {2^-(i-1), ..., 2^(i-1)}^2 (the
// pairs not already covered by round i-1), charging each candidate
// (eps / (2^(i+1) (2i-1)), delta / (2^(i+1) (2i-1))): half funds the
// candidate's run, half its private evaluation.  The search stops once a
// candidate's error estimate reaches the target, or at the round cap
// (best-so-far, flagged not converged).
//
// Error estimation: with a reference direction (testing), the exact sine
// distance.  Without one, a noisy clipped Rayleigh quotient q of the
// candidate, anchored at the round's best quotient q*:
//   err = sqrt(max(0, 1 - q/(q* + 2 sigma)));
// a candidate certifies only if additionally the evaluation noise could
// resolve the target (sigma <= target^2 * schedule.gap / 2), so early
// rounds cannot certify on noise alone.  The quotient clip bound is the
// plug-in envelope (gap+1) * d * ln(n d / zeta) * tail_factor^2.
inline TuneResult tune_learning_rate(
    const Dataset& data, const DpPcaConfig& base, double target_error,
    const std::optional<UnitVector>& reference = std::nullopt,
    std::int64_t max_rounds = 6) {
  base.validate();
  base.schedule.validate();
  if (!(target_error > 0.0 && target_error < 1.0)) {
    throw std::invalid_argument(
        "tune_learning_rate: target_error must be in (0,1)");
  }
  if (max_rounds < 1) {
    throw std::invalid_argument("tune_learning_rate: max_rounds must be >= 1");
  }
  // Round i charges each of its 8(i-1) frame candidates a
  // 2^-(i+1)/(2i-1) share, so the cumulative spend reaches ~0.99983 of the
  // budget after round 9 and would exceed it at round 10.  Reject caps that
  // could overspend.
  if (max_rounds > 9) {
    throw std::invalid_argument(
        "tune_learning_rate: max_rounds above 9 would overspend the budget");
  }

  const double quotient_bound =
      (base.schedule.gap + 1.0) * static_cast<double>(data.dim) *
      std::log(static_cast<double>(data.size()) *
               static_cast<double>(data.dim) / base.zeta) *
      base.tail_factor * base.tail_factor;

  TuneResult best{1.0, 1.0,
                  UnitVector::normalized(Vector::Unit(data.dim, 0)),
                  std::numeric_limits<double>::infinity(), false, 0,
                  PrivacyBudget{0.0, 0.0}};

  for (std::int64_t round = 1; round <= max_rounds; ++round) {
    best.rounds = round;
    const double share =
        std::exp2(-static_cast<double>(round + 1)) /
        static_cast<double>(2 * round - 1);
    const PrivacyBudget candidate_budget{base.budget.epsilon * share,
                                         base.budget.delta * share};
    const PrivacyBudget half{candidate_budget.epsilon / 2.0,
                             candidate_budget.delta / 2.0};

    struct Candidate {
      double gain, offset, error;
      UnitVector estimate;
    };
    std::vector<Candidate> evaluated;
    std::vector<std::pair<double, double>> quotients;  // (q, sigma)
    const std::int64_t reach = round - 1;
    std::uint64_t candidate_index = 0;
    for (std::int64_t e1 = -reach; e1 <= reach; ++e1) {
      for (std::int64_t e2 = -reach; e2 <= reach; ++e2) {
        if (std::max(std::abs(e1), std::abs(e2)) != reach) continue;
        const double gain = std::exp2(static_cast<double>(e1));
        const double offset = std::exp2(static_cast<double>(e2));
        DpPcaConfig cfg = base;
        cfg.budget = half;
        cfg.seed = mix_key(mix_key(base.seed, internal::kTuneTag),
                           (static_cast<std::uint64_t>(round) << 32) |
                               candidate_index);
        const auto rate = [gain, offset](std::int64_t t) {
          return gain / (offset + static_cast<double>(t));
        };
        DpPcaResult run = run_dppca_with_rate(data, cfg, rate);
        best.spent.epsilon += candidate_budget.epsilon;
        best.spent.delta += candidate_budget.delta;

        // With a reference the error is exact; otherwise it is derived from
        // the noisy quotients once the round's maximum is known.
        double error = std::numeric_limits<double>::infinity();
        if (reference.has_value()) {
          error = sin_distance(run.estimate, *reference);
        } else {
          quotients.push_back(internal::noisy_clipped_quotient(
              data, run.estimate.coeffs(), quotient_bound, half,
              cfg.seed + 1));
        }
        evaluated.push_back(Candidate{gain, offset, error, run.estimate});
        ++candidate_index;
      }
    }

    if (!reference.has_value()) {
      double best_quotient = -std::numeric_limits<double>::infinity();
      for (const auto& [q, s] : quotients) {
        best_quotient = std::max(best_quotient, q);
      }
      for (std::size_t i = 0; i < evaluated.size(); ++i) {
        const auto [q, s] = quotients[i];
        const double anchor = best_quotient + 2.0 * s;
        double err = 1.0;
        if (anchor > 0.0) {
          err = std::sqrt(std::max(0.0, 1.0 - q / anchor));
        }
        // Certification requires the noise to be able to resolve the target.
        const bool resolvable =
            s <= 0.5 * target_error * target_error * base.schedule.gap;
        evaluated[i].error = resolvable ? err : std::max(err, 1.0);
      }
    }

    for (const Candidate& c : evaluated) {
      if (c.error < best.error_estimate) {
        best.error_estimate = c.error;
        best.rate_gain = c.gain;
        best.rate_offset = c.offset;
        best.estimate = c.estimate;
      }
    }
    if (best.error_estimate <= target_error) {
      best.converged = true;
      return best;
    }
  }
  return best;
}

}  // namespace dppca

#endif  // DPPCA_DPPCA_HPP_
