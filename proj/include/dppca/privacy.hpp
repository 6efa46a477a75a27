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
// Privacy mechanisms and budget arithmetic: Gaussian-mechanism calibration,
// a stability-based histogram over unbounded bin families, serial /
// parallel / advanced composition, and the shuffle-amplification bound.
// Budget-split policy (who gets epsilon/2, etc.) lives in the calling
// algorithms; this module only validates and transforms budgets.

#ifndef DPPCA_PRIVACY_HPP_
#define DPPCA_PRIVACY_HPP_

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "dppca/random.hpp"

namespace dppca {

// An (epsilon, delta) differential-privacy guarantee.
struct PrivacyBudget {
  double epsilon = 0.0;
  double delta = 0.0;

  void validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
      throw std::invalid_argument("PrivacyBudget: epsilon must be > 0");
    }
    if (!(delta > 0.0 && delta < 1.0)) {
      throw std::invalid_argument("PrivacyBudget: delta must be in (0,1)");
    }
  }
};

// Standard deviation of Gaussian noise that makes a sensitivity-bounded
// query (epsilon, delta)-private:
//   sigma = sensitivity * sqrt(2 ln(1.25/delta)) / epsilon.
// Valid only for epsilon in (0,1); callers composing many queries must
// pre-split their budget so each call lands in that range.
inline double gaussian_sigma(double sensitivity, const PrivacyBudget& budget) {
  budget.validate();
  if (!(sensitivity >= 0.0) || !std::isfinite(sensitivity)) {
    throw std::invalid_argument("gaussian_sigma: sensitivity must be >= 0");
  }
  if (budget.epsilon >= 1.0) {
    throw std::out_of_range(
        "gaussian_sigma: epsilon must be < 1; pre-split the budget");
  }
  return sensitivity * std::sqrt(2.0 * std::log(1.25 / budget.delta)) /
         budget.epsilon;
}

// How a histogram's integer bin ids map back to real intervals.
struct BinDescriptor {
  enum class Kind { kLinear, kGeometric, kCustom };

  Kind kind = Kind::kCustom;
  // Linear: bin width.  Geometric: ratio between consecutive bin edges.
  double scale = 0.0;

  static BinDescriptor linear(double width) {
    return BinDescriptor{Kind::kLinear, width};
  }
  static BinDescriptor geometric(double ratio) {
    return BinDescriptor{Kind::kGeometric, ratio};
  }
  static BinDescriptor custom() { return BinDescriptor{}; }
};

// Result of the stability-based histogram: only bins whose noisy mass
// cleared the stability threshold appear, and every stored mass is positive.
struct HistogramOutcome {
  std::map<std::int64_t, double> counts;
  BinDescriptor bin_width;
  // The survival cutoff that was applied, for diagnostics.
  double threshold = 0.0;

  bool empty() const { return counts.empty(); }
};

// Deterministic part of the histogram: occupied-bin probability masses
// count / n_total.  Exposed separately so neighboring-input properties can
// be checked without noise.
inline std::map<std::int64_t, double> histogram_masses(
    const std::vector<std::int64_t>& values, std::int64_t n_total) {
  if (n_total < 1) {
    throw std::invalid_argument("histogram_masses: n_total must be >= 1");
  }
  std::map<std::int64_t, std::int64_t> counts;
  for (std::int64_t v : values) ++counts[v];
  std::map<std::int64_t, double> masses;
  for (const auto& [bin, c] : counts) {
    masses[bin] = static_cast<double>(c) / static_cast<double>(n_total);
  }
  return masses;
}

// Stability-based histogram over an unbounded family of integer bins.
// Each OCCUPIED bin's mass receives Laplace(2/(epsilon*n_total)) noise; a
// bin survives only if its noisy mass reaches
//   t = 2/(epsilon*n_total) * ln(2/delta) + 1/n_total.
// Empty bins never emit noise — that is the stability trick that lets the
// bin family be unbounded.  Requires delta < 1/n_total.
inline HistogramOutcome stable_histogram(
    const std::vector<std::int64_t>& values, std::int64_t n_total,
    const PrivacyBudget& budget, Rng& rng,
    const BinDescriptor& bins = BinDescriptor::custom()) {
  budget.validate();
  if (n_total < 1) {
    throw std::invalid_argument("stable_histogram: n_total must be >= 1");
  }
  if (!(budget.delta < 1.0 / static_cast<double>(n_total))) {
    throw std::invalid_argument(
        "stable_histogram: requires delta < 1/n_total");
  }
  const double lap_scale =
      2.0 / (budget.epsilon * static_cast<double>(n_total));
  const double threshold = lap_scale * std::log(2.0 / budget.delta) +
                           1.0 / static_cast<double>(n_total);
  HistogramOutcome out;
  out.bin_width = bins;
  out.threshold = threshold;
  // std::map iteration is ordered, so the noise stream is reproducible.
  for (const auto& [bin, mass] : histogram_masses(values, n_total)) {
    const double noisy = mass + rng.laplace(lap_scale);
    if (noisy >= threshold) {
      out.counts[bin] = std::min(noisy, 1.0);
    }
  }
  return out;
}

inline HistogramOutcome stable_histogram(
    const std::vector<std::int64_t>& values, std::int64_t n_total,
    const PrivacyBudget& budget, std::uint64_t seed,
    const BinDescriptor& bins = BinDescriptor::custom()) {
  Rng rng(seed);
  return stable_histogram(values, n_total, budget, rng, bins);
}

// Per-query budget that makes k adaptive queries compose to at most the
// given total under advanced composition:
//   (epsilon / (2 sqrt(2 k ln(2/delta))), delta / (2k)).
// Stated for total epsilon <= 0.9.
inline PrivacyBudget advanced_composition_split(const PrivacyBudget& total,
                                                std::int64_t k) {
  total.validate();
  if (k < 1) {
    throw std::invalid_argument("advanced_composition_split: k must be >= 1");
  }
  if (total.epsilon > 0.9) {
    throw std::out_of_range(
        "advanced_composition_split: epsilon must be <= 0.9");
  }
  PrivacyBudget per;
  per.epsilon =
      total.epsilon /
      (2.0 * std::sqrt(2.0 * static_cast<double>(k) *
                       std::log(2.0 / total.delta)));
  per.delta = total.delta / (2.0 * static_cast<double>(k));
  per.validate();
  return per;
}

// End-to-end guarantee for running the given mechanisms in sequence on the
// same data: component-wise sums.
inline PrivacyBudget serial_compose(const std::vector<PrivacyBudget>& budgets) {
  if (budgets.empty()) {
    throw std::invalid_argument("serial_compose: empty budget list");
  }
  PrivacyBudget total{0.0, 0.0};
  for (const PrivacyBudget& b : budgets) {
    b.validate();
    total.epsilon += b.epsilon;
    total.delta += b.delta;
  }
  total.validate();
  return total;
}

// End-to-end guarantee when each mechanism touches a disjoint slice of the
// data (the caller asserts disjointness): component-wise max.
inline PrivacyBudget parallel_compose(
    const std::vector<PrivacyBudget>& budgets) {
  if (budgets.empty()) {
    throw std::invalid_argument("parallel_compose: empty budget list");
  }
  PrivacyBudget total{0.0, 0.0};
  for (const PrivacyBudget& b : budgets) {
    b.validate();
    total.epsilon = std::max(total.epsilon, b.epsilon);
    total.delta = std::max(total.delta, b.delta);
  }
  return total;
}

// Central epsilon after uniformly shuffling n contributions that are each
// eps0-locally-private:
//   (1 - e^{-eps0}) * (sqrt(e^{eps0} ln(1/delta)) / sqrt(n) + e^{eps0} / n),
// valid for eps0 <= ln(n / (16 ln(2/delta))).  The amplification constant
// is taken as 1.
inline double shuffle_amplified_epsilon(double eps0, std::int64_t n,
                                        double delta) {
  if (!(eps0 >= 0.0) || !std::isfinite(eps0)) {
    throw std::invalid_argument(
        "shuffle_amplified_epsilon: eps0 must be >= 0");
  }
  if (n < 1) {
    throw std::invalid_argument("shuffle_amplified_epsilon: n must be >= 1");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument(
        "shuffle_amplified_epsilon: delta must be in (0,1)");
  }
  const double cap =
      std::log(static_cast<double>(n) / (16.0 * std::log(2.0 / delta)));
  if (!(eps0 <= cap)) {
    throw std::out_of_range(
        "shuffle_amplified_epsilon: eps0 exceeds ln(n/(16 ln(2/delta)))");
  }
  const double e0 = std::exp(eps0);
  const double root_n = std::sqrt(static_cast<double>(n));
  return (1.0 - std::exp(-eps0)) *
         (std::sqrt(e0 * std::log(1.0 / delta)) / root_n +
          e0 / static_cast<double>(n));
}

}  // namespace dppca

#endif  // DPPCA_PRIVACY_HPP_
