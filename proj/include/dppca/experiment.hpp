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
// Experiment runner: a flat key=value configuration describing a sweep over
// (n, epsilon, delta, noise-variance, algorithm, trial), deterministic
// seeding that pairs algorithms on identical datasets, CSV row output, and
// a JSON manifest from which any single row can be reproduced bit-for-bit.

#ifndef DPPCA_EXPERIMENT_HPP_
#define DPPCA_EXPERIMENT_HPP_

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dppca/baseline.hpp"
#include "dppca/dppca.hpp"
#include "dppca/metrics.hpp"
#include "dppca/model.hpp"
#include "dppca/oja.hpp"
#include "dppca/private_oja.hpp"
#include "dppca/privacy.hpp"
#include "dppca/random.hpp"

namespace dppca {

inline constexpr char kLibraryVersion[] = "0.1.0";

// Per-mechanism failure probability used by every derived threshold and
// burn-in in the runner.
inline constexpr double kRunnerZeta = 0.01;

// A configuration problem: carries the offending key so callers can point
// the user at the exact line to fix.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error("config." + field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class Algorithm { kOja, kPrivateOja, kMinibatch, kDpPca, kBaseline };

inline const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kOja:
      return "oja";
    case Algorithm::kPrivateOja:
      return "private_oja";
    case Algorithm::kMinibatch:
      return "minibatch";
    case Algorithm::kDpPca:
      return "dppca";
    case Algorithm::kBaseline:
      return "baseline";
  }
  return "?";
}

inline std::optional<Algorithm> parse_algorithm(const std::string& name) {
  if (name == "oja") return Algorithm::kOja;
  if (name == "private_oja") return Algorithm::kPrivateOja;
  if (name == "minibatch") return Algorithm::kMinibatch;
  if (name == "dppca") return Algorithm::kDpPca;
  if (name == "baseline") return Algorithm::kBaseline;
  return std::nullopt;
}

// Sweep definition.  Every combination of n x epsilon x delta x
// noise-variance is run for every listed algorithm and trial index; rows
// come out in exactly that loop order.
struct ExperimentConfig {
  std::string model = "toy";          // "toy" or "gaussian"
  Eigen::Index dim = 0;               // toy: required; gaussian: derived
  std::vector<double> eigenvalues;    // gaussian spectrum, non-increasing
  std::vector<std::int64_t> n;        // stream lengths
  std::vector<double> epsilon;        // privacy budgets
  std::vector<double> delta;
  std::vector<double> sigma_noise_sq;  // toy residual variances
  std::vector<Algorithm> algorithms;
  std::int64_t trials = 1;
  std::uint64_t master_seed = 1;
  double alpha = 0.0;    // Oja gain override; 0 picks max(1, ln n)
  double c1 = 30.0;      // DP-PCA step size numerator: eta_t = c1/(c2+t)
  double c2 = 0.0;
  std::int64_t dppca_batch = 0;  // DP-PCA batch size; 0 picks floor(n/2)
  bool record_runtime = false;   // off keeps repeated runs byte-identical

  void validate() const {
    if (model != "toy" && model != "gaussian") {
      throw ConfigError("model", "must be 'toy' or 'gaussian'");
    }
    if (model == "toy") {
      if (dim < 1) throw ConfigError("dim", "toy model needs dim >= 1");
      if (!eigenvalues.empty()) {
        throw ConfigError("eigenvalues", "only the gaussian model takes a "
                                         "spectrum; toy uses sigma_noise_sq");
      }
      if (sigma_noise_sq.empty()) {
        throw ConfigError("sigma_noise_sq",
                          "toy model needs at least one value");
      }
      for (double s : sigma_noise_sq) {
        if (!(s > 0.0) || !std::isfinite(s)) {
          throw ConfigError("sigma_noise_sq", "values must be finite and > 0");
        }
      }
    } else {
      if (eigenvalues.size() < 2) {
        throw ConfigError("eigenvalues",
                          "gaussian model needs at least two eigenvalues "
                          "(use eigenvalues=... or spiked=l1,l2,d)");
      }
      if (!sigma_noise_sq.empty()) {
        throw ConfigError("sigma_noise_sq",
                          "only the toy model takes sigma_noise_sq");
      }
      for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
        if (!(eigenvalues[i] > 0.0) || !std::isfinite(eigenvalues[i])) {
          throw ConfigError("eigenvalues", "values must be finite and > 0");
        }
        if (i > 0 && eigenvalues[i] > eigenvalues[i - 1]) {
          throw ConfigError("eigenvalues", "values must be non-increasing");
        }
      }
      if (!(eigenvalues[0] > eigenvalues[1])) {
        throw ConfigError("eigenvalues",
                          "top eigenvalue must be strictly largest, or the "
                          "target direction is ill-defined");
      }
      if (dim != 0 &&
          dim != static_cast<Eigen::Index>(eigenvalues.size())) {
        throw ConfigError("dim", "contradicts the eigenvalue count");
      }
    }
    if (n.empty()) throw ConfigError("n", "need at least one stream length");
    for (std::int64_t v : n) {
      if (v < 1) throw ConfigError("n", "stream lengths must be >= 1");
    }
    if (epsilon.empty()) {
      throw ConfigError("epsilon", "need at least one value");
    }
    for (double e : epsilon) {
      if (!(e > 0.0) || !std::isfinite(e)) {
        throw ConfigError("epsilon", "values must be finite and > 0");
      }
    }
    if (delta.empty()) throw ConfigError("delta", "need at least one value");
    for (double dl : delta) {
      if (!(dl > 0.0 && dl < 1.0)) {
        throw ConfigError("delta", "values must lie in (0,1)");
      }
    }
    if (algorithms.empty()) {
      throw ConfigError("algorithms", "need at least one algorithm");
    }
    for (std::size_t i = 0; i < algorithms.size(); ++i) {
      for (std::size_t j = i + 1; j < algorithms.size(); ++j) {
        if (algorithms[i] == algorithms[j]) {
          throw ConfigError("algorithms", "duplicate entry");
        }
      }
    }
    if (trials < 1) throw ConfigError("trials", "must be >= 1");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
      throw ConfigError("alpha", "must be finite and >= 0");
    }
    if (!(c1 > 0.0) || !std::isfinite(c1)) {
      throw ConfigError("c1", "must be finite and > 0");
    }
    if (!(c2 >= 0.0) || !std::isfinite(c2)) {
      throw ConfigError("c2", "must be finite and >= 0");
    }
    if (dppca_batch < 0) throw ConfigError("B", "must be >= 0");
  }

  Eigen::Index effective_dim() const {
    return model == "toy" ? dim
                          : static_cast<Eigen::Index>(eigenvalues.size());
  }
};

namespace internal {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline double parse_double_field(const std::string& field,
                                 const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) throw ConfigError(field, "empty number");
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) {
    throw ConfigError(field, "not a number: '" + t + "'");
  }
  return v;
}

inline std::int64_t parse_int_field(const std::string& field,
                                    const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) throw ConfigError(field, "empty integer");
  char* end = nullptr;
  const long long v = std::strtoll(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size()) {
    throw ConfigError(field, "not an integer: '" + t + "'");
  }
  return static_cast<std::int64_t>(v);
}

inline std::uint64_t parse_uint_field(const std::string& field,
                                      const std::string& text) {
  const std::string t = trim(text);
  if (t.empty() || t[0] == '-') {
    throw ConfigError(field, "not an unsigned integer: '" + t + "'");
  }
  char* end = nullptr;
  const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size()) {
    throw ConfigError(field, "not an unsigned integer: '" + t + "'");
  }
  return static_cast<std::uint64_t>(v);
}

inline std::vector<double> parse_double_list(const std::string& field,
                                             const std::string& text) {
  std::vector<double> out;
  for (const std::string& piece : split(text, ',')) {
    out.push_back(parse_double_field(field, piece));
  }
  return out;
}

inline std::vector<std::int64_t> parse_int_list(const std::string& field,
                                                const std::string& text) {
  std::vector<std::int64_t> out;
  for (const std::string& piece : split(text, ',')) {
    out.push_back(parse_int_field(field, piece));
  }
  return out;
}

// Fixed spike direction for toy experiments: an off-axis unit vector so no
// single coordinate carries the whole signal.
inline Vector experiment_spike(Eigen::Index d) {
  Vector spike = Vector::Zero(d);
  if (d == 1) {
    spike[0] = 1.0;
  } else {
    spike[0] = 0.6;
    spike[1] = 0.8;
  }
  return spike;
}

}  // namespace internal

// Parses the flat key=value format.  '#' starts a comment; blank lines are
// skipped; keys may appear once.  Unknown keys are an error so typos cannot
// silently fall back to a default.
inline ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::vector<std::string> seen;
  for (const std::string& raw : internal::split(text, '\n')) {
    std::string line = raw;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = internal::trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(line, "expected key = value");
    }
    const std::string key = internal::trim(line.substr(0, eq));
    const std::string value = internal::trim(line.substr(eq + 1));
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) {
      throw ConfigError(key, "given twice");
    }
    seen.push_back(key);

    if (key == "model") {
      cfg.model = value;
    } else if (key == "dim") {
      cfg.dim = static_cast<Eigen::Index>(
          internal::parse_int_field("dim", value));
    } else if (key == "eigenvalues") {
      if (!cfg.eigenvalues.empty()) {
        throw ConfigError("eigenvalues", "spectrum already set via spiked");
      }
      cfg.eigenvalues = internal::parse_double_list("eigenvalues", value);
    } else if (key == "spiked") {
      if (!cfg.eigenvalues.empty()) {
        throw ConfigError("spiked", "spectrum already set via eigenvalues");
      }
      const std::vector<std::string> parts = internal::split(value, ',');
      if (parts.size() != 3) {
        throw ConfigError("spiked", "expected l1,l2,d");
      }
      const double l1 = internal::parse_double_field("spiked", parts[0]);
      const double l2 = internal::parse_double_field("spiked", parts[1]);
      const std::int64_t d = internal::parse_int_field("spiked", parts[2]);
      if (d < 2) throw ConfigError("spiked", "d must be >= 2");
      cfg.eigenvalues.assign(static_cast<std::size_t>(d), l2);
      cfg.eigenvalues[0] = l1;
    } else if (key == "n") {
      cfg.n = internal::parse_int_list("n", value);
    } else if (key == "epsilon") {
      cfg.epsilon = internal::parse_double_list("epsilon", value);
    } else if (key == "delta") {
      cfg.delta = internal::parse_double_list("delta", value);
    } else if (key == "sigma_noise_sq") {
      cfg.sigma_noise_sq =
          internal::parse_double_list("sigma_noise_sq", value);
    } else if (key == "algorithms") {
      for (const std::string& piece : internal::split(value, ',')) {
        const std::string name = internal::trim(piece);
        const std::optional<Algorithm> a = parse_algorithm(name);
        if (!a) throw ConfigError("algorithms", "unknown: '" + name + "'");
        cfg.algorithms.push_back(*a);
      }
    } else if (key == "trials") {
      cfg.trials = internal::parse_int_field("trials", value);
    } else if (key == "master_seed") {
      cfg.master_seed = internal::parse_uint_field("master_seed", value);
    } else if (key == "alpha") {
      cfg.alpha = internal::parse_double_field("alpha", value);
    } else if (key == "c1") {
      cfg.c1 = internal::parse_double_field("c1", value);
    } else if (key == "c2") {
      cfg.c2 = internal::parse_double_field("c2", value);
    } else if (key == "B") {
      cfg.dppca_batch = internal::parse_int_field("B", value);
    } else if (key == "record_runtime") {
      if (value == "true" || value == "1") {
        cfg.record_runtime = true;
      } else if (value == "false" || value == "0") {
        cfg.record_runtime = false;
      } else {
        throw ConfigError("record_runtime", "expected true or false");
      }
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
  cfg.validate();
  return cfg;
}

// One cell of the sweep.  sigma_noise_sq is NaN for the gaussian model.
struct RowSpec {
  Algorithm algorithm = Algorithm::kOja;
  std::int64_t n = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  double sigma_noise_sq = std::numeric_limits<double>::quiet_NaN();
  std::int64_t trial = 0;
};

// One CSV line.  NaN-valued doubles serialize as empty fields.
struct ResultRow {
  std::string algorithm;
  std::int64_t n = 0;
  std::int64_t d = 0;
  double epsilon = 0.0;
  double delta = 0.0;
  double sigma_noise_sq = std::numeric_limits<double>::quiet_NaN();
  std::int64_t trial = 0;
  std::uint64_t seed = 0;
  double sin_error = std::numeric_limits<double>::quiet_NaN();
  std::int64_t clipped_steps = 0;
  std::int64_t skipped_steps = 0;
  double lambda_hat_mean = std::numeric_limits<double>::quiet_NaN();
  double runtime_ms = 0.0;
  bool regime_valid = false;
};

namespace internal {

inline constexpr std::uint64_t kDataTag = 0xDA7A;

inline std::uint64_t double_key(double v) {
  return std::bit_cast<std::uint64_t>(v);
}

// Everything but the algorithm, so paired algorithms in one cell see the
// same dataset and differ only in their own coin flips.
inline std::uint64_t row_base_seed(std::uint64_t master, const RowSpec& s) {
  std::uint64_t key = mix_key(master, static_cast<std::uint64_t>(s.n));
  key = mix_key(key, double_key(s.epsilon));
  key = mix_key(key, double_key(s.delta));
  key = mix_key(key, double_key(s.sigma_noise_sq));
  key = mix_key(key, static_cast<std::uint64_t>(s.trial));
  return key;
}

inline std::uint64_t algorithm_tag(Algorithm a) {
  return static_cast<std::uint64_t>(a) + 1;
}

inline LearningRateSchedule oja_style_schedule(const ModelParams& params,
                                               double alpha,
                                               std::int64_t horizon) {
  const double gain =
      alpha > 0.0 ? alpha
                  : std::max(1.0, std::log(static_cast<double>(horizon)));
  const double offset = std::min(oja_offset(params, gain, kRunnerZeta),
                                 static_cast<double>(horizon) / 5.0);
  return LearningRateSchedule{gain, offset, params.gap()};
}

inline double gradient_clip_bound(const ModelParams& params, std::int64_t n) {
  return clipping_threshold(params.lambda1, params.dim, params.tail_factor,
                            std::sqrt(params.directional_var), n, kRunnerZeta,
                            params.tail_exponent);
}

}  // namespace internal

// Runs a single cell and fills one row.  Uses only the config and the spec,
// so a manifest row can be reproduced without rerunning the sweep.
inline ResultRow run_row(const ExperimentConfig& cfg, const RowSpec& spec) {
  cfg.validate();
  const Eigen::Index d = cfg.effective_dim();
  const std::int64_t n = spec.n;
  const PrivacyBudget budget{spec.epsilon, spec.delta};

  const std::uint64_t base =
      internal::row_base_seed(cfg.master_seed, spec);
  const std::uint64_t data_seed = mix_key(base, internal::kDataTag);
  const std::uint64_t algo_seed =
      mix_key(base, internal::algorithm_tag(spec.algorithm));

  Dataset data;
  ModelParams params;
  UnitVector target = UnitVector::normalized(Vector::Unit(d, 0));
  if (cfg.model == "toy") {
    const Vector spike = internal::experiment_spike(d);
    data = sample_toy_dataset(spike, spec.sigma_noise_sq, n, data_seed);
    params = toy_model_params(spike, spec.sigma_noise_sq, std::max<std::int64_t>(n, 2));
    target = UnitVector::normalized(spike);
  } else {
    Vector evals(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      evals[i] = cfg.eigenvalues[static_cast<std::size_t>(i)];
    }
    const Matrix covariance = evals.asDiagonal();
    data = sample_gaussian_dataset(covariance, n, data_seed);
    params = gaussian_model_params(covariance, std::max<std::int64_t>(n, 2));
  }

  ResultRow row;
  row.algorithm = algorithm_name(spec.algorithm);
  row.n = n;
  row.d = static_cast<std::int64_t>(d);
  row.epsilon = spec.epsilon;
  row.delta = spec.delta;
  row.sigma_noise_sq = spec.sigma_noise_sq;
  row.trial = spec.trial;
  row.seed = algo_seed;

  const auto started = std::chrono::steady_clock::now();
  switch (spec.algorithm) {
    case Algorithm::kOja: {
      const LearningRateSchedule schedule =
          internal::oja_style_schedule(params, cfg.alpha, n);
      const UnitVector estimate = run_oja(data, schedule, algo_seed);
      row.sin_error = sin_distance(estimate, target);
      row.regime_valid = true;
      break;
    }
    case Algorithm::kPrivateOja: {
      const LearningRateSchedule schedule =
          internal::oja_style_schedule(params, cfg.alpha, n);
      const ClipConfig clip_cfg{internal::gradient_clip_bound(params, n),
                                noise_multiplier(n, budget).value};
      const PrivateOjaResult res =
          run_private_oja(data, budget, schedule, clip_cfg, algo_seed);
      row.sin_error = sin_distance(res.estimate, target);
      row.clipped_steps = res.report.clipped_steps;
      row.regime_valid = res.report.regime_valid;
      break;
    }
    case Algorithm::kMinibatch: {
      const double log_n = std::log(static_cast<double>(n));
      const std::int64_t steps = std::clamp<std::int64_t>(
          static_cast<std::int64_t>(log_n * log_n), 1, n);
      const LearningRateSchedule schedule =
          internal::oja_style_schedule(params, cfg.alpha, steps);
      const ClipConfig clip_cfg{internal::gradient_clip_bound(params, n),
                                minibatch_noise_multiplier(steps, budget)};
      const MinibatchOjaResult res = run_minibatch_clipped_oja(
          data, budget, steps, schedule, clip_cfg, algo_seed);
      row.sin_error = sin_distance(res.estimate, target);
      row.clipped_steps = res.clipped_samples;
      row.regime_valid = true;
      break;
    }
    case Algorithm::kDpPca: {
      DpPcaConfig dcfg;
      dcfg.budget = budget;
      dcfg.batch_size = cfg.dppca_batch > 0
                            ? cfg.dppca_batch
                            : std::max<std::int64_t>(n / 2, 4);
      dcfg.zeta = kRunnerZeta;
      dcfg.tail_factor = params.tail_factor;
      dcfg.tail_exponent = params.tail_exponent;
      dcfg.seed = algo_seed;
      const double c1 = cfg.c1;
      const double c2 = cfg.c2;
      const DpPcaResult res = run_dppca_with_rate(
          data, dcfg, [c1, c2](std::int64_t t) {
            return c1 / (c2 + static_cast<double>(t));
          });
      row.sin_error = sin_distance(res.estimate, target);
      std::int64_t truncated = 0;
      for (std::int64_t c : res.report.truncation_counts) truncated += c;
      row.clipped_steps = truncated;
      row.skipped_steps = res.report.skipped_steps();
      double sum = 0.0;
      std::int64_t finite = 0;
      for (double v : res.report.eigenvalue_estimates) {
        if (std::isfinite(v)) {
          sum += v;
          ++finite;
        }
      }
      if (finite > 0) row.lambda_hat_mean = sum / static_cast<double>(finite);
      row.regime_valid = dppca_regime_valid(params, n, budget);
      break;
    }
    case Algorithm::kBaseline: {
      const double bound =
          baseline_norm_bound(params.lambda1, d, n, kRunnerZeta);
      const BaselineResult res =
          gaussian_mechanism_pca(data, bound, budget, algo_seed);
      row.sin_error = sin_distance(res.estimate, target);
      row.clipped_steps = res.projected_samples;
      row.regime_valid = true;
      break;
    }
  }
  if (cfg.record_runtime) {
    row.runtime_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - started)
                         .count();
  }
  return row;
}

// The full sweep in deterministic order:
// n -> epsilon -> delta -> sigma_noise_sq -> algorithm -> trial.
inline std::vector<RowSpec> plan_rows(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::vector<double> sigmas =
      cfg.model == "toy"
          ? cfg.sigma_noise_sq
          : std::vector<double>{std::numeric_limits<double>::quiet_NaN()};
  std::vector<RowSpec> specs;
  for (std::int64_t n : cfg.n) {
    for (double eps : cfg.epsilon) {
      for (double dl : cfg.delta) {
        for (double s2 : sigmas) {
          for (Algorithm a : cfg.algorithms) {
            for (std::int64_t trial = 0; trial < cfg.trials; ++trial) {
              specs.push_back(RowSpec{a, n, eps, dl, s2, trial});
            }
          }
        }
      }
    }
  }
  return specs;
}

// Runs the sweep, optionally across threads.  Row order (and bytes, with
// record_runtime off) is independent of the thread count; the first row
// error in plan order is rethrown.
inline std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg,
                                             int threads = 1) {
  const std::vector<RowSpec> specs = plan_rows(cfg);
  std::vector<ResultRow> rows(specs.size());
  std::vector<std::exception_ptr> errors(specs.size());

  if (threads <= 1) {
    for (std::size_t i = 0; i < specs.size(); ++i) {
      try {
        rows[i] = run_row(cfg, specs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= specs.size()) return;
        try {
          rows[i] = run_row(cfg, specs[i]);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    const int count = std::min<int>(threads, static_cast<int>(specs.size()));
    pool.reserve(static_cast<std::size_t>(count));
    for (int t = 0; t < count; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  for (const std::exception_ptr& err : errors) {
    if (err) std::rethrow_exception(err);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CSV serialization.

namespace internal {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_csv_double(const std::string& field,
                               const std::string& text) {
  if (text.empty()) return std::numeric_limits<double>::quiet_NaN();
  return parse_double_field(field, text);
}

}  // namespace internal

inline constexpr char kCsvHeader[] =
    "algorithm,n,d,epsilon,delta,sigma_noise_sq,trial,seed,sin_error,"
    "clipped_steps,skipped_steps,lambda_hat_mean,runtime_ms,regime_valid";

inline std::string emit_csv(const std::vector<ResultRow>& rows) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const ResultRow& r : rows) {
    out += r.algorithm;
    out += ',';
    out += std::to_string(r.n);
    out += ',';
    out += std::to_string(r.d);
    out += ',';
    out += internal::format_double(r.epsilon);
    out += ',';
    out += internal::format_double(r.delta);
    out += ',';
    out += internal::format_double(r.sigma_noise_sq);
    out += ',';
    out += std::to_string(r.trial);
    out += ',';
    out += std::to_string(r.seed);
    out += ',';
    out += internal::format_double(r.sin_error);
    out += ',';
    out += std::to_string(r.clipped_steps);
    out += ',';
    out += std::to_string(r.skipped_steps);
    out += ',';
    out += internal::format_double(r.lambda_hat_mean);
    out += ',';
    out += internal::format_double(r.runtime_ms);
    out += ',';
    out += r.regime_valid ? '1' : '0';
    out += '\n';
  }
  return out;
}

inline std::vector<ResultRow> parse_csv(const std::string& text) {
  std::vector<std::string> lines = internal::split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty() || internal::trim(lines[0]) != kCsvHeader) {
    throw std::invalid_argument("parse_csv: missing or mismatched header");
  }
  std::vector<ResultRow> rows;
  rows.reserve(lines.size() - 1);
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::string line =
        lines[li].ends_with("\r") ? lines[li].substr(0, lines[li].size() - 1)
                                  : lines[li];
    if (internal::trim(line).empty()) continue;
    const std::vector<std::string> f = internal::split(line, ',');
    if (f.size() != 14) {
      throw std::invalid_argument("parse_csv: line " + std::to_string(li + 1) +
                                  " has " + std::to_string(f.size()) +
                                  " fields, expected 14");
    }
    ResultRow r;
    r.algorithm = f[0];
    r.n = internal::parse_int_field("n", f[1]);
    r.d = internal::parse_int_field("d", f[2]);
    r.epsilon = internal::parse_csv_double("epsilon", f[3]);
    r.delta = internal::parse_csv_double("delta", f[4]);
    r.sigma_noise_sq = internal::parse_csv_double("sigma_noise_sq", f[5]);
    r.trial = internal::parse_int_field("trial", f[6]);
    r.seed = internal::parse_uint_field("seed", f[7]);
    r.sin_error = internal::parse_csv_double("sin_error", f[8]);
    r.clipped_steps = internal::parse_int_field("clipped_steps", f[9]);
    r.skipped_steps = internal::parse_int_field("skipped_steps", f[10]);
    r.lambda_hat_mean = internal::parse_csv_double("lambda_hat_mean", f[11]);
    r.runtime_ms = internal::parse_csv_double("runtime_ms", f[12]);
    const std::string rv = internal::trim(f[13]);
    if (rv != "0" && rv != "1") {
      throw std::invalid_argument("parse_csv: regime_valid must be 0 or 1");
    }
    r.regime_valid = rv == "1";
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Manifest: enough to reproduce any row via run_row without the sweep.

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["model"] = cfg.model;
  j["dim"] = static_cast<std::int64_t>(cfg.effective_dim());
  j["eigenvalues"] = cfg.eigenvalues;
  j["n"] = cfg.n;
  j["epsilon"] = cfg.epsilon;
  j["delta"] = cfg.delta;
  j["sigma_noise_sq"] = cfg.sigma_noise_sq;
  nlohmann::json algos = nlohmann::json::array();
  for (Algorithm a : cfg.algorithms) algos.push_back(algorithm_name(a));
  j["algorithms"] = algos;
  j["trials"] = cfg.trials;
  j["master_seed"] = cfg.master_seed;
  j["alpha"] = cfg.alpha;
  j["c1"] = cfg.c1;
  j["c2"] = cfg.c2;
  j["B"] = cfg.dppca_batch;
  j["record_runtime"] = cfg.record_runtime;
  return j;
}

inline std::string emit_manifest(const ExperimentConfig& cfg,
                                 const std::vector<ResultRow>& rows) {
  nlohmann::json j;
  j["library_version"] = kLibraryVersion;
  j["config"] = config_to_json(cfg);
  nlohmann::json out_rows = nlohmann::json::array();
  for (const ResultRow& r : rows) {
    nlohmann::json jr;
    jr["algorithm"] = r.algorithm;
    jr["n"] = r.n;
    jr["epsilon"] = r.epsilon;
    jr["delta"] = r.delta;
    if (std::isnan(r.sigma_noise_sq)) {
      jr["sigma_noise_sq"] = nullptr;
    } else {
      jr["sigma_noise_sq"] = r.sigma_noise_sq;
    }
    jr["trial"] = r.trial;
    jr["seed"] = r.seed;
    out_rows.push_back(std::move(jr));
  }
  j["rows"] = std::move(out_rows);
  return j.dump(2) + "\n";
}

struct ManifestRow {
  RowSpec spec;
  std::uint64_t seed = 0;
};

struct Manifest {
  std::string library_version;
  std::vector<ManifestRow> rows;
};

inline Manifest parse_manifest(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  Manifest m;
  m.library_version = j.at("library_version").get<std::string>();
  for (const nlohmann::json& jr : j.at("rows")) {
    ManifestRow row;
    const std::string name = jr.at("algorithm").get<std::string>();
    const std::optional<Algorithm> a = parse_algorithm(name);
    if (!a) {
      throw std::invalid_argument("parse_manifest: unknown algorithm '" +
                                  name + "'");
    }
    row.spec.algorithm = *a;
    row.spec.n = jr.at("n").get<std::int64_t>();
    row.spec.epsilon = jr.at("epsilon").get<double>();
    row.spec.delta = jr.at("delta").get<double>();
    const nlohmann::json& s2 = jr.at("sigma_noise_sq");
    row.spec.sigma_noise_sq =
        s2.is_null() ? std::numeric_limits<double>::quiet_NaN()
                     : s2.get<double>();
    row.spec.trial = jr.at("trial").get<std::int64_t>();
    row.seed = jr.at("seed").get<std::uint64_t>();
    m.rows.push_back(std::move(row));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Summaries: median sin_error per group, groups in first-appearance order.

struct SummaryRow {
  std::string group;
  std::int64_t rows = 0;
  double median_sin_error = std::numeric_limits<double>::quiet_NaN();
};

inline std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows,
                                         const std::vector<std::string>& by) {
  const std::vector<std::string> known = {
      "algorithm", "n", "d", "epsilon", "delta", "sigma_noise_sq"};
  for (const std::string& axis : by) {
    if (std::find(known.begin(), known.end(), axis) == known.end()) {
      throw std::invalid_argument("summarize: unknown axis '" + axis + "'");
    }
  }
  auto group_of = [&](const ResultRow& r) {
    std::string key;
    for (const std::string& axis : by) {
      if (!key.empty()) key += ',';
      key += axis;
      key += '=';
      if (axis == "algorithm") {
        key += r.algorithm;
      } else if (axis == "n") {
        key += std::to_string(r.n);
      } else if (axis == "d") {
        key += std::to_string(r.d);
      } else if (axis == "epsilon") {
        key += internal::format_double(r.epsilon);
      } else if (axis == "delta") {
        key += internal::format_double(r.delta);
      } else {
        key += internal::format_double(r.sigma_noise_sq);
      }
    }
    return key;
  };

  std::vector<std::string> order;
  std::vector<std::vector<double>> errors;
  for (const ResultRow& r : rows) {
    const std::string key = group_of(r);
    auto it = std::find(order.begin(), order.end(), key);
    std::size_t idx;
    if (it == order.end()) {
      order.push_back(key);
      errors.emplace_back();
      idx = order.size() - 1;
    } else {
      idx = static_cast<std::size_t>(it - order.begin());
    }
    errors[idx].push_back(r.sin_error);
  }

  std::vector<SummaryRow> out;
  out.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::vector<double>& v = errors[i];
    std::sort(v.begin(), v.end());
    SummaryRow s;
    s.group = order[i];
    s.rows = static_cast<std::int64_t>(v.size());
    const std::size_t m = v.size() / 2;
    s.median_sin_error =
        v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace dppca

#endif  // DPPCA_EXPERIMENT_HPP_
