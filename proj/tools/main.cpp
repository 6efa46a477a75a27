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
// Command-line experiment runner.  `run` executes the sweep described by a
// key=value config file and writes a CSV (plus an optional JSON manifest
// from which any row can be reproduced); `summarize` prints per-group
// median errors of a previously written CSV.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "dppca/experiment.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

constexpr char kConfigSchema[] = R"(Config file: one `key = value` per line; `#` starts a comment.

  model           toy | gaussian                        (default toy)
  dim             ambient dimension (toy model)
  eigenvalues     comma list, non-increasing            (gaussian model)
  spiked          l1,l2,d: spectrum {l1, l2 x (d-1)}    (gaussian shorthand)
  n               comma list of stream lengths          (required)
  epsilon         comma list of privacy budgets         (required)
  delta           comma list of privacy slacks          (required)
  sigma_noise_sq  comma list of residual variances      (toy model, required)
  algorithms      comma list: oja, private_oja, minibatch, dppca, baseline
  trials          repetitions per cell                  (default 1)
  master_seed     root of the deterministic seed tree   (default 1)
  alpha           Oja gain override; 0 = max(1, ln n)   (default 0)
  c1, c2          the DP-PCA step size c1/(c2 + t)      (default 30, 0)
  B               DP-PCA batch size; 0 = floor(n/2)     (default 0)
  record_runtime  true | false; false keeps repeated
                  runs byte-identical                   (default false)

Every combination of n x epsilon x delta x sigma_noise_sq runs every listed
algorithm for `trials` trials.  Within one combination and trial, all
algorithms see the same dataset; only their private coin flips differ.
)";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw dppca::ConfigError("file", "cannot open '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write '" + path + "'");
  }
  out << contents;
  if (!out) {
    throw std::runtime_error("short write to '" + path + "'");
  }
}

int run_command(const std::string& config_path, const std::string& out_path,
                const std::string& manifest_path, int threads,
                const std::string& algorithms_override) {
  dppca::ExperimentConfig cfg = dppca::parse_config(read_file(config_path));
  if (!algorithms_override.empty()) {
    cfg.algorithms.clear();
    for (const std::string& piece :
         dppca::internal::split(algorithms_override, ',')) {
      const std::string name = dppca::internal::trim(piece);
      const std::optional<dppca::Algorithm> a = dppca::parse_algorithm(name);
      if (!a) {
        throw dppca::ConfigError("algorithms", "unknown: '" + name + "'");
      }
      cfg.algorithms.push_back(*a);
    }
    cfg.validate();
  }
  const std::vector<dppca::ResultRow> rows =
      dppca::run_experiment(cfg, threads);
  write_file(out_path, dppca::emit_csv(rows));
  if (!manifest_path.empty()) {
    write_file(manifest_path, dppca::emit_manifest(cfg, rows));
  }
  std::cout << rows.size() << " rows -> " << out_path << "\n";
  return 0;
}

int summarize_command(const std::string& in_path, const std::string& by) {
  const std::vector<dppca::ResultRow> rows =
      dppca::parse_csv(read_file(in_path));
  std::vector<std::string> axes;
  for (const std::string& piece : dppca::internal::split(by, ',')) {
    axes.push_back(dppca::internal::trim(piece));
  }
  const std::vector<dppca::SummaryRow> summary =
      dppca::summarize(rows, axes);
  std::size_t width = 5;
  for (const dppca::SummaryRow& s : summary) {
    width = std::max(width, s.group.size());
  }
  std::printf("%-*s  %6s  %s\n", static_cast<int>(width), "group", "rows",
              "median_sin_error");
  for (const dppca::SummaryRow& s : summary) {
    std::printf("%-*s  %6lld  %.6g\n", static_cast<int>(width),
                s.group.c_str(), static_cast<long long>(s.rows),
                s.median_sin_error);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming differentially private PCA experiment runner"};
  app.require_subcommand(0, 1);

  bool print_schema = false;
  app.add_flag("--print-config-schema", print_schema,
               "Print the config file format and exit");

  std::string config_path;
  std::string out_path;
  std::string manifest_path;
  std::string algorithms_override;
  int threads = 1;
  CLI::App* run = app.add_subcommand("run", "Run the sweep in a config file");
  run->add_option("--config", config_path, "Config file (key = value lines)")
      ->required();
  run->add_option("--out", out_path, "Output CSV path")->required();
  run->add_option("--manifest", manifest_path,
                  "Also write a JSON manifest here");
  run->add_option("--threads", threads, "Worker threads (default 1)")
      ->check(CLI::PositiveNumber);
  run->add_option("--algorithms", algorithms_override,
                  "Run only these algorithms (comma list)");

  std::string in_path;
  std::string by = "algorithm";
  CLI::App* summarize =
      app.add_subcommand("summarize", "Median error per group of a CSV");
  summarize->add_option("--in", in_path, "CSV written by `run`")->required();
  summarize->add_option(
      "--by", by,
      "Comma list of grouping axes (algorithm, n, d, epsilon, delta, "
      "sigma_noise_sq)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (print_schema) {
      std::cout << kConfigSchema;
      return 0;
    }
    if (run->parsed()) {
      return run_command(config_path, out_path, manifest_path, threads,
                         algorithms_override);
    }
    if (summarize->parsed()) {
      return summarize_command(in_path, by);
    }
    std::cerr << app.help();
    return kExitUsage;
  } catch (const dppca::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
