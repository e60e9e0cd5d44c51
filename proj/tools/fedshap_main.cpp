// Copyright 2026 The fedshap Authors
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

// fedshap: simulate federations, estimate participant contributions, and
// compare estimators against ground truth.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime/data error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fedshap/errors.hpp"
#include "fedshap/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

std::filesystem::path resolve_out_dir(const std::string& flag,
                                      const fedshap::ExperimentConfig& cfg) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(fedshap::kOutputDirEnv); env && *env) return env;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  return "out";
}

fedshap::ExperimentConfig load(const std::string& path,
                               const std::optional<std::uint64_t>& seed) {
  auto cfg = fedshap::load_config(path);
  if (seed) {
    cfg.seed = *seed;
    cfg.scenario.seed = fedshap::derive_seeds(cfg.seed).scenario;
  }
  return cfg;
}

std::string format_vector(const std::vector<double>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v[i]);
    out += buf;
  }
  return out + "]";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated-learning contribution evaluation with Shapley values"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  bool print_config = false;
  bool quiet = false;
  app.add_option("--seed", seed, "Override the master seed");
  app.add_flag("--print-config", print_config,
               "Print the normalized configuration and exit");
  app.add_flag("--quiet", quiet, "Suppress informational output");

  std::string config_path;
  std::string out_dir;
  auto* simulate = app.add_subcommand("simulate", "Run a federation and store its gradient log");
  simulate->add_option("--config", config_path, "Experiment config (JSON)")->required();
  simulate->add_option("--out", out_dir, "Output directory");

  std::string log_path;
  std::string estimator;
  std::string params_path;
  auto* evaluate = app.add_subcommand("evaluate", "Run one estimator on a stored log");
  evaluate->add_option("--log", log_path, "Gradient log file")->required();
  evaluate->add_option("--estimator", estimator, "Estimator name")->required();
  evaluate->add_option("--params", params_path, "Estimator parameters (JSON object)");

  auto* compare = app.add_subcommand("compare", "Compare estimators against ground truth");
  compare->add_option("--config", config_path, "Experiment config (JSON)")->required();
  compare->add_option("--out", out_dir, "Output directory");

  std::vector<std::string> report_paths;
  auto* report = app.add_subcommand("report", "Merge comparison reports into one table");
  report->add_option("paths", report_paths, "Report JSON files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (simulate->parsed() || compare->parsed()) {
      auto cfg = load(config_path, seed);
      if (print_config) {
        std::cout << fedshap::to_json(cfg).dump(2) << '\n';
        return kExitOk;
      }
      const auto dir = resolve_out_dir(out_dir, cfg);
      if (simulate->parsed()) {
        const auto res = fedshap::cmd_simulate(cfg, dir);
        if (!quiet) {
          std::cout << "log: " << res.log_path.string() << '\n'
                    << "final_accuracy: " << res.final_accuracy << '\n';
        }
      } else {
        const auto res = fedshap::cmd_compare(cfg, dir);
        if (!quiet) {
          std::cout << "csv: " << res.csv_path.string() << '\n'
                    << "json: " << res.json_path.string() << '\n';
          for (const auto& row : res.rows) {
            std::cout << row.estimator << ": cosine=" << row.cosine_distance
                      << " euclidean=" << row.euclidean_distance
                      << " max=" << row.max_difference << " evals=" << row.eval_count
                      << '\n';
          }
        }
      }
    } else if (evaluate->parsed()) {
      nlohmann::json params = nlohmann::json::object();
      if (!params_path.empty()) {
        std::ifstream in(params_path);
        if (!in) throw fedshap::ConfigError("cannot open " + params_path);
        try {
          params = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
          throw fedshap::ConfigError(params_path + ": " + e.what());
        }
      }
      const auto res = fedshap::cmd_evaluate(log_path, estimator, params);
      if (!quiet) {
        std::cout << "report: " << res.report_path.string() << '\n'
                  << "total: " << format_vector(res.report.total.values) << '\n'
                  << "eval_count: " << res.report.eval_count << '\n';
      }
    } else if (report->parsed()) {
      std::vector<std::filesystem::path> paths(report_paths.begin(), report_paths.end());
      std::cout << fedshap::cmd_report(paths);
    }
  } catch (const fedshap::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
