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

// Experiment configuration and the commands behind the fedshap CLI.
//
// A config is one JSON document:
//
//   {
//     "schema": 1,
//     "seed": 7,
//     "rounds": 10,
//     "data": {"source": "synthetic", "input_dim": 16, "separation": 1.0,
//              "spread": 1.0, "train_per_class": 100, "test_per_class": 10},
//     "scenario": {"kind": "same_dist_same_size", "n": 10, "skew": 0.8},
//     "model": {"hidden_dim": 0, "class_count": 10},
//     "train": {"local_epochs": 1, "batch_size": 16, "learning_rate": 0.1},
//     "ground_truth": "original",
//     "estimators": [{"name": "gtg", "eps_between": 0.001}, {"name": "mr"}]
//   }
//
// Every component seed is derived from the master seed and a component label.

#ifndef FEDSHAP_EXPERIMENT_HPP
#define FEDSHAP_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedshap/estimators.hpp"
#include "fedshap/federation.hpp"
#include "fedshap/metrics.hpp"
#include "fedshap/model.hpp"
#include "fedshap/scenarios.hpp"
#include "json.hpp"

namespace fedshap {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr int kSidecarSchemaVersion = 1;
inline constexpr const char* kOutputDirEnv = "FEDSHAP_OUT_DIR";

struct DataConfig {
  std::string source = "synthetic";  // "synthetic" or "idx"
  std::uint32_t input_dim = 16;
  double separation = 1.5;
  double spread = 1.0;
  std::size_t train_per_class = 100;
  std::size_t test_per_class = 10;
  std::string train_images, train_labels, test_images, test_labels;
};

struct EstimatorSpec {
  std::string name;
  nlohmann::json params = nlohmann::json::object();
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::size_t rounds = 10;
  DataConfig data;
  ScenarioSpec scenario;
  ModelArchitecture model;
  TrainConfig train{1, 16, 0.01, 0};  // desk-scale defaults
  std::string ground_truth = "original";
  std::vector<EstimatorSpec> estimators;
  std::string output_dir;

  void validate() const;
};

const std::vector<std::string>& registered_estimators();

ExperimentConfig parse_config(const std::string& text,
                              const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

struct ComponentSeeds {
  std::uint64_t master = 0;
  std::uint64_t source = 0;
  std::uint64_t scenario = 0;
  std::uint64_t participants = 0;
  std::uint64_t init = 0;
  std::uint64_t training = 0;

  std::uint64_t estimator(const std::string& name) const;
};
ComponentSeeds derive_seeds(std::uint64_t master);

struct PreparedData {
  LabeledDataset pool;
  LabeledDataset test;
  std::vector<Participant> participants;
};

PreparedData prepare_data(const ExperimentConfig& cfg);
GradientLog simulate(const ExperimentConfig& cfg, const PreparedData& data);

GtgConfig gtg_config_from(const nlohmann::json& params, std::uint64_t seed);
TmrConfig tmr_config_from(const nlohmann::json& params);
TmcConfig tmc_config_from(const nlohmann::json& params, std::uint64_t seed);

EstimatorReport run_estimator(const EstimatorSpec& spec,
                              const ExperimentConfig& cfg,
                              const GradientLog& log, const PreparedData& data);

std::string experiment_stem(const ExperimentConfig& cfg);

struct SimulateResult {
  std::filesystem::path log_path;
  std::filesystem::path sidecar_path;
  double final_accuracy = 0.0;
};
SimulateResult cmd_simulate(const ExperimentConfig& cfg,
                            const std::filesystem::path& out_dir);

struct EvaluateResult {
  EstimatorReport report;
  std::filesystem::path report_path;
};
EvaluateResult cmd_evaluate(const std::filesystem::path& log_path,
                            const std::string& estimator,
                            const nlohmann::json& params);

struct CompareResult {
  std::vector<ComparisonRow> rows;
  std::filesystem::path csv_path;
  std::filesystem::path json_path;
};
CompareResult cmd_compare(const ExperimentConfig& cfg,
                          const std::filesystem::path& out_dir);

std::string cmd_report(std::span<const std::filesystem::path> report_paths);

}  // namespace fedshap

#endif  // FEDSHAP_EXPERIMENT_HPP
