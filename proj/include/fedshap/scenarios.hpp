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

// Synthetic 10-class data, the five participant data-silo layouts, and an
// IDX (MNIST-style) reader.

#ifndef FEDSHAP_SCENARIOS_HPP
#define FEDSHAP_SCENARIOS_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fedshap/model.hpp"

namespace fedshap {

// Gaussian class clusters around seeded random centers.
struct SyntheticSource {
  std::uint32_t class_count = 10;
  std::uint32_t input_dim = 16;
  double separation = 1.0;  // std-dev of the center coordinates
  double spread = 1.0;      // within-class std-dev
  std::uint64_t seed = 0;

  std::vector<std::vector<double>> class_means() const;
};

// (train pool, test set); both class-balanced, rows interleaved by class.
std::pair<LabeledDataset, LabeledDataset> generate_source(
    const SyntheticSource& source, std::size_t train_per_class,
    std::size_t test_per_class);

enum class ScenarioKind {
  kSameDistSameSize,
  kDiffDistSameSize,
  kSameDistDiffSize,
  kNoisyLabels,
  kNoisyFeatures,
};

std::string_view to_string(ScenarioKind kind);
ScenarioKind parse_scenario_kind(std::string_view name);

struct ScenarioParams {
  double skew = 0.8;                 // DiffDistSameSize: share of the pair's two classes
  std::vector<double> size_ratios;   // SameDistDiffSize; empty = default schedule
  std::vector<double> noise_rates;   // Noisy*; empty = default schedule
  std::size_t participant_size = 0;  // equal-size kinds; 0 = largest that fits
};

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::kSameDistSameSize;
  std::size_t n = 10;
  std::uint64_t seed = 0;
  ScenarioParams params;

  void validate() const;
  // Effective schedules (defaults resolved for this n).
  std::vector<double> size_ratios() const;
  std::vector<double> noise_rates() const;
};

// Default pairwise schedules: ratio weights 0.10, 0.10, 0.15, 0.15, ...
// normalized to sum to 1; noise rates 0, 0, 0.05, 0.05, 0.10, ...
std::vector<double> default_size_ratios(std::size_t n);
std::vector<double> default_noise_rates(std::size_t n);

struct Partition {
  std::vector<LabeledDataset> datasets;
  std::vector<std::vector<std::size_t>> source_rows;  // pool row per sample
};

Partition partition_with_provenance(const LabeledDataset& pool,
                                    const ScenarioSpec& spec,
                                    std::uint32_t class_count = 10);

std::vector<LabeledDataset> partition(const LabeledDataset& pool,
                                      const ScenarioSpec& spec,
                                      std::uint32_t class_count = 10);

// IDX image/label pair; pixels scaled to [0, 1].
LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path);

// Inverse of load_idx for fixtures; features are quantized to bytes.
void write_idx(const LabeledDataset& data, std::uint32_t image_rows,
               std::uint32_t image_cols,
               const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path);

}  // namespace fedshap

#endif  // FEDSHAP_SCENARIOS_HPP
