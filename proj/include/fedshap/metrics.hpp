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

#ifndef FEDSHAP_METRICS_HPP
#define FEDSHAP_METRICS_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fedshap/estimators.hpp"
#include "fedshap/game.hpp"
#include "json.hpp"

namespace fedshap {

// 1 - cos(truth, est). A zero estimate counts as orthogonal (distance 1).
double cosine_distance(const ContributionVector& truth,
                       const ContributionVector& est);
double euclidean_distance(const ContributionVector& truth,
                          const ContributionVector& est);
double max_difference(const ContributionVector& truth,
                      const ContributionVector& est);

struct ComparisonRow {
  std::string estimator;
  double cosine_distance = 0.0;
  double euclidean_distance = 0.0;
  double max_difference = 0.0;
  std::uint64_t eval_count = 0;
  double wall_time_s = 0.0;
  double log10_time = 0.0;
};

ComparisonRow compare_to_truth(const ContributionVector& truth,
                               const EstimatorReport& report);

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kCsvHeader =
    "estimator,cosine_distance,euclidean_distance,max_difference,eval_count,"
    "wall_time_s,log10_time";

struct ReportMetadata {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string truth_estimator;
  ContributionVector truth;
  nlohmann::json config = nlohmann::json::object();
  std::vector<EstimatorReport> reports;  // trajectories and convergence traces
};

struct ReportDocument {
  std::string csv;
  nlohmann::json json;
};

ReportDocument build_report(std::span<const ComparisonRow> rows,
                            const ReportMetadata& metadata);

// Writes <dir>/<stem>.csv and <dir>/<stem>.json; returns the JSON path.
std::filesystem::path write_report(const ReportDocument& doc,
                                   const std::filesystem::path& dir,
                                   const std::string& stem);

nlohmann::json to_json(const EstimatorReport& report);
nlohmann::json to_json(const ComparisonRow& row);
ComparisonRow row_from_json(const nlohmann::json& j);

struct SummaryRow {
  std::string scenario;
  std::uint64_t seed = 0;
  ComparisonRow row;
};

// Rows of all reports ordered by (scenario, estimator, seed). All reports
// must share one schema version.
std::vector<SummaryRow> merge_reports(std::span<const nlohmann::json> reports);
std::string format_summary(std::span<const SummaryRow> rows);

}  // namespace fedshap

#endif  // FEDSHAP_METRICS_HPP
