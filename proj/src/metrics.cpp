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

#include "fedshap/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "fedshap/errors.hpp"

namespace fedshap {
namespace {

void require_same_length(const ContributionVector& a,
                         const ContributionVector& b) {
  if (a.size() != b.size()) {
    throw DimensionError("contribution vectors differ in length (" +
                         std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
  }
}

double norm(const ContributionVector& v) {
  double s = 0.0;
  for (double x : v.values) s += x * x;
  return std::sqrt(s);
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

double cosine_distance(const ContributionVector& truth,
                       const ContributionVector& est) {
  require_same_length(truth, est);
  const double nt = norm(truth);
  if (nt == 0.0) throw std::invalid_argument("cosine distance: zero truth vector");
  const double ne = norm(est);
  if (ne == 0.0) return 1.0;
  double dot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) dot += truth[i] * est[i];
  const double cosine = std::clamp(dot / (nt * ne), -1.0, 1.0);
  return std::max(0.0, 1.0 - cosine);
}

double euclidean_distance(const ContributionVector& truth,
                          const ContributionVector& est) {
  require_same_length(truth, est);
  double s = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = truth[i] - est[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double max_difference(const ContributionVector& truth,
                      const ContributionVector& est) {
  require_same_length(truth, est);
  double m = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    m = std::max(m, std::abs(truth[i] - est[i]));
  }
  return m;
}

ComparisonRow compare_to_truth(const ContributionVector& truth,
                               const EstimatorReport& report) {
  ComparisonRow row;
  row.estimator = report.estimator;
  row.cosine_distance = cosine_distance(truth, report.total);
  row.euclidean_distance = euclidean_distance(truth, report.total);
  row.max_difference = max_difference(truth, report.total);
  row.eval_count = report.eval_count;
  row.wall_time_s = report.wall_time_s;
  row.log10_time = std::log10(std::max(report.wall_time_s, 1e-9));
  return row;
}

nlohmann::json to_json(const ComparisonRow& row) {
  return nlohmann::json{{"estimator", row.estimator},
                        {"cosine_distance", row.cosine_distance},
                        {"euclidean_distance", row.euclidean_distance},
                        {"max_difference", row.max_difference},
                        {"eval_count", row.eval_count},
                        {"wall_time_s", row.wall_time_s},
                        {"log10_time", row.log10_time}};
}

ComparisonRow row_from_json(const nlohmann::json& j) {
  ComparisonRow row;
  row.estimator = j.at("estimator").get<std::string>();
  row.cosine_distance = j.at("cosine_distance").get<double>();
  row.euclidean_distance = j.at("euclidean_distance").get<double>();
  row.max_difference = j.at("max_difference").get<double>();
  row.eval_count = j.at("eval_count").get<std::uint64_t>();
  row.wall_time_s = j.at("wall_time_s").get<double>();
  row.log10_time = j.at("log10_time").get<double>();
  return row;
}

nlohmann::json to_json(const EstimatorReport& report) {
  nlohmann::json per_round = nlohmann::json::array();
  for (const auto& r : report.per_round) per_round.push_back(r.values);
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& s : report.rounds) {
    rounds.push_back({{"round", s.round},
                      {"base_utility", s.base_utility},
                      {"full_utility", s.full_utility},
                      {"permutations", s.permutations},
                      {"converged", s.converged},
                      {"truncated", s.truncated},
                      {"evals", s.evals},
                      {"reconstructions", s.reconstructions}});
  }
  return nlohmann::json{{"estimator", report.estimator},
                        {"total", report.total.values},
                        {"per_round", per_round},
                        {"rounds", rounds},
                        {"converged_rounds", report.converged_rounds},
                        {"eval_count", report.eval_count},
                        {"reconstructions", report.reconstructions},
                        {"wall_time_s", report.wall_time_s}};
}

ReportDocument build_report(std::span<const ComparisonRow> rows,
                            const ReportMetadata& metadata) {
  if (rows.empty()) throw std::invalid_argument("report needs at least one row");
  ReportDocument doc;
  std::ostringstream csv;
  csv << kCsvHeader << '\n';
  for (const auto& r : rows) {
    csv << r.estimator << ',' << format_double(r.cosine_distance) << ','
        << format_double(r.euclidean_distance) << ','
        << format_double(r.max_difference) << ',' << r.eval_count << ','
        << format_double(r.wall_time_s) << ',' << format_double(r.log10_time)
        << '\n';
  }
  doc.csv = csv.str();

  nlohmann::json json_rows = nlohmann::json::array();
  for (const auto& r : rows) json_rows.push_back(to_json(r));
  nlohmann::json estimators = nlohmann::json::array();
  for (const auto& rep : metadata.reports) estimators.push_back(to_json(rep));
  doc.json = nlohmann::json{{"schema_version", kReportSchemaVersion},
                            {"scenario", metadata.scenario},
                            {"seed", metadata.seed},
                            {"truth_estimator", metadata.truth_estimator},
                            {"truth", metadata.truth.values},
                            {"config", metadata.config},
                            {"rows", json_rows},
                            {"estimators", estimators}};
  return doc;
}

std::filesystem::path write_report(const ReportDocument& doc,
                                   const std::filesystem::path& dir,
                                   const std::string& stem) {
  std::filesystem::create_directories(dir);
  const auto json_path = dir / (stem + ".json");
  write_file(dir / (stem + ".csv"), doc.csv);
  write_file(json_path, doc.json.dump(2) + "\n");
  return json_path;
}

std::vector<SummaryRow> merge_reports(std::span<const nlohmann::json> reports) {
  if (reports.empty()) throw std::invalid_argument("no reports to merge");
  const int first_version = reports.front().at("schema_version").get<int>();
  std::vector<SummaryRow> out;
  for (const auto& rep : reports) {
    const int version = rep.at("schema_version").get<int>();
    if (version != first_version) {
      throw VersionMismatchError("report schema versions differ: " +
                                 std::to_string(first_version) + " vs " +
                                 std::to_string(version));
    }
    if (version != kReportSchemaVersion) {
      throw VersionMismatchError("report schema version " + std::to_string(version) +
                                 " is not supported (expected " +
                                 std::to_string(kReportSchemaVersion) + ")");
    }
    for (const auto& r : rep.at("rows")) {
      out.push_back(SummaryRow{rep.at("scenario").get<std::string>(),
                               rep.at("seed").get<std::uint64_t>(), row_from_json(r)});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const SummaryRow& a, const SummaryRow& b) {
    return std::tie(a.scenario, a.row.estimator, a.seed) <
           std::tie(b.scenario, b.row.estimator, b.seed);
  });
  return out;
}

std::string format_summary(std::span<const SummaryRow> rows) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-22s %-10s %8s %12s %12s %12s %10s %10s\n",
                "scenario", "estimator", "seed", "cosine", "euclidean", "max_diff",
                "evals", "log10_t");
  out << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line),
                  "%-22s %-10s %8llu %12.6g %12.6g %12.6g %10llu %10.3f\n",
                  r.scenario.c_str(), r.row.estimator.c_str(),
                  static_cast<unsigned long long>(r.seed), r.row.cosine_distance,
                  r.row.euclidean_distance, r.row.max_difference,
                  static_cast<unsigned long long>(r.row.eval_count),
                  r.row.log10_time);
    out << line;
  }
  return out.str();
}

}  // namespace fedshap
