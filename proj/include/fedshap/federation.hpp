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

// FedAvg simulation with full participation, and the per-round gradient log
// that sub-model reconstruction replays.

#ifndef FEDSHAP_FEDERATION_HPP
#define FEDSHAP_FEDERATION_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "fedshap/game.hpp"
#include "fedshap/model.hpp"

namespace fedshap {

struct Participant {
  std::size_t id = 0;
  LabeledDataset dataset;
  std::uint64_t seed = 0;  // local-training seed stream

  std::uint64_t weight() const { return dataset.rows(); }
};

// Participants with ids 0..n-1 and seeds derived from `master_seed`.
std::vector<Participant> make_participants(std::vector<LabeledDataset> datasets,
                                           std::uint64_t master_seed);

struct RoundRecord {
  std::size_t round = 0;
  ParameterVector base_model;
  std::vector<ParameterVector> updates;  // indexed by participant id
  ParameterVector aggregated;

  friend bool operator==(const RoundRecord&, const RoundRecord&) = default;
};

struct GradientLog {
  ModelArchitecture architecture;
  std::vector<std::uint64_t> participant_weights;
  std::vector<RoundRecord> rounds;

  std::size_t participants() const { return participant_weights.size(); }
  std::size_t total_rounds() const { return rounds.size(); }
  const ParameterVector& initial_model() const;
  const ParameterVector& final_model() const;

  // Structural checks: contiguous rounds, full update sets, chain property.
  void validate() const;

  friend bool operator==(const GradientLog&, const GradientLog&) = default;
};

// base + sum_{i in members} (w_i / sum_{j in members} w_j) * updates[i],
// accumulated in float64 in ascending id order.
ParameterVector fedavg_aggregate(const ParameterVector& base,
                                 std::span<const ParameterVector> updates,
                                 std::span<const std::uint64_t> weights,
                                 Coalition members);

ParameterVector fedavg_aggregate(
    const ParameterVector& base,
    const std::map<std::size_t, ParameterVector>& updates,
    const std::map<std::size_t, std::uint64_t>& weights);

// Sub-model a coalition would have produced in this round. The coalition must
// be non-empty; the empty coalition corresponds to the round's base model.
ParameterVector reconstruct_submodel(const RoundRecord& round,
                                     Coalition coalition,
                                     std::span<const std::uint64_t> weights);

GradientLog run_federation(std::span<const Participant> participants,
                           const ModelArchitecture& arch,
                           const TrainConfig& cfg, std::size_t rounds,
                           std::uint64_t init_seed);

inline constexpr std::uint16_t kLogFormatVersion = 1;

std::vector<std::uint8_t> encode_log(const GradientLog& log);
GradientLog decode_log(std::span<const std::uint8_t> bytes);

void save_log(const GradientLog& log, const std::filesystem::path& path);
GradientLog load_log(const std::filesystem::path& path);

}  // namespace fedshap

#endif  // FEDSHAP_FEDERATION_HPP
