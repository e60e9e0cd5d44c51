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

// Participant-contribution estimators over a federated training run.
//
// Gradient-based estimators (GTG family, MR, TMR) value coalitions by
// re-aggregating the stored per-round updates; retraining estimators
// (Original Shapley, TMC) train a fresh model on the coalition's pooled data.
// Every estimator reports the exact number of distinct utility evaluations.

#ifndef FEDSHAP_ESTIMATORS_HPP
#define FEDSHAP_ESTIMATORS_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fedshap/federation.hpp"
#include "fedshap/game.hpp"
#include "fedshap/model.hpp"

namespace fedshap {

enum class SamplingMode {
  kGuided,       // round-robin prefix, random suffix
  kUniform,      // uniformly random permutations
  kEnumeration,  // every permutation once; exact, stopping rule not used
};

std::string_view to_string(SamplingMode mode);
SamplingMode parse_sampling_mode(std::string_view name);

struct GtgConfig {
  double eps_between = 0.001;
  double eps_within = 0.001;
  std::size_t guided_prefix = 1;
  std::size_t max_perms_per_round = 500;
  std::size_t window = ConvergenceWindow::kDefaultCapacity;
  double threshold = ConvergenceWindow::kDefaultThreshold;
  std::size_t min_samples = ConvergenceWindow::kDefaultCapacity + 1;
  SamplingMode sampling = SamplingMode::kGuided;
  std::uint64_t seed = 0;

  void validate(std::size_t n) const;
  ConvergenceWindow make_window() const {
    return ConvergenceWindow(window, threshold, min_samples);
  }
};

// Iteration k (1-based) of guided sampling: the first m positions hold the
// ((k-1) mod P(n,m))-th m-permutation of 0..n-1 in lexicographic order; the
// remaining players follow in uniformly random order.
Permutation guided_permutation(std::size_t k, std::size_t n, std::size_t m,
                               std::mt19937_64& rng);

class GuidedSampler final : public PermutationSampler {
 public:
  GuidedSampler(std::size_t n, std::size_t prefix, std::uint64_t seed);
  std::optional<Permutation> next() override;

 private:
  std::size_t n_;
  std::size_t prefix_;
  std::size_t k_ = 0;
  std::mt19937_64 rng_;
};

// Utility game of one training round: V(empty) is the round's base model,
// V(all) the aggregated model, anything else a reconstructed sub-model.
class RoundGame {
 public:
  RoundGame(const GradientLog& log, std::size_t round,
            const LabeledDataset& test);
  RoundGame(RoundRecord record, std::vector<std::uint64_t> weights,
            const LabeledDataset& test);

  RoundGame(const RoundGame&) = delete;
  RoundGame& operator=(const RoundGame&) = delete;

  std::size_t round() const { return record_.round; }
  std::size_t players() const { return weights_.size(); }
  double base_utility() { return game_.utility(Coalition()); }
  double full_utility() { return game_.utility(Coalition::Full(players())); }
  CoalitionGame& game() { return game_; }
  std::uint64_t eval_count() const { return game_.eval_count(); }
  std::uint64_t reconstructions() const { return reconstructions_; }

 private:
  double utility(Coalition c);

  RoundRecord record_;
  std::vector<std::uint64_t> weights_;
  const LabeledDataset* test_;
  std::uint64_t reconstructions_ = 0;
  CoalitionGame game_;
};

struct RoundStats {
  std::size_t round = 0;
  double base_utility = 0.0;
  double full_utility = 0.0;
  std::size_t permutations = 0;
  bool converged = false;
  bool truncated = false;  // skipped by the between-round rule
  std::uint64_t evals = 0;
  std::uint64_t reconstructions = 0;
};

struct RoundOutcome {
  ContributionVector values;
  RoundStats stats;
};

struct EstimatorReport {
  std::string estimator;
  std::vector<ContributionVector> per_round;
  ContributionVector total;
  std::uint64_t eval_count = 0;
  std::uint64_t reconstructions = 0;
  double wall_time_s = 0.0;
  std::vector<bool> converged_rounds;
  std::vector<RoundStats> rounds;
};

RoundOutcome gtg_round(RoundGame& game, const GtgConfig& cfg,
                       std::uint64_t round_seed);

EstimatorReport gtg_eval(const GradientLog& log, const LabeledDataset& test,
                         const GtgConfig& cfg);
// Within-round truncation only, uniform sampling.
EstimatorReport gtg_ti(const GradientLog& log, const LabeledDataset& test,
                       GtgConfig cfg);
// Both truncations, uniform sampling.
EstimatorReport gtg_tib(const GradientLog& log, const LabeledDataset& test,
                        GtgConfig cfg);
// One game from the initial to the final model over updates summed across all
// rounds; within-round truncation, uniform sampling.
EstimatorReport gtg_oti(const GradientLog& log, const LabeledDataset& test,
                        GtgConfig cfg);

EstimatorReport mr_eval(const GradientLog& log, const LabeledDataset& test);

struct TmrConfig {
  double decay = 0.9;
  double round_threshold = 0.01;
};

EstimatorReport tmr_eval(const GradientLog& log, const LabeledDataset& test,
                         const TmrConfig& cfg);

// How the retraining baselines rebuild a coalition's model from scratch:
// centralized training from the federation's initial model on the pooled
// coalition data, for rounds * local_epochs epochs.
struct RetrainSetup {
  std::span<const Participant> participants;
  ModelArchitecture arch;
  TrainConfig train;
  std::size_t rounds = 1;
  std::uint64_t init_seed = 0;
};

inline constexpr std::size_t kMaxRetrainPlayers = 10;

EstimatorReport original_shapley_eval(const RetrainSetup& setup,
                                      const LabeledDataset& test);

struct TmcConfig {
  double eps_within = 0.001;
  std::size_t max_perms = 500;
  std::size_t window = ConvergenceWindow::kDefaultCapacity;
  double threshold = ConvergenceWindow::kDefaultThreshold;
  std::size_t min_samples = ConvergenceWindow::kDefaultCapacity + 1;
  SamplingMode sampling = SamplingMode::kUniform;
  std::uint64_t seed = 0;
};

EstimatorReport tmc_shapley_eval(const RetrainSetup& setup,
                                 const LabeledDataset& test,
                                 const TmcConfig& cfg);

// v_N - v_0 for every round.
std::vector<double> round_gains(const GradientLog& log,
                                const LabeledDataset& test);

// Mean marginal utility gained at each permutation position, averaged over
// `perms_per_round` uniform permutations of every round's game.
std::vector<double> position_marginal_profile(const GradientLog& log,
                                              const LabeledDataset& test,
                                              std::size_t perms_per_round,
                                              std::uint64_t seed);

}  // namespace fedshap

#endif  // FEDSHAP_ESTIMATORS_HPP
