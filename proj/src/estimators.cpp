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

#include "fedshap/estimators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "fedshap/errors.hpp"
#include "fedshap/seed.hpp"

namespace fedshap {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t factorial(std::size_t n) {
  std::uint64_t f = 1;
  for (std::size_t i = 2; i <= n; ++i) f *= i;
  return f;
}

// n!/(n-m)!, saturating.
std::uint64_t arrangements(std::size_t n, std::size_t m) {
  std::uint64_t p = 1;
  for (std::size_t i = 0; i < m; ++i) {
    const std::uint64_t f = n - i;
    if (p > std::numeric_limits<std::uint64_t>::max() / f) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    p *= f;
  }
  return p;
}

std::unique_ptr<PermutationSampler> make_sampler(SamplingMode mode,
                                                 std::size_t n,
                                                 std::size_t prefix,
                                                 std::uint64_t seed) {
  switch (mode) {
    case SamplingMode::kGuided:
      return std::make_unique<GuidedSampler>(n, prefix, seed);
    case SamplingMode::kUniform:
      return std::make_unique<UniformSampler>(n, seed);
    case SamplingMode::kEnumeration:
      return std::make_unique<EnumerationSampler>(n);
  }
  throw std::logic_error("unhandled sampling mode");
}

std::size_t iteration_cap(SamplingMode mode, std::size_t n, std::size_t cap) {
  return mode == SamplingMode::kEnumeration ? factorial(n) : cap;
}

void finish_report(EstimatorReport& report, std::size_t n) {
  report.total = ContributionVector::Zeros(n);
  for (const auto& r : report.per_round) report.total += r;
  report.eval_count = 0;
  report.reconstructions = 0;
  report.converged_rounds.clear();
  for (const auto& s : report.rounds) {
    report.eval_count += s.evals;
    report.reconstructions += s.reconstructions;
    report.converged_rounds.push_back(s.converged);
  }
}

EstimatorReport run_gtg_rounds(const GradientLog& log,
                               const LabeledDataset& test,
                               const GtgConfig& cfg, std::string name) {
  cfg.validate(log.participants());
  const auto start = Clock::now();
  EstimatorReport report;
  report.estimator = std::move(name);
  for (std::size_t t = 0; t < log.total_rounds(); ++t) {
    RoundGame game(log, t, test);
    auto outcome = gtg_round(game, cfg, derive_seed(cfg.seed, std::uint64_t{t}));
    report.per_round.push_back(std::move(outcome.values));
    report.rounds.push_back(outcome.stats);
  }
  finish_report(report, log.participants());
  report.wall_time_s = seconds_since(start);
  return report;
}

RoundOutcome exact_round(RoundGame& game) {
  RoundOutcome out;
  out.values = exact_shapley(game.game());
  out.values.round = game.round();
  out.stats.round = game.round();
  out.stats.base_utility = game.base_utility();
  out.stats.full_utility = game.full_utility();
  out.stats.converged = true;
  out.stats.evals = game.eval_count();
  out.stats.reconstructions = game.reconstructions();
  return out;
}

class RetrainUtility {
 public:
  RetrainUtility(const RetrainSetup& setup, const LabeledDataset& test)
      : setup_(setup),
        test_(test),
        initial_(ParameterVector::RandomUniform(setup.arch, setup.init_seed)) {
    train_ = setup.train;
    train_.local_epochs =
        static_cast<std::uint32_t>(setup.rounds * setup.train.local_epochs);
    train_.seed = derive_seed(setup.train.seed, "retrain");
  }

  double operator()(Coalition c) const {
    if (c.empty()) return evaluate(initial_, test_);
    std::vector<const LabeledDataset*> parts;
    for (PlayerIndex i : c.members()) parts.push_back(&setup_.participants[i].dataset);
    const auto pooled = concatenate(parts, "coalition");
    return evaluate(train_local(initial_, pooled, train_), test_);
  }

 private:
  const RetrainSetup& setup_;
  const LabeledDataset& test_;
  ParameterVector initial_;
  TrainConfig train_;
};

void check_retrain_setup(const RetrainSetup& setup) {
  if (setup.participants.empty()) throw std::invalid_argument("no participants");
  if (setup.rounds < 1) throw std::invalid_argument("retraining needs >= 1 round");
}

}  // namespace

std::string_view to_string(SamplingMode mode) {
  switch (mode) {
    case SamplingMode::kGuided: return "guided";
    case SamplingMode::kUniform: return "uniform";
    case SamplingMode::kEnumeration: return "enumeration";
  }
  return "unknown";
}

SamplingMode parse_sampling_mode(std::string_view name) {
  for (auto mode : {SamplingMode::kGuided, SamplingMode::kUniform,
                    SamplingMode::kEnumeration}) {
    if (to_string(mode) == name) return mode;
  }
  throw ConfigError("unknown sampling mode '" + std::string(name) + "'");
}

void GtgConfig::validate(std::size_t n) const {
  if (!(eps_between >= 0.0) || !(eps_within >= 0.0)) {
    throw ConfigError("truncation thresholds must be >= 0");
  }
  if (sampling == SamplingMode::kGuided &&
      (guided_prefix < 1 || guided_prefix >= n)) {
    throw ConfigError("guided_prefix must satisfy 1 <= m < n");
  }
  if (sampling != SamplingMode::kEnumeration && max_perms_per_round < min_samples) {
    throw ConfigError("max_perms_per_round must be >= min_samples");
  }
  if (sampling == SamplingMode::kEnumeration && n > EnumerationSampler::kMaxPlayers) {
    throw CapacityError("enumeration sampling supports at most " +
                        std::to_string(EnumerationSampler::kMaxPlayers) +
                        " participants");
  }
}

Permutation guided_permutation(std::size_t k, std::size_t n, std::size_t m,
                               std::mt19937_64& rng) {
  if (k < 1) throw std::invalid_argument("guided iteration index is 1-based");
  if (m < 1 || m >= n) throw std::invalid_argument("prefix must satisfy 1 <= m < n");
  std::vector<PlayerIndex> pool(n);
  std::iota(pool.begin(), pool.end(), PlayerIndex{0});
  std::vector<PlayerIndex> order;
  order.reserve(n);

  std::uint64_t rank = (k - 1) % arrangements(n, m);
  for (std::size_t pos = 0; pos < m; ++pos) {
    const std::uint64_t block = arrangements(n - pos - 1, m - pos - 1);
    const auto idx = static_cast<std::size_t>(rank / block);
    rank %= block;
    order.push_back(pool[idx]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(idx));
  }
  std::shuffle(pool.begin(), pool.end(), rng);
  order.insert(order.end(), pool.begin(), pool.end());
  return Permutation(std::move(order));
}

GuidedSampler::GuidedSampler(std::size_t n, std::size_t prefix,
                             std::uint64_t seed)
    : n_(n), prefix_(prefix), rng_(seed) {
  if (prefix_ < 1 || prefix_ >= n_) {
    throw std::invalid_argument("prefix must satisfy 1 <= m < n");
  }
}

std::optional<Permutation> GuidedSampler::next() {
  return guided_permutation(++k_, n_, prefix_, rng_);
}

RoundGame::RoundGame(const GradientLog& log, std::size_t round,
                     const LabeledDataset& test)
    : RoundGame(log.rounds.at(round), log.participant_weights, test) {}

RoundGame::RoundGame(RoundRecord record, std::vector<std::uint64_t> weights,
                     const LabeledDataset& test)
    : record_(std::move(record)),
      weights_(std::move(weights)),
      test_(&test),
      game_(weights_.size(), [this](Coalition c) { return utility(c); }) {
  if (record_.updates.size() != weights_.size()) {
    throw DimensionError("round updates and weights differ in count");
  }
}

double RoundGame::utility(Coalition c) {
  if (c.empty()) return evaluate(record_.base_model, *test_);
  if (c == Coalition::Full(players())) return evaluate(record_.aggregated, *test_);
  ++reconstructions_;
  return evaluate(reconstruct_submodel(record_, c, weights_), *test_);
}

RoundOutcome gtg_round(RoundGame& game, const GtgConfig& cfg,
                       std::uint64_t round_seed) {
  const std::size_t n = game.players();
  cfg.validate(n);
  RoundOutcome out;
  out.stats.round = game.round();
  const double v0 = game.base_utility();
  const double vn = game.full_utility();
  out.stats.base_utility = v0;
  out.stats.full_utility = vn;

  if (std::abs(vn - v0) <= cfg.eps_between) {
    out.values = ContributionVector::Zeros(n);
    out.stats.truncated = true;
    out.stats.converged = true;
  } else {
    auto sampler = make_sampler(cfg.sampling, n, cfg.guided_prefix, round_seed);
    auto mc = mc_shapley(game.game(), *sampler, cfg.make_window(),
                         iteration_cap(cfg.sampling, n, cfg.max_perms_per_round),
                         WithinRoundTruncation{vn, cfg.eps_within});
    out.values = std::move(mc.estimate);
    out.stats.permutations = mc.iterations;
    out.stats.converged = mc.converged;
  }
  out.values.round = game.round();
  out.stats.evals = game.eval_count();
  out.stats.reconstructions = game.reconstructions();
  return out;
}

EstimatorReport gtg_eval(const GradientLog& log, const LabeledDataset& test,
                         const GtgConfig& cfg) {
  return run_gtg_rounds(log, test, cfg, "gtg");
}

EstimatorReport gtg_ti(const GradientLog& log, const LabeledDataset& test,
                       GtgConfig cfg) {
  cfg.eps_between = 0.0;
  cfg.sampling = SamplingMode::kUniform;
  return run_gtg_rounds(log, test, cfg, "gtg_ti");
}

EstimatorReport gtg_tib(const GradientLog& log, const LabeledDataset& test,
                        GtgConfig cfg) {
  cfg.sampling = SamplingMode::kUniform;
  return run_gtg_rounds(log, test, cfg, "gtg_tib");
}

EstimatorReport gtg_oti(const GradientLog& log, const LabeledDataset& test,
                        GtgConfig cfg) {
  cfg.eps_between = 0.0;
  cfg.sampling = SamplingMode::kUniform;
  const std::size_t n = log.participants();
  cfg.validate(n);
  const auto start = Clock::now();

  RoundRecord combined;
  combined.round = 0;
  combined.base_model = log.initial_model();
  for (std::size_t i = 0; i < n; ++i) {
    ParameterVector sum(log.architecture);
    for (const auto& r : log.rounds) {
      auto s = sum.data();
      auto u = r.updates[i].data();
      for (std::size_t k = 0; k < s.size(); ++k) s[k] += u[k];
    }
    combined.updates.push_back(std::move(sum));
  }
  combined.aggregated = reconstruct_submodel(combined, Coalition::Full(n),
                                             log.participant_weights);

  RoundGame game(std::move(combined), log.participant_weights, test);
  auto outcome = gtg_round(game, cfg, derive_seed(cfg.seed, std::uint64_t{0}));

  EstimatorReport report;
  report.estimator = "gtg_oti";
  report.per_round.push_back(std::move(outcome.values));
  report.rounds.push_back(outcome.stats);
  finish_report(report, n);
  report.wall_time_s = seconds_since(start);
  return report;
}

EstimatorReport mr_eval(const GradientLog& log, const LabeledDataset& test) {
  const std::size_t n = log.participants();
  if (n > kMaxExactPlayers) {
    throw CapacityError("MR supports at most " + std::to_string(kMaxExactPlayers) +
                        " participants, got " + std::to_string(n));
  }
  const auto start = Clock::now();
  EstimatorReport report;
  report.estimator = "mr";
  for (std::size_t t = 0; t < log.total_rounds(); ++t) {
    RoundGame game(log, t, test);
    auto outcome = exact_round(game);
    report.per_round.push_back(std::move(outcome.values));
    report.rounds.push_back(outcome.stats);
  }
  finish_report(report, n);
  report.wall_time_s = seconds_since(start);
  return report;
}

EstimatorReport tmr_eval(const GradientLog& log, const LabeledDataset& test,
                         const TmrConfig& cfg) {
  if (!(cfg.decay > 0.0 && cfg.decay <= 1.0)) {
    throw ConfigError("TMR decay must lie in (0, 1]");
  }
  const std::size_t n = log.participants();
  if (n > kMaxExactPlayers) {
    throw CapacityError("TMR supports at most " + std::to_string(kMaxExactPlayers) +
                        " participants, got " + std::to_string(n));
  }
  const auto start = Clock::now();
  EstimatorReport report;
  report.estimator = "tmr";
  for (std::size_t t = 0; t < log.total_rounds(); ++t) {
    const double weight = std::pow(cfg.decay, static_cast<double>(t));
    if (weight < cfg.round_threshold) {
      auto zeros = ContributionVector::Zeros(n);
      zeros.round = t;
      report.per_round.push_back(std::move(zeros));
      RoundStats skipped;
      skipped.round = t;
      skipped.truncated = true;
      skipped.converged = true;
      report.rounds.push_back(skipped);
      continue;
    }
    RoundGame game(log, t, test);
    auto outcome = exact_round(game);
    for (double& v : outcome.values.values) v *= weight;
    report.per_round.push_back(std::move(outcome.values));
    report.rounds.push_back(outcome.stats);
  }
  finish_report(report, n);
  report.wall_time_s = seconds_since(start);
  return report;
}

EstimatorReport original_shapley_eval(const RetrainSetup& setup,
                                      const LabeledDataset& test) {
  check_retrain_setup(setup);
  const std::size_t n = setup.participants.size();
  if (n > kMaxRetrainPlayers) {
    throw CapacityError("Original Shapley supports at most " +
                        std::to_string(kMaxRetrainPlayers) +
                        " participants, got " + std::to_string(n));
  }
  const auto start = Clock::now();
  RetrainUtility utility(setup, test);
  CoalitionGame game(n, [&utility](Coalition c) { return utility(c); });

  EstimatorReport report;
  report.estimator = "original";
  auto values = exact_shapley(game);
  RoundStats stats;
  stats.base_utility = game.utility(Coalition());
  stats.full_utility = game.utility(Coalition::Full(n));
  stats.converged = true;
  stats.evals = game.eval_count();
  stats.reconstructions = 0;
  report.per_round.push_back(std::move(values));
  report.rounds.push_back(stats);
  finish_report(report, n);
  report.wall_time_s = seconds_since(start);
  return report;
}

EstimatorReport tmc_shapley_eval(const RetrainSetup& setup,
                                 const LabeledDataset& test,
                                 const TmcConfig& cfg) {
  check_retrain_setup(setup);
  const std::size_t n = setup.participants.size();
  if (cfg.eps_within < 0.0) throw ConfigError("eps_within must be >= 0");
  const auto start = Clock::now();
  RetrainUtility utility(setup, test);
  CoalitionGame game(n, [&utility](Coalition c) { return utility(c); });

  const double v0 = game.utility(Coalition());
  const double vn = game.utility(Coalition::Full(n));
  auto sampler = make_sampler(cfg.sampling, n, 1, cfg.seed);
  auto mc = mc_shapley(game, *sampler,
                       ConvergenceWindow(cfg.window, cfg.threshold, cfg.min_samples),
                       iteration_cap(cfg.sampling, n, cfg.max_perms),
                       WithinRoundTruncation{vn, cfg.eps_within});

  EstimatorReport report;
  report.estimator = "tmc";
  RoundStats stats;
  stats.base_utility = v0;
  stats.full_utility = vn;
  stats.permutations = mc.iterations;
  stats.converged = mc.converged;
  stats.evals = game.eval_count();
  report.per_round.push_back(std::move(mc.estimate));
  report.rounds.push_back(stats);
  finish_report(report, n);
  report.wall_time_s = seconds_since(start);
  return report;
}

std::vector<double> round_gains(const GradientLog& log,
                                const LabeledDataset& test) {
  std::vector<double> gains;
  for (const auto& r : log.rounds) {
    gains.push_back(evaluate(r.aggregated, test) - evaluate(r.base_model, test));
  }
  return gains;
}

std::vector<double> position_marginal_profile(const GradientLog& log,
                                              const LabeledDataset& test,
                                              std::size_t perms_per_round,
                                              std::uint64_t seed) {
  const std::size_t n = log.participants();
  std::vector<double> sums(n, 0.0);
  std::size_t samples = 0;
  for (std::size_t t = 0; t < log.total_rounds(); ++t) {
    RoundGame game(log, t, test);
    UniformSampler sampler(n, derive_seed(seed, std::uint64_t{t}));
    for (std::size_t s = 0; s < perms_per_round; ++s) {
      const auto perm = *sampler.next();
      const auto marginals = permutation_marginals(game.game(), perm);
      for (std::size_t pos = 0; pos < n; ++pos) sums[pos] += marginals[perm[pos]];
      ++samples;
    }
  }
  if (samples > 0) {
    for (double& v : sums) v /= static_cast<double>(samples);
  }
  return sums;
}

}  // namespace fedshap
