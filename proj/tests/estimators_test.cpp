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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "fedshap/errors.hpp"
#include "fedshap/seed.hpp"
#include "test_support.hpp"

namespace fedshap {
namespace {

using testing::make_tiny_federation;
using testing::TinyFederation;

GtgConfig exact_gtg() {
  GtgConfig cfg;
  cfg.eps_between = 0.0;
  cfg.eps_within = 0.0;
  cfg.sampling = SamplingMode::kEnumeration;
  return cfg;
}

void expect_vectors_near(const ContributionVector& a, const ContributionVector& b,
                         double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "player " << i;
}

class EstimatorFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fed_ = new TinyFederation(make_tiny_federation(4, 3, 101));
  }
  static void TearDownTestSuite() {
    delete fed_;
    fed_ = nullptr;
  }
  static TinyFederation* fed_;
};
TinyFederation* EstimatorFixture::fed_ = nullptr;

TEST(GuidedPermutationTest, SinglePrefixCyclesThroughPlayers) {
  std::mt19937_64 rng(1);
  for (std::size_t k = 1; k <= 12; ++k) {
    auto p = guided_permutation(k, 4, 1, rng);
    EXPECT_EQ(p.order().front(), (k - 1) % 4);
    std::set<PlayerIndex> seen(p.order().begin(), p.order().end());
    EXPECT_EQ(seen.size(), 4U);
  }
}

TEST(GuidedPermutationTest, PrefixesFollowLexicographicArrangements) {
  // Oracle: distinct length-m prefixes of the lexicographic n! listing.
  const std::size_t n = 4;
  const std::size_t m = 2;
  std::vector<std::vector<PlayerIndex>> expected;
  std::vector<PlayerIndex> perm{0, 1, 2, 3};
  do {
    std::vector<PlayerIndex> prefix(perm.begin(), perm.begin() + m);
    if (expected.empty() || expected.back() != prefix) expected.push_back(prefix);
  } while (std::next_permutation(perm.begin(), perm.end()));
  ASSERT_EQ(expected.size(), 12U);
  std::mt19937_64 rng(2);
  for (std::size_t k = 1; k <= 30; ++k) {
    auto p = guided_permutation(k, n, m, rng);
    std::vector<PlayerIndex> prefix(p.order().begin(), p.order().begin() + m);
    EXPECT_EQ(prefix, expected[(k - 1) % 12]) << "k=" << k;
  }
  EXPECT_THROW(guided_permutation(0, 4, 1, rng), std::invalid_argument);
  EXPECT_THROW(guided_permutation(1, 4, 4, rng), std::invalid_argument);
}

TEST(GuidedPermutationTest, SuffixIsShuffled) {
  std::mt19937_64 rng(3);
  std::set<std::vector<PlayerIndex>> suffixes;
  for (std::size_t k = 1; k <= 200; k += 6) {
    auto p = guided_permutation(k, 6, 1, rng);
    suffixes.insert(std::vector<PlayerIndex>(p.order().begin() + 1, p.order().end()));
  }
  EXPECT_GT(suffixes.size(), 10U);
}

TEST_F(EstimatorFixture, RoundGameEndpoints) {
  const auto& log = fed_->log;
  RoundGame game(log, 1, fed_->test);
  EXPECT_EQ(game.base_utility(), evaluate(log.rounds[1].base_model, fed_->test));
  EXPECT_EQ(game.full_utility(), evaluate(log.rounds[1].aggregated, fed_->test));
  EXPECT_EQ(game.reconstructions(), 0U);
  game.game().utility(Coalition(0b0101));
  EXPECT_EQ(game.reconstructions(), 1U);
  EXPECT_EQ(game.eval_count(), 3U);
}

TEST_F(EstimatorFixture, MrEvaluatesEveryCoalitionOfEveryRound) {
  auto report = mr_eval(fed_->log, fed_->test);
  EXPECT_EQ(report.eval_count, 3U * 16U);
  EXPECT_EQ(report.reconstructions, 3U * 14U);
  ASSERT_EQ(report.per_round.size(), 3U);
  const auto gains = round_gains(fed_->log, fed_->test);
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_NEAR(report.per_round[t].sum(), gains[t], 1e-9);
  }
}

TEST_F(EstimatorFixture, ExactLimitOfGtgMatchesMr) {
  auto mr = mr_eval(fed_->log, fed_->test);
  auto gtg = gtg_eval(fed_->log, fed_->test, exact_gtg());
  for (std::size_t t = 0; t < 3; ++t) {
    expect_vectors_near(gtg.per_round[t], mr.per_round[t], 1e-9);
  }
  expect_vectors_near(gtg.total, mr.total, 1e-9);
  for (bool c : gtg.converged_rounds) EXPECT_TRUE(c);
}

TEST_F(EstimatorFixture, HugeWithinRoundThresholdTruncatesEverything) {
  GtgConfig cfg;
  cfg.eps_between = 0.0;
  cfg.eps_within = 1e9;
  auto report = gtg_eval(fed_->log, fed_->test, cfg);
  for (double v : report.total.values) EXPECT_EQ(v, 0.0);
  // Only v_0 and v_N are ever evaluated.
  EXPECT_EQ(report.eval_count, 3U * 2U);
}

TEST_F(EstimatorFixture, TibWithZeroBetweenThresholdEqualsTi) {
  GtgConfig cfg;
  cfg.eps_between = 0.0;
  cfg.seed = 5;
  auto ti = gtg_ti(fed_->log, fed_->test, cfg);
  auto tib = gtg_tib(fed_->log, fed_->test, cfg);
  EXPECT_EQ(ti.total.values, tib.total.values);
  EXPECT_EQ(ti.eval_count, tib.eval_count);
}

TEST_F(EstimatorFixture, GtgIsDeterministicPerSeed) {
  GtgConfig cfg;
  cfg.seed = 77;
  auto a = gtg_eval(fed_->log, fed_->test, cfg);
  auto b = gtg_eval(fed_->log, fed_->test, cfg);
  EXPECT_EQ(a.total.values, b.total.values);
  EXPECT_EQ(a.eval_count, b.eval_count);
}

TEST_F(EstimatorFixture, TmrSkipsLateRounds) {
  // Weights 1, 0.5, 0.25: the last falls below 0.3 and is skipped.
  auto mr = mr_eval(fed_->log, fed_->test);
  auto tmr = tmr_eval(fed_->log, fed_->test, TmrConfig{0.5, 0.3});
  ASSERT_EQ(tmr.per_round.size(), 3U);
  expect_vectors_near(tmr.per_round[0], mr.per_round[0], 1e-12);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(tmr.per_round[1][i], 0.5 * mr.per_round[1][i], 1e-12);
    EXPECT_EQ(tmr.per_round[2][i], 0.0);
  }
  EXPECT_TRUE(tmr.rounds[2].truncated);
  EXPECT_EQ(tmr.rounds[2].evals, 0U);
  EXPECT_EQ(tmr.eval_count, 2U * 16U);
}

TEST_F(EstimatorFixture, TmrWithoutDecayEqualsMr) {
  auto mr = mr_eval(fed_->log, fed_->test);
  auto tmr = tmr_eval(fed_->log, fed_->test, TmrConfig{1.0, 0.01});
  EXPECT_EQ(tmr.total.values, mr.total.values);
  EXPECT_EQ(tmr.eval_count, mr.eval_count);
  EXPECT_THROW(tmr_eval(fed_->log, fed_->test, TmrConfig{0.0, 0.01}), ConfigError);
}

TEST_F(EstimatorFixture, PositionProfileSumsToMeanGain) {
  const auto gains = round_gains(fed_->log, fed_->test);
  const auto profile = position_marginal_profile(fed_->log, fed_->test, 20, 3);
  ASSERT_EQ(profile.size(), 4U);
  const double mean_gain = std::accumulate(gains.begin(), gains.end(), 0.0) / 3.0;
  EXPECT_NEAR(std::accumulate(profile.begin(), profile.end(), 0.0), mean_gain, 1e-9);
  // Gains telescope along the chain.
  EXPECT_NEAR(std::accumulate(gains.begin(), gains.end(), 0.0),
              evaluate(fed_->log.final_model(), fed_->test) -
                  evaluate(fed_->log.initial_model(), fed_->test),
              1e-12);
}

TEST(GtgRoundTest, ZeroGainRoundIsSkippedWithTwoEvaluations) {
  auto f = make_tiny_federation(3, 1, 5);
  RoundRecord r = f.log.rounds[0];
  for (auto& u : r.updates) u = ParameterVector(f.arch);
  r.aggregated = r.base_model;
  RoundGame game(r, f.log.participant_weights, f.test);
  auto out = gtg_round(game, GtgConfig{}, 1);
  EXPECT_TRUE(out.stats.truncated);
  EXPECT_EQ(out.stats.evals, 2U);
  for (double v : out.values.values) EXPECT_EQ(v, 0.0);
}

TEST(GtgRoundTest, IdenticalParticipantsGetIdenticalMrValues) {
  auto f = make_tiny_federation(3, 1, 6);
  RoundRecord r = f.log.rounds[0];
  r.updates[1] = r.updates[0];
  std::vector<std::uint64_t> w = f.log.participant_weights;
  w[1] = w[0];
  r.aggregated = fedavg_aggregate(r.base_model, r.updates, w, Coalition::Full(3));
  RoundGame game(r, w, f.test);
  auto phi = exact_shapley(game.game());
  EXPECT_EQ(phi[0], phi[1]);
}

TEST(GtgRoundTest, EnumerationIsEfficient) {
  auto f = make_tiny_federation(4, 1, 7);
  RoundGame game(f.log, 0, f.test);
  auto out = gtg_round(game, exact_gtg(), 0);
  EXPECT_NEAR(out.values.sum(), out.stats.full_utility - out.stats.base_utility, 1e-9);
  EXPECT_EQ(out.stats.permutations, 24U);
}

TEST(GtgOtiTest, SingleRoundMatchesTi) {
  auto f = make_tiny_federation(4, 1, 8);
  GtgConfig cfg;
  cfg.seed = 9;
  auto oti = gtg_oti(f.log, f.test, cfg);
  auto ti = gtg_ti(f.log, f.test, cfg);
  EXPECT_EQ(oti.total.values, ti.total.values);
  EXPECT_EQ(oti.eval_count, ti.eval_count);
}

TEST(GtgConfigTest, Validation) {
  GtgConfig cfg;
  cfg.guided_prefix = 4;
  EXPECT_THROW(cfg.validate(4), ConfigError);
  cfg.guided_prefix = 1;
  cfg.eps_within = -1;
  EXPECT_THROW(cfg.validate(4), ConfigError);
  cfg.eps_within = 0;
  cfg.max_perms_per_round = 5;
  EXPECT_THROW(cfg.validate(4), ConfigError);
  cfg.sampling = SamplingMode::kEnumeration;
  EXPECT_NO_THROW(cfg.validate(4));
  EXPECT_THROW(cfg.validate(11), CapacityError);
  EXPECT_EQ(parse_sampling_mode("guided"), SamplingMode::kGuided);
  EXPECT_THROW(parse_sampling_mode("random"), ConfigError);
}

TEST(CapacityTest, ExactMethodsRejectLargeFederations) {
  ModelArchitecture arch{1, 0, 2};
  GradientLog log;
  log.architecture = arch;
  log.participant_weights.assign(21, 1);
  RoundRecord r;
  r.base_model = ParameterVector(arch);
  r.updates.assign(21, ParameterVector(arch));
  r.aggregated = r.base_model;
  log.rounds.push_back(r);
  LabeledDataset test;
  test.input_dim = 1;
  test.append_row(std::vector<float>{0.0F}, 0);
  EXPECT_THROW(mr_eval(log, test), CapacityError);
  EXPECT_THROW(tmr_eval(log, test, TmrConfig{}), CapacityError);
  // The sampling estimator has no such limit.
  EXPECT_NO_THROW(gtg_eval(log, test, GtgConfig{}));
}

// Retraining baselines on a tiny three-participant setup.
class RetrainFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    fed_ = make_tiny_federation(3, 2, 200, ScenarioKind::kSameDistSameSize, 10, 5);
    setup_ = RetrainSetup{fed_.participants, fed_.arch, fed_.train, fed_.rounds,
                          fed_.init_seed};
  }

  // Independent utility: centralized training on the pooled coalition data.
  double oracle_utility(std::uint64_t mask) const {
    const auto init = ParameterVector::RandomUniform(fed_.arch, fed_.init_seed);
    if (mask == 0) return evaluate(init, fed_.test);
    LabeledDataset pooled;
    pooled.input_dim = fed_.arch.input_dim;
    for (std::size_t i = 0; i < 3; ++i) {
      if (!(mask >> i & 1U)) continue;
      const auto& d = fed_.participants[i].dataset;
      for (std::size_t r = 0; r < d.rows(); ++r) pooled.append_row(d.row(r), d.labels[r]);
    }
    TrainConfig cfg = fed_.train;
    cfg.local_epochs = static_cast<std::uint32_t>(fed_.rounds * fed_.train.local_epochs);
    cfg.seed = derive_seed(fed_.train.seed, "retrain");
    return evaluate(train_local(init, pooled, cfg), fed_.test);
  }

  TinyFederation fed_;
  RetrainSetup setup_;
};

TEST_F(RetrainFixture, OriginalMatchesPermutationOracle) {
  auto report = original_shapley_eval(setup_, fed_.test);
  std::vector<double> v(8);
  for (std::uint64_t m = 0; m < 8; ++m) v[m] = oracle_utility(m);
  std::vector<PlayerIndex> order{0, 1, 2};
  std::vector<double> phi(3, 0.0);
  do {
    std::uint64_t mask = 0;
    for (auto p : order) {
      phi[p] += v[mask | (1U << p)] - v[mask];
      mask |= 1U << p;
    }
  } while (std::next_permutation(order.begin(), order.end()));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(report.total[i], phi[i] / 6.0, 1e-9);
  EXPECT_NEAR(report.total.sum(), v[7] - v[0], 1e-9);
  EXPECT_EQ(report.eval_count, 8U);
}

TEST_F(RetrainFixture, OriginalIsSymmetricForDuplicatedData) {
  auto parts = fed_.participants;
  parts[1].dataset = parts[0].dataset;
  RetrainSetup dup{parts, fed_.arch, fed_.train, fed_.rounds, fed_.init_seed};
  auto report = original_shapley_eval(dup, fed_.test);
  EXPECT_EQ(report.total[0], report.total[1]);
}

TEST_F(RetrainFixture, TmcExactLimitMatchesOriginal) {
  TmcConfig cfg;
  cfg.eps_within = 0.0;
  cfg.sampling = SamplingMode::kEnumeration;
  auto tmc = tmc_shapley_eval(setup_, fed_.test, cfg);
  auto orig = original_shapley_eval(setup_, fed_.test);
  expect_vectors_near(tmc.total, orig.total, 1e-9);
}

TEST_F(RetrainFixture, OriginalRejectsMoreThanTenParticipants) {
  std::vector<Participant> many(11, fed_.participants[0]);
  for (std::size_t i = 0; i < many.size(); ++i) many[i].id = i;
  RetrainSetup big{many, fed_.arch, fed_.train, 1, 0};
  EXPECT_THROW(original_shapley_eval(big, fed_.test), CapacityError);
}

}  // namespace
}  // namespace fedshap
