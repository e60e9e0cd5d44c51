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

#include "fedshap/game.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "fedshap/errors.hpp"
#include "test_support.hpp"

namespace fedshap {
namespace {

using testing::random_utilities;
using testing::table_game;
using testing::worked_example_utilities;

// Average of marginal vectors over all n! orderings, written independently of
// the library's enumeration helpers.
std::vector<double> brute_force_shapley(const std::vector<double>& v, std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> phi(n, 0.0);
  double count = 0;
  do {
    std::uint64_t mask = 0;
    for (std::size_t p : order) {
      const std::uint64_t next = mask | (std::uint64_t{1} << p);
      phi[p] += v[next] - v[mask];
      mask = next;
    }
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  for (double& x : phi) x /= count;
  return phi;
}

TEST(CoalitionTest, MembersAndSize) {
  const std::vector<PlayerIndex> players{0, 3, 5};
  Coalition c = Coalition::Of(players);
  EXPECT_EQ(c.size(), 3U);
  EXPECT_EQ(c.members(), players);
  EXPECT_TRUE(c.contains(3));
  EXPECT_FALSE(c.contains(1));
  EXPECT_EQ(Coalition::Full(4).mask(), 0b1111U);
}

TEST(CoalitionGameTest, CachesAndCountsDistinctEvaluations) {
  int calls = 0;
  CoalitionGame game(3, [&calls](Coalition c) {
    ++calls;
    return static_cast<double>(c.size());
  });
  EXPECT_EQ(game.utility(Coalition(0b011)), 2.0);
  EXPECT_EQ(game.utility(Coalition(0b011)), 2.0);
  EXPECT_EQ(game.eval_count(), 1U);
  EXPECT_EQ(calls, 1);
  game.utility(Coalition(0b100));
  EXPECT_EQ(game.eval_count(), 2U);
  EXPECT_THROW(game.utility(Coalition(0b1000)), std::out_of_range);
}

TEST(ExactShapleyTest, WorkedExample) {
  auto game = table_game(worked_example_utilities());
  auto phi = exact_shapley(game);
  ASSERT_EQ(phi.size(), 3U);
  EXPECT_NEAR(phi[0], 35.0, 1e-9);
  EXPECT_NEAR(phi[1], 35.0, 1e-9);
  EXPECT_NEAR(phi[2], 30.0, 1e-9);
  EXPECT_EQ(game.eval_count(), 8U);
}

TEST(ExactShapleyTest, WorkedExampleMarginalColumns) {
  auto game = table_game(worked_example_utilities());
  // Orderings A-B-C, B-C-A, C-A-B, A-C-B, C-B-A, B-A-C with A=0, B=1, C=2.
  const std::vector<std::vector<PlayerIndex>> orders{
      {0, 1, 2}, {1, 2, 0}, {2, 0, 1}, {0, 2, 1}, {2, 1, 0}, {1, 0, 2}};
  const std::vector<std::vector<double>> expected{
      {50, 10, 40}, {10, 50, 40}, {80, 10, 10}, {50, 10, 40}, {10, 80, 10}, {10, 50, 40}};
  for (std::size_t k = 0; k < orders.size(); ++k) {
    auto m = permutation_marginals(game, Permutation(orders[k]));
    for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(m[i], expected[k][i]);
  }
}

TEST(ExactShapleyTest, ConstantGameIsZero) {
  CoalitionGame game(5, [](Coalition) { return 3.25; });
  auto phi = exact_shapley(game);
  for (double x : phi.values) EXPECT_EQ(x, 0.0);
}

TEST(ExactShapleyTest, MatchesBruteForceOnRandomFourPlayerGame) {
  const auto v = random_utilities(4, 1234);
  auto game = table_game(v);
  auto phi = exact_shapley(game);
  const auto oracle = brute_force_shapley(v, 4);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(phi[i], oracle[i], 1e-12);
}

TEST(ExactShapleyTest, RejectsMoreThanTwentyPlayers) {
  CoalitionGame game(21, [](Coalition) { return 0.0; });
  EXPECT_THROW(exact_shapley(game), CapacityError);
}

TEST(ExactShapleyTest, PropagatesOracleFailure) {
  CoalitionGame game(3, [](Coalition c) -> double {
    if (c.size() == 2) throw std::runtime_error("oracle down");
    return 1.0;
  });
  EXPECT_THROW(exact_shapley(game), std::runtime_error);
}

TEST(ExactShapleyTest, EvaluatesEverySubsetOnce) {
  for (std::size_t n : {1U, 4U, 9U}) {
    auto game = table_game(random_utilities(n, 99 + n));
    exact_shapley(game);
    EXPECT_EQ(game.eval_count(), std::uint64_t{1} << n);
  }
}

TEST(ExactByPermutationsTest, Examples) {
  auto table = table_game(worked_example_utilities());
  auto phi = exact_shapley_by_permutations(table);
  EXPECT_NEAR(phi[0], 35.0, 1e-9);
  EXPECT_NEAR(phi[1], 35.0, 1e-9);
  EXPECT_NEAR(phi[2], 30.0, 1e-9);

  auto single = table_game({0.0, 7.0});
  EXPECT_EQ(exact_shapley_by_permutations(single).values, std::vector<double>{7.0});

  const std::vector<double> w{1, 2, 3};
  CoalitionGame additive(3, [&w](Coalition c) {
    double s = 0;
    for (auto i : c.members()) s += w[i];
    return s;
  });
  auto add = exact_shapley_by_permutations(additive);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(add[i], w[i], 1e-12);
}

TEST(ExactByPermutationsTest, RejectsMoreThanEightPlayers) {
  CoalitionGame game(9, [](Coalition) { return 0.0; });
  EXPECT_THROW(exact_shapley_by_permutations(game), CapacityError);
}

// Property suite over seeded random games.
class ShapleyAxiomsTest : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(ShapleyAxiomsTest, EfficiencyAndOracleEquivalence) {
  const std::uint64_t seed = GetParam();
  const std::size_t n = 2 + seed % 7;  // 2..8
  const auto v = random_utilities(n, seed, /*zero_empty=*/false);
  auto game = table_game(v);
  auto exact = exact_shapley(game);
  EXPECT_NEAR(exact.sum(), v.back() - v.front(), 1e-9);
  auto perm_game = table_game(v);
  auto by_perm = exact_shapley_by_permutations(perm_game);
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(exact[i], by_perm[i], 1e-9);
}

TEST_P(ShapleyAxiomsTest, SymmetricPlayersGetIdenticalValues) {
  const std::uint64_t seed = GetParam();
  const std::size_t n = 3 + seed % 6;
  // Utility depends on whether players 0 and 1 are present only through their
  // count, so swapping them leaves V unchanged.
  const auto base = random_utilities(n, seed);
  std::vector<double> v(base.size());
  for (std::uint64_t mask = 0; mask < v.size(); ++mask) {
    std::uint64_t canon = mask;
    const bool a = mask & 1U;
    const bool b = mask & 2U;
    if (a != b) canon = (mask & ~std::uint64_t{3}) | 1U;
    v[mask] = base[canon];
  }
  auto game = table_game(v);
  auto phi = exact_shapley(game);
  EXPECT_EQ(phi[0], phi[1]);
}

TEST_P(ShapleyAxiomsTest, DummyPlayerGetsExactlyZero) {
  const std::uint64_t seed = GetParam();
  const std::size_t n = 3 + seed % 6;
  const PlayerIndex dummy = seed % n;
  const auto base = random_utilities(n, seed);
  std::vector<double> v(base.size());
  for (std::uint64_t mask = 0; mask < v.size(); ++mask) {
    v[mask] = base[mask & ~(std::uint64_t{1} << dummy)];
  }
  auto game = table_game(v);
  EXPECT_EQ(exact_shapley(game)[dummy], 0.0);
}

TEST_P(ShapleyAxiomsTest, Linearity) {
  const std::uint64_t seed = GetParam();
  const std::size_t n = 2 + seed % 8;
  const auto u = random_utilities(n, seed);
  const auto w = random_utilities(n, seed + 1000);
  std::vector<double> sum(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) sum[i] = u[i] + w[i];
  auto gu = table_game(u);
  auto gw = table_game(w);
  auto gs = table_game(sum);
  auto pu = exact_shapley(gu);
  auto pw = exact_shapley(gw);
  auto ps = exact_shapley(gs);
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(ps[i], pu[i] + pw[i], 1e-9);
}

INSTANTIATE_TEST_SUITE_P(Seeded, ShapleyAxiomsTest, ::testing::Range<std::uint64_t>(1, 41));

TEST(PermutationTest, RejectsNonBijections) {
  EXPECT_THROW(Permutation({0, 0, 1}), std::invalid_argument);
  EXPECT_THROW(Permutation({0, 3, 1}), std::invalid_argument);
  EXPECT_NO_THROW(Permutation({2, 0, 1}));
}

TEST(EnumerationSamplerTest, VisitsAllOrderingsOnce) {
  EnumerationSampler sampler(4);
  std::vector<Permutation> seen;
  while (auto p = sampler.next()) seen.push_back(*p);
  EXPECT_EQ(seen.size(), 24U);
  for (std::size_t i = 1; i < seen.size(); ++i) {
    EXPECT_TRUE(std::lexicographical_compare(seen[i - 1].order().begin(),
                                             seen[i - 1].order().end(),
                                             seen[i].order().begin(),
                                             seen[i].order().end()));
  }
}

TEST(ConvergenceTest, EmptyHistoryIsNotConverged) {
  ConvergenceWindow window;
  ContributionVector current{{1.0, 2.0}, std::nullopt, 1};
  EXPECT_FALSE(check_convergence(window, current));
}

TEST(ConvergenceTest, IdenticalHistoryConverges) {
  ConvergenceWindow window;
  ContributionVector v{{0.3, -0.2, 0.1}, std::nullopt, 1};
  for (int m = 0; m < 10; ++m) window.push(v);
  EXPECT_EQ(convergence_criterion(window, v), 0.0);
  EXPECT_TRUE(check_convergence(window, v));
}

TEST(ConvergenceTest, NineEntriesAreNotEnough) {
  ConvergenceWindow window;
  ContributionVector v{{1.0, 1.0}, std::nullopt, 1};
  for (int m = 0; m < 9; ++m) window.push(v);
  EXPECT_FALSE(check_convergence(window, v));
  window.push(v);
  EXPECT_TRUE(check_convergence(window, v));
}

TEST(ConvergenceTest, ThresholdBoundary) {
  // Two players, current (1, 1), every past vector (1 - d, 1). The criterion
  // is (1 / (2 * 10)) * 10 * d = d / 2.
  auto criterion_for = [](double d) {
    ConvergenceWindow window;
    for (int m = 0; m < 10; ++m) {
      window.push(ContributionVector{{1.0 - d, 1.0}, std::nullopt, 0});
    }
    ContributionVector current{{1.0, 1.0}, std::nullopt, 0};
    return std::make_pair(convergence_criterion(window, current),
                          check_convergence(window, current));
  };
  auto [c04, ok04] = criterion_for(0.08);
  EXPECT_NEAR(c04, 0.04, 1e-12);
  EXPECT_TRUE(ok04);
  auto [c06, ok06] = criterion_for(0.12);
  EXPECT_NEAR(c06, 0.06, 1e-12);
  EXPECT_FALSE(ok06);
}

TEST(ConvergenceTest, ZeroEstimateUsesDenominatorFloor) {
  ConvergenceWindow window;
  for (int m = 0; m < 10; ++m) window.push(ContributionVector{{1e-9}, std::nullopt, 0});
  ContributionVector current{{0.0}, std::nullopt, 0};
  EXPECT_NEAR(convergence_criterion(window, current), 1e-9 / 1e-12, 1e-6);
  EXPECT_FALSE(check_convergence(window, current));
}

TEST(ConvergenceTest, WindowKeepsLastEntries) {
  ConvergenceWindow window(3, 0.05, 4);
  for (int k = 0; k < 5; ++k) {
    window.push(ContributionVector{{static_cast<double>(k)}, std::nullopt, 0});
  }
  ASSERT_EQ(window.history().size(), 3U);
  EXPECT_EQ(window.history().front()[0], 2.0);
  EXPECT_THROW(ConvergenceWindow(10, 0.0), std::invalid_argument);
}

TEST(McShapleyTest, UniformSamplingApproachesWorkedExample) {
  auto game = table_game(worked_example_utilities());
  UniformSampler sampler(3, 20260101);
  // A vanishing threshold disables early stopping so all 10000 permutations run.
  auto res = mc_shapley(game, sampler, ConvergenceWindow(10, 1e-300), 10000);
  EXPECT_EQ(res.iterations, 10000U);
  EXPECT_EQ(res.estimate.sample_count, 10000U);
  EXPECT_FALSE(res.converged);
  EXPECT_NEAR(res.estimate[0], 35.0, 0.5);
  EXPECT_NEAR(res.estimate[1], 35.0, 0.5);
  EXPECT_NEAR(res.estimate[2], 30.0, 0.5);
}

TEST(McShapleyTest, FullEnumerationIsExact) {
  for (std::uint64_t seed : {3U, 4U, 5U}) {
    const std::size_t n = 3 + seed % 4;
    const auto v = random_utilities(n, seed);
    auto g1 = table_game(v);
    auto g2 = table_game(v);
    EnumerationSampler sampler(n);
    auto res = mc_shapley(g1, sampler, ConvergenceWindow(), 1'000'000);
    auto exact = exact_shapley_by_permutations(g2);
    EXPECT_TRUE(res.converged);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(res.estimate[i], exact[i], 1e-9);
  }
}

TEST(McShapleyTest, ConstantGameStopsAtMinSamples) {
  CoalitionGame game(4, [](Coalition) { return 0.5; });
  UniformSampler sampler(4, 1);
  auto res = mc_shapley(game, sampler, ConvergenceWindow(), 500);
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.iterations, 11U);
  for (double x : res.estimate.values) EXPECT_EQ(x, 0.0);
}

TEST(McShapleyTest, RejectsMaxItersBelowMinSamples) {
  CoalitionGame game(2, [](Coalition) { return 0.0; });
  UniformSampler sampler(2, 1);
  EXPECT_THROW(mc_shapley(game, sampler, ConvergenceWindow(), 5), std::invalid_argument);
}

TEST(McShapleyTest, ReportsNonConvergence) {
  auto game = table_game(random_utilities(5, 77));
  UniformSampler sampler(5, 9);
  auto res = mc_shapley(game, sampler, ConvergenceWindow(10, 1e-6), 40);
  EXPECT_FALSE(res.converged);
  EXPECT_EQ(res.iterations, 40U);
}

TEST(McShapleyTest, HugeTruncationEvaluatesOnlyFirstPosition) {
  auto game = table_game(worked_example_utilities());
  UniformSampler sampler(3, 5);
  auto res = mc_shapley(game, sampler, ConvergenceWindow(10, 1e-300), 60,
                        WithinRoundTruncation{100.0, 1e9});
  // Only the empty coalition is evaluated before truncation kicks in.
  EXPECT_EQ(game.eval_count(), 1U);
  for (double x : res.estimate.values) EXPECT_EQ(x, 0.0);
}

}  // namespace
}  // namespace fedshap
