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

// Coalition games and Shapley value computation, independent of any learning
// setting. Players are indexed 0..n-1; coalitions are bitmasks.

#ifndef FEDSHAP_GAME_HPP
#define FEDSHAP_GAME_HPP

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

namespace fedshap {

using PlayerIndex = std::size_t;

inline constexpr std::size_t kMaxPlayers = 63;
inline constexpr std::size_t kMaxExactPlayers = 20;
inline constexpr std::size_t kMaxEnumeratedPlayers = 8;

class Coalition {
 public:
  constexpr Coalition() = default;
  constexpr explicit Coalition(std::uint64_t mask) : mask_(mask) {}

  static constexpr Coalition Full(std::size_t n) {
    return Coalition(n >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1);
  }
  static Coalition Of(std::span<const PlayerIndex> players);

  constexpr std::uint64_t mask() const { return mask_; }
  constexpr bool empty() const { return mask_ == 0; }
  constexpr bool contains(PlayerIndex i) const { return (mask_ >> i) & 1U; }
  constexpr Coalition with(PlayerIndex i) const {
    return Coalition(mask_ | (std::uint64_t{1} << i));
  }
  std::size_t size() const;
  std::vector<PlayerIndex> members() const;

  friend constexpr bool operator==(Coalition, Coalition) = default;

 private:
  std::uint64_t mask_ = 0;
};

// Utility oracle V(.) over coalitions with exact evaluation accounting.
// Every distinct coalition is evaluated at most once; cache hits do not count.
class CoalitionGame {
 public:
  using Oracle = std::function<double(Coalition)>;

  CoalitionGame(std::size_t n, Oracle oracle);

  std::size_t size() const { return n_; }
  double utility(Coalition c);
  std::uint64_t eval_count() const { return evals_; }

 private:
  std::size_t n_;
  Oracle oracle_;
  std::unordered_map<std::uint64_t, double> cache_;
  std::uint64_t evals_ = 0;
};

struct ContributionVector {
  std::vector<double> values;
  std::optional<std::size_t> round;
  std::size_t sample_count = 0;

  static ContributionVector Zeros(std::size_t n) {
    return ContributionVector{std::vector<double>(n, 0.0), std::nullopt, 0};
  }

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  double sum() const;

  // Coordinate-wise accumulation; lengths must match.
  ContributionVector& operator+=(const ContributionVector& other);
};

// An ordering of all n players, each exactly once.
class Permutation {
 public:
  explicit Permutation(std::vector<PlayerIndex> order);
  static Permutation Identity(std::size_t n);

  const std::vector<PlayerIndex>& order() const { return order_; }
  std::size_t size() const { return order_.size(); }
  PlayerIndex operator[](std::size_t pos) const { return order_[pos]; }

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<PlayerIndex> order_;
};

// Sliding window of the last `capacity` running estimates, used by the
// relative-change stopping rule.
class ConvergenceWindow {
 public:
  static constexpr std::size_t kDefaultCapacity = 10;
  static constexpr double kDefaultThreshold = 0.05;
  static constexpr double kDenominatorFloor = 1e-12;

  ConvergenceWindow(std::size_t capacity = kDefaultCapacity,
                    double threshold = kDefaultThreshold,
                    std::size_t min_samples = kDefaultCapacity + 1);

  void push(const ContributionVector& estimate);
  void clear() { history_.clear(); }

  bool full() const { return history_.size() == capacity_; }
  std::size_t capacity() const { return capacity_; }
  double threshold() const { return threshold_; }
  std::size_t min_samples() const { return min_samples_; }
  // Oldest first.
  const std::deque<std::vector<double>>& history() const { return history_; }

 private:
  std::size_t capacity_;
  double threshold_;
  std::size_t min_samples_;
  std::deque<std::vector<double>> history_;
};

// Mean relative change of `current` against every vector in the window,
// normalized by n * capacity. Returns +inf when the window is not full.
double convergence_criterion(const ConvergenceWindow& window,
                             const ContributionVector& current);

bool check_convergence(const ConvergenceWindow& window,
                       const ContributionVector& current);

class PermutationSampler {
 public:
  virtual ~PermutationSampler() = default;
  // nullopt once a finite sampler is exhausted.
  virtual std::optional<Permutation> next() = 0;
  // True when the sampler enumerates a complete finite population; estimates
  // are then exact averages and the stopping rule is not consulted.
  virtual bool exhaustive() const { return false; }
};

class UniformSampler final : public PermutationSampler {
 public:
  UniformSampler(std::size_t n, std::uint64_t seed);
  std::optional<Permutation> next() override;

 private:
  std::size_t n_;
  std::mt19937_64 rng_;
};

// All n! orderings in lexicographic order, each exactly once.
class EnumerationSampler final : public PermutationSampler {
 public:
  static constexpr std::size_t kMaxPlayers = 10;

  explicit EnumerationSampler(std::size_t n);
  std::optional<Permutation> next() override;
  bool exhaustive() const override { return true; }

 private:
  std::vector<PlayerIndex> current_;
  bool done_ = false;
};

// Truncate a permutation scan once the remaining gap |target - v_{j-1}|
// drops below epsilon.
struct WithinRoundTruncation {
  double target = 0.0;
  double epsilon = 0.0;
};

struct McResult {
  ContributionVector estimate;
  bool converged = false;
  std::size_t iterations = 0;
};

// Marginal contribution of every player along one ordering.
std::vector<double> permutation_marginals(CoalitionGame& game,
                                          const Permutation& order);

ContributionVector exact_shapley(CoalitionGame& game);
ContributionVector exact_shapley_by_permutations(CoalitionGame& game);

// Monte-Carlo permutation estimate with running-mean updates. Stops when the
// window criterion holds (after min_samples permutations), the sampler is
// exhausted, or max_iters permutations have been drawn.
McResult mc_shapley(CoalitionGame& game, PermutationSampler& sampler,
                    ConvergenceWindow window, std::size_t max_iters,
                    std::optional<WithinRoundTruncation> truncation = {});

}  // namespace fedshap

#endif  // FEDSHAP_GAME_HPP
