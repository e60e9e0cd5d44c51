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

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "fedshap/errors.hpp"

namespace fedshap {

Coalition Coalition::Of(std::span<const PlayerIndex> players) {
  Coalition c;
  for (PlayerIndex p : players) {
    if (p >= kMaxPlayers) throw std::out_of_range("player index out of range");
    c = c.with(p);
  }
  return c;
}

std::size_t Coalition::size() const {
  return static_cast<std::size_t>(std::popcount(mask_));
}

std::vector<PlayerIndex> Coalition::members() const {
  std::vector<PlayerIndex> out;
  for (std::uint64_t m = mask_; m != 0; m &= m - 1) {
    out.push_back(static_cast<PlayerIndex>(std::countr_zero(m)));
  }
  return out;
}

CoalitionGame::CoalitionGame(std::size_t n, Oracle oracle)
    : n_(n), oracle_(std::move(oracle)) {
  if (n == 0) throw std::invalid_argument("game needs at least one player");
  if (n > kMaxPlayers) {
    throw CapacityError("game supports at most " + std::to_string(kMaxPlayers) +
                        " players, got " + std::to_string(n));
  }
  if (!oracle_) throw std::invalid_argument("game oracle is empty");
}

double CoalitionGame::utility(Coalition c) {
  if ((c.mask() & ~Coalition::Full(n_).mask()) != 0) {
    throw std::out_of_range("coalition references players outside the game");
  }
  if (auto it = cache_.find(c.mask()); it != cache_.end()) return it->second;
  double v = oracle_(c);
  ++evals_;
  cache_.emplace(c.mask(), v);
  return v;
}

double ContributionVector::sum() const {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

ContributionVector& ContributionVector::operator+=(
    const ContributionVector& other) {
  if (other.size() != size()) {
    throw DimensionError("contribution vectors differ in length");
  }
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += other.values[i];
  return *this;
}

Permutation::Permutation(std::vector<PlayerIndex> order)
    : order_(std::move(order)) {
  std::vector<bool> seen(order_.size(), false);
  for (PlayerIndex p : order_) {
    if (p >= order_.size() || seen[p]) {
      throw std::invalid_argument("not a permutation of 0..n-1");
    }
    seen[p] = true;
  }
}

Permutation Permutation::Identity(std::size_t n) {
  std::vector<PlayerIndex> order(n);
  std::iota(order.begin(), order.end(), PlayerIndex{0});
  return Permutation(std::move(order));
}

ConvergenceWindow::ConvergenceWindow(std::size_t capacity, double threshold,
                                     std::size_t min_samples)
    : capacity_(capacity), threshold_(threshold), min_samples_(min_samples) {
  if (capacity_ == 0) throw std::invalid_argument("window capacity must be > 0");
  if (!(threshold_ > 0.0)) throw std::invalid_argument("threshold must be > 0");
}

void ConvergenceWindow::push(const ContributionVector& estimate) {
  history_.push_back(estimate.values);
  while (history_.size() > capacity_) history_.pop_front();
}

double convergence_criterion(const ConvergenceWindow& window,
                             const ContributionVector& current) {
  if (!window.full()) return std::numeric_limits<double>::infinity();
  const std::size_t n = current.size();
  double total = 0.0;
  for (const auto& past : window.history()) {
    if (past.size() != n) throw DimensionError("window entry length mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      double denom = std::max(std::abs(current.values[i]),
                              ConvergenceWindow::kDenominatorFloor);
      total += std::abs(current.values[i] - past[i]) / denom;
    }
  }
  return total / static_cast<double>(n * window.capacity());
}

bool check_convergence(const ConvergenceWindow& window,
                       const ContributionVector& current) {
  return convergence_criterion(window, current) < window.threshold();
}

UniformSampler::UniformSampler(std::size_t n, std::uint64_t seed)
    : n_(n), rng_(seed) {}

std::optional<Permutation> UniformSampler::next() {
  std::vector<PlayerIndex> order(n_);
  std::iota(order.begin(), order.end(), PlayerIndex{0});
  std::shuffle(order.begin(), order.end(), rng_);
  return Permutation(std::move(order));
}

EnumerationSampler::EnumerationSampler(std::size_t n) : current_(n) {
  if (n > kMaxPlayers) {
    throw CapacityError("permutation enumeration supports at most " +
                        std::to_string(kMaxPlayers) + " players");
  }
  std::iota(current_.begin(), current_.end(), PlayerIndex{0});
}

std::optional<Permutation> EnumerationSampler::next() {
  if (done_) return std::nullopt;
  Permutation out(current_);
  done_ = !std::next_permutation(current_.begin(), current_.end());
  return out;
}

std::vector<double> permutation_marginals(CoalitionGame& game,
                                          const Permutation& order) {
  if (order.size() != game.size()) {
    throw DimensionError("permutation length differs from player count");
  }
  std::vector<double> marginals(game.size(), 0.0);
  Coalition prefix;
  double prev = game.utility(prefix);
  for (PlayerIndex p : order.order()) {
    prefix = prefix.with(p);
    double cur = game.utility(prefix);
    marginals[p] = cur - prev;
    prev = cur;
  }
  return marginals;
}

ContributionVector exact_shapley(CoalitionGame& game) {
  const std::size_t n = game.size();
  if (n > kMaxExactPlayers) {
    throw CapacityError("exact Shapley supports at most " +
                        std::to_string(kMaxExactPlayers) + " players, got " +
                        std::to_string(n));
  }
  const std::uint64_t subsets = std::uint64_t{1} << n;
  std::vector<double> v(subsets);
  for (std::uint64_t mask = 0; mask < subsets; ++mask) {
    v[mask] = game.utility(Coalition(mask));
  }

  // weight[s] = s!(n-s-1)!/n! = 1 / (n * C(n-1, s))
  std::vector<double> weight(n);
  double binom = 1.0;
  for (std::size_t s = 0; s < n; ++s) {
    weight[s] = 1.0 / (static_cast<double>(n) * binom);
    binom = binom * static_cast<double>(n - 1 - s) / static_cast<double>(s + 1);
  }

  // Marginals are grouped by coalition size and summed in sorted order so that
  // interchangeable players receive bit-identical values.
  ContributionVector out = ContributionVector::Zeros(n);
  std::vector<std::vector<double>> by_size(n);
  for (PlayerIndex i = 0; i < n; ++i) {
    for (auto& bucket : by_size) bucket.clear();
    const std::uint64_t bit = std::uint64_t{1} << i;
    for (std::uint64_t mask = 0; mask < subsets; ++mask) {
      if (mask & bit) continue;
      by_size[std::popcount(mask)].push_back(v[mask | bit] - v[mask]);
    }
    double phi = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      auto& bucket = by_size[s];
      std::sort(bucket.begin(), bucket.end());
      double acc = 0.0;
      for (double m : bucket) acc += m;
      phi += weight[s] * acc;
    }
    out.values[i] = phi;
  }
  out.sample_count = 0;
  return out;
}

ContributionVector exact_shapley_by_permutations(CoalitionGame& game) {
  const std::size_t n = game.size();
  if (n > kMaxEnumeratedPlayers) {
    throw CapacityError("permutation enumeration supports at most " +
                        std::to_string(kMaxEnumeratedPlayers) +
                        " players, got " + std::to_string(n));
  }
  ContributionVector out = ContributionVector::Zeros(n);
  EnumerationSampler sampler(n);
  std::size_t count = 0;
  while (auto perm = sampler.next()) {
    auto marginals = permutation_marginals(game, *perm);
    for (std::size_t i = 0; i < n; ++i) out.values[i] += marginals[i];
    ++count;
  }
  for (double& x : out.values) x /= static_cast<double>(count);
  out.sample_count = count;
  return out;
}

McResult mc_shapley(CoalitionGame& game, PermutationSampler& sampler,
                    ConvergenceWindow window, std::size_t max_iters,
                    std::optional<WithinRoundTruncation> truncation) {
  const std::size_t n = game.size();
  if (!sampler.exhaustive() && max_iters < window.min_samples()) {
    throw std::invalid_argument("max_iters must be at least min_samples");
  }
  window.clear();
  McResult result{ContributionVector::Zeros(n), false, 0};
  auto& phi = result.estimate.values;
  const double v_empty = game.utility(Coalition());

  std::size_t k = 0;
  while (k < max_iters) {
    auto perm = sampler.next();
    if (!perm) break;
    if (perm->size() != n) throw DimensionError("sampler permutation length");
    ++k;
    const double kd = static_cast<double>(k);
    Coalition prefix;
    double prev = v_empty;
    for (std::size_t j = 0; j < n; ++j) {
      const PlayerIndex p = (*perm)[j];
      prefix = prefix.with(p);
      double cur = prev;
      if (!truncation ||
          std::abs(truncation->target - prev) >= truncation->epsilon) {
        cur = game.utility(prefix);
      }
      phi[p] = (kd - 1.0) / kd * phi[p] + (cur - prev) / kd;
      prev = cur;
    }
    result.estimate.sample_count = k;
    if (!sampler.exhaustive()) {
      if (k >= window.min_samples() &&
          check_convergence(window, result.estimate)) {
        result.converged = true;
        break;
      }
      window.push(result.estimate);
    }
  }
  if (sampler.exhaustive() && !sampler.next()) result.converged = true;
  result.iterations = k;
  return result;
}

}  // namespace fedshap
