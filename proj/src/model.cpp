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

#include "fedshap/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "fedshap/errors.hpp"

namespace fedshap {
namespace {

// Magnitude floor for finite-difference relative errors.
constexpr double kFdFloor = 1e-4;

template <typename T>
struct Forward {
  std::vector<double> hidden;  // post-activation, empty for softmax regression
  std::vector<double> logits;
};

template <typename T>
void forward(std::span<const T> p, const ModelArchitecture& arch,
             std::span<const float> x, Forward<T>& out) {
  const std::size_t d = arch.input_dim;
  const std::size_t h = arch.hidden_dim;
  const std::size_t c = arch.class_count;
  out.logits.assign(c, 0.0);
  if (h == 0) {
    const T* w = p.data();
    const T* b = w + c * d;
    for (std::size_t k = 0; k < c; ++k) {
      double z = static_cast<double>(b[k]);
      for (std::size_t j = 0; j < d; ++j) {
        z += static_cast<double>(w[k * d + j]) * static_cast<double>(x[j]);
      }
      out.logits[k] = z;
    }
    return;
  }
  const T* w1 = p.data();
  const T* b1 = w1 + h * d;
  const T* w2 = b1 + h;
  const T* b2 = w2 + c * h;
  out.hidden.assign(h, 0.0);
  for (std::size_t u = 0; u < h; ++u) {
    double z = static_cast<double>(b1[u]);
    for (std::size_t j = 0; j < d; ++j) {
      z += static_cast<double>(w1[u * d + j]) * static_cast<double>(x[j]);
    }
    out.hidden[u] = std::tanh(z);
  }
  for (std::size_t k = 0; k < c; ++k) {
    double z = static_cast<double>(b2[k]);
    for (std::size_t u = 0; u < h; ++u) {
      z += static_cast<double>(w2[k * h + u]) * out.hidden[u];
    }
    out.logits[k] = z;
  }
}

// Softmax in place; returns log-sum-exp.
double softmax(std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    s += v;
  }
  for (double& v : z) v /= s;
  return mx + std::log(s);
}

// Mean cross-entropy and its gradient over the selected rows.
template <typename T>
double accumulate_gradient(std::span<const T> p, const ModelArchitecture& arch,
                           const LabeledDataset& data,
                           std::span<const std::size_t> rows,
                           std::vector<double>* grad) {
  const std::size_t d = arch.input_dim;
  const std::size_t h = arch.hidden_dim;
  const std::size_t c = arch.class_count;
  if (grad != nullptr) grad->assign(arch.parameter_count(), 0.0);
  Forward<T> fw;
  std::vector<double> dhidden;
  double loss = 0.0;
  for (std::size_t r : rows) {
    auto x = data.row(r);
    const std::uint32_t y = data.labels[r];
    forward(p, arch, x, fw);
    const double logit_y = fw.logits[y];
    const double lse = softmax(fw.logits);
    loss += lse - logit_y;
    if (grad == nullptr) continue;
    auto& probs = fw.logits;
    probs[y] -= 1.0;  // dL/dlogits
    double* g = grad->data();
    if (h == 0) {
      double* gw = g;
      double* gb = g + c * d;
      for (std::size_t k = 0; k < c; ++k) {
        for (std::size_t j = 0; j < d; ++j) {
          gw[k * d + j] += probs[k] * static_cast<double>(x[j]);
        }
        gb[k] += probs[k];
      }
      continue;
    }
    const T* w2 = p.data() + h * d + h;
    double* gw1 = g;
    double* gb1 = gw1 + h * d;
    double* gw2 = gb1 + h;
    double* gb2 = gw2 + c * h;
    dhidden.assign(h, 0.0);
    for (std::size_t k = 0; k < c; ++k) {
      for (std::size_t u = 0; u < h; ++u) {
        gw2[k * h + u] += probs[k] * fw.hidden[u];
        dhidden[u] += probs[k] * static_cast<double>(w2[k * h + u]);
      }
      gb2[k] += probs[k];
    }
    for (std::size_t u = 0; u < h; ++u) {
      const double dz = dhidden[u] * (1.0 - fw.hidden[u] * fw.hidden[u]);
      for (std::size_t j = 0; j < d; ++j) {
        gw1[u * d + j] += dz * static_cast<double>(x[j]);
      }
      gb1[u] += dz;
    }
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  if (grad != nullptr) {
    for (double& v : *grad) v *= inv;
  }
  return loss * inv;
}

std::vector<std::size_t> all_rows(const LabeledDataset& data) {
  std::vector<std::size_t> rows(data.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

void check_compatible(const ParameterVector& model, const LabeledDataset& data) {
  const auto& arch = model.architecture();
  if (data.input_dim != arch.input_dim) {
    throw DimensionError("dataset '" + data.id + "' has input_dim " +
                         std::to_string(data.input_dim) + ", model expects " +
                         std::to_string(arch.input_dim));
  }
  if (model.size() != arch.parameter_count()) {
    throw DimensionError("parameter vector does not match its architecture");
  }
  data.validate(arch.class_count);
}

}  // namespace

std::size_t ModelArchitecture::parameter_count() const {
  const std::size_t d = input_dim;
  const std::size_t h = hidden_dim;
  const std::size_t c = class_count;
  if (h == 0) return c * d + c;
  return h * d + h + c * h + c;
}

void ModelArchitecture::validate() const {
  if (input_dim == 0) throw DimensionError("input_dim must be > 0");
  if (class_count < 2) throw DimensionError("class_count must be >= 2");
}

ParameterVector::ParameterVector(const ModelArchitecture& arch)
    : arch_(arch), data_(arch.parameter_count(), 0.0F) {
  arch_.validate();
}

ParameterVector::ParameterVector(const ModelArchitecture& arch,
                                 std::vector<float> data)
    : arch_(arch), data_(std::move(data)) {
  arch_.validate();
  if (data_.size() != arch_.parameter_count()) {
    throw DimensionError("expected " + std::to_string(arch_.parameter_count()) +
                         " parameters, got " + std::to_string(data_.size()));
  }
}

ParameterVector ParameterVector::RandomUniform(const ModelArchitecture& arch,
                                               std::uint64_t seed,
                                               float scale) {
  ParameterVector out(arch);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-scale, scale);
  for (float& v : out.data_) v = dist(rng);
  return out;
}

bool ParameterVector::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](float v) { return std::isfinite(v); });
}

void TrainConfig::validate() const {
  if (local_epochs < 1) throw std::invalid_argument("local_epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning_rate must be finite and >= 0");
  }
}

void LabeledDataset::append_row(std::span<const float> x, std::uint32_t label) {
  if (x.size() != input_dim) throw DimensionError("row width != input_dim");
  features.insert(features.end(), x.begin(), x.end());
  labels.push_back(label);
}

void LabeledDataset::validate(std::uint32_t class_count) const {
  if (features.size() != labels.size() * input_dim) {
    throw DimensionError("dataset '" + id + "': feature rows != label count");
  }
  for (std::uint32_t y : labels) {
    if (y >= class_count) {
      throw DimensionError("dataset '" + id + "': label " + std::to_string(y) +
                           " out of range");
    }
  }
}

LabeledDataset concatenate(std::span<const LabeledDataset* const> parts,
                           std::string id) {
  LabeledDataset out;
  out.id = std::move(id);
  if (parts.empty()) return out;
  out.input_dim = parts.front()->input_dim;
  for (const LabeledDataset* part : parts) {
    if (part->input_dim != out.input_dim) {
      throw DimensionError("cannot concatenate datasets of different width");
    }
    out.features.insert(out.features.end(), part->features.begin(),
                        part->features.end());
    out.labels.insert(out.labels.end(), part->labels.begin(),
                      part->labels.end());
  }
  return out;
}

LossGradient loss_and_gradient(const ParameterVector& model,
                               const LabeledDataset& data) {
  check_compatible(model, data);
  if (data.empty()) throw std::invalid_argument("empty dataset");
  LossGradient out;
  auto rows = all_rows(data);
  out.loss = accumulate_gradient<float>(model.data(), model.architecture(),
                                        data, rows, &out.gradient);
  return out;
}

std::uint32_t predict(const ParameterVector& model, std::span<const float> x) {
  Forward<float> fw;
  forward<float>(model.data(), model.architecture(), x, fw);
  std::uint32_t best = 0;
  for (std::uint32_t k = 1; k < fw.logits.size(); ++k) {
    if (fw.logits[k] > fw.logits[best]) best = k;
  }
  return best;
}

ParameterVector train_local(const ParameterVector& base,
                            const LabeledDataset& data,
                            const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) {
    throw std::invalid_argument("cannot train on empty dataset '" + data.id +
                                "'");
  }
  check_compatible(base, data);

  ParameterVector model = base;
  const auto& arch = model.architecture();
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order = all_rows(data);
  std::vector<double> grad;
  for (std::uint32_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t len =
          std::min<std::size_t>(cfg.batch_size, order.size() - start);
      std::span<const std::size_t> batch(order.data() + start, len);
      accumulate_gradient<float>(model.data(), arch, data, batch, &grad);
      auto params = model.data();
      for (std::size_t i = 0; i < params.size(); ++i) {
        params[i] = static_cast<float>(static_cast<double>(params[i]) -
                                       cfg.learning_rate * grad[i]);
      }
    }
  }
  if (!model.all_finite()) {
    throw std::runtime_error("training on '" + data.id +
                             "' produced non-finite parameters");
  }
  return model;
}

ParameterVector gradient_update(const ParameterVector& local,
                                const ParameterVector& base) {
  if (!(local.architecture() == base.architecture()) ||
      local.size() != base.size()) {
    throw DimensionError("gradient_update: architectures differ");
  }
  std::vector<float> delta(local.size());
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = local[i] - base[i];
  return ParameterVector(local.architecture(), std::move(delta));
}

double evaluate(const ParameterVector& model, const LabeledDataset& test) {
  if (test.empty()) throw std::invalid_argument("empty test set");
  check_compatible(model, test);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < test.rows(); ++r) {
    if (predict(model, test.row(r)) == test.labels[r]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.rows());
}

double finite_difference_check(const ParameterVector& model,
                               const LabeledDataset& data, double epsilon) {
  check_compatible(model, data);
  if (data.empty()) throw std::invalid_argument("empty dataset");
  const auto& arch = model.architecture();
  std::vector<double> params(model.data().begin(), model.data().end());
  auto rows = all_rows(data);
  std::vector<double> analytic;
  accumulate_gradient<double>(params, arch, data, rows, &analytic);

  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + epsilon;
    const double up = accumulate_gradient<double>(params, arch, data, rows, nullptr);
    params[i] = saved - epsilon;
    const double down =
        accumulate_gradient<double>(params, arch, data, rows, nullptr);
    params[i] = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double scale =
        std::max({std::abs(numeric), std::abs(analytic[i]), kFdFloor});
    worst = std::max(worst, std::abs(numeric - analytic[i]) / scale);
  }
  return worst;
}

}  // namespace fedshap
