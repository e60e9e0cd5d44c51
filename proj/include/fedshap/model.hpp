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

// Small deterministic classifiers: softmax regression (hidden_dim == 0) or a
// one-hidden-layer tanh MLP. Parameters are float32; reductions run in
// float64, sequentially over samples in index order.

#ifndef FEDSHAP_MODEL_HPP
#define FEDSHAP_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fedshap {

struct ModelArchitecture {
  std::uint32_t input_dim = 0;
  std::uint32_t hidden_dim = 0;
  std::uint32_t class_count = 10;

  // Parameter layout (row-major):
  //   hidden_dim == 0: W[class_count x input_dim], b[class_count]
  //   hidden_dim  > 0: W1[hidden x input], b1[hidden], W2[class x hidden], b2[class]
  std::size_t parameter_count() const;
  void validate() const;

  friend bool operator==(const ModelArchitecture&,
                         const ModelArchitecture&) = default;
};

class ParameterVector {
 public:
  ParameterVector() = default;
  // Zero-initialized.
  explicit ParameterVector(const ModelArchitecture& arch);
  ParameterVector(const ModelArchitecture& arch, std::vector<float> data);

  // Uniform in [-scale, scale].
  static ParameterVector RandomUniform(const ModelArchitecture& arch,
                                       std::uint64_t seed, float scale = 0.05F);

  const ModelArchitecture& architecture() const { return arch_; }
  std::size_t size() const { return data_.size(); }
  std::span<const float> data() const { return data_; }
  std::span<float> data() { return data_; }
  float operator[](std::size_t i) const { return data_[i]; }
  float& operator[](std::size_t i) { return data_[i]; }

  bool all_finite() const;

  friend bool operator==(const ParameterVector&,
                         const ParameterVector&) = default;

 private:
  ModelArchitecture arch_;
  std::vector<float> data_;
};

struct TrainConfig {
  std::uint32_t local_epochs = 1;
  std::uint32_t batch_size = 16;
  double learning_rate = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LabeledDataset {
  std::string id;
  std::uint32_t input_dim = 0;
  std::vector<float> features;  // row-major [rows x input_dim]
  std::vector<std::uint32_t> labels;

  std::size_t rows() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  std::span<const float> row(std::size_t r) const {
    return std::span<const float>(features).subspan(r * input_dim, input_dim);
  }
  void append_row(std::span<const float> x, std::uint32_t label);
  void validate(std::uint32_t class_count) const;
};

// Rows of `parts` concatenated in argument order.
LabeledDataset concatenate(std::span<const LabeledDataset* const> parts,
                           std::string id);

struct LossGradient {
  double loss = 0.0;               // mean cross-entropy
  std::vector<double> gradient;    // d(mean loss)/d(params)
};

LossGradient loss_and_gradient(const ParameterVector& model,
                               const LabeledDataset& data);

// Lowest class index wins ties.
std::uint32_t predict(const ParameterVector& model, std::span<const float> x);

ParameterVector train_local(const ParameterVector& base,
                            const LabeledDataset& data, const TrainConfig& cfg);

ParameterVector gradient_update(const ParameterVector& local,
                                const ParameterVector& base);

// Top-1 accuracy in [0, 1].
double evaluate(const ParameterVector& model, const LabeledDataset& test);

// Max relative error between the analytic gradient and central differences
// with step epsilon, computed in double precision. Test-harness only.
double finite_difference_check(const ParameterVector& model,
                               const LabeledDataset& data, double epsilon);

}  // namespace fedshap

#endif  // FEDSHAP_MODEL_HPP
