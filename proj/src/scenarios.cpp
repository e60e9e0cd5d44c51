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

#include "fedshap/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <stdexcept>

#include "fedshap/errors.hpp"
#include "fedshap/seed.hpp"

namespace fedshap {
namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
// Guards floor() against products such as 0.05 * 100 = 4.999...
constexpr double kFloorSlack = 1e-9;

std::size_t floor_count(double x) {
  return static_cast<std::size_t>(std::floor(x + kFloorSlack));
}

bool is_paired(ScenarioKind kind) {
  return kind != ScenarioKind::kSameDistSameSize;
}

// Shuffled row indices of each class.
std::vector<std::vector<std::size_t>> rows_by_class(const LabeledDataset& pool,
                                                    std::uint32_t class_count,
                                                    std::mt19937_64& rng) {
  std::vector<std::vector<std::size_t>> out(class_count);
  for (std::size_t r = 0; r < pool.rows(); ++r) {
    out.at(pool.labels[r]).push_back(r);
  }
  for (auto& rows : out) std::shuffle(rows.begin(), rows.end(), rng);
  return out;
}

// Draws counts[i][c] rows of class c for participant i, in participant order.
Partition draw(const LabeledDataset& pool,
               const std::vector<std::vector<std::size_t>>& counts,
               std::vector<std::vector<std::size_t>> by_class,
               std::string_view prefix) {
  const std::size_t classes = by_class.size();
  std::vector<std::size_t> demand(classes, 0);
  for (const auto& row : counts) {
    for (std::size_t c = 0; c < classes; ++c) demand[c] += row[c];
  }
  for (std::size_t c = 0; c < classes; ++c) {
    if (demand[c] > by_class[c].size()) {
      throw std::invalid_argument(
          "insufficient pool: class " + std::to_string(c) + " needs " +
          std::to_string(demand[c]) + " rows, pool has " +
          std::to_string(by_class[c].size()));
    }
  }
  Partition out;
  std::vector<std::size_t> cursor(classes, 0);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    LabeledDataset ds;
    ds.id = std::string(prefix) + "/p" + std::to_string(i);
    ds.input_dim = pool.input_dim;
    std::vector<std::size_t> taken;
    for (std::size_t c = 0; c < classes; ++c) {
      for (std::size_t k = 0; k < counts[i][c]; ++k) {
        taken.push_back(by_class[c][cursor[c]++]);
      }
    }
    // Interleave classes so mini-batches are not class-sorted before shuffling.
    std::sort(taken.begin(), taken.end());
    for (std::size_t r : taken) ds.append_row(pool.row(r), pool.labels[r]);
    out.datasets.push_back(std::move(ds));
    out.source_rows.push_back(std::move(taken));
  }
  return out;
}

std::vector<std::vector<std::size_t>> equal_balanced_counts(
    const ScenarioSpec& spec, const std::vector<std::vector<std::size_t>>& by_class) {
  const std::size_t classes = by_class.size();
  std::size_t size = spec.params.participant_size;
  if (size == 0) {
    std::size_t per_class = by_class.front().size();
    for (const auto& rows : by_class) per_class = std::min(per_class, rows.size());
    size = (per_class / spec.n) * classes;
    if (size == 0) throw std::invalid_argument("insufficient pool for partition");
  }
  std::vector<std::size_t> row(classes, size / classes);
  for (std::size_t c = 0; c < size % classes; ++c) ++row[c];
  return std::vector<std::vector<std::size_t>>(spec.n, row);
}

std::vector<std::vector<std::size_t>> skewed_counts(
    const ScenarioSpec& spec, std::size_t pool_rows, std::size_t classes) {
  if (classes < 3) throw std::invalid_argument("label skew needs >= 3 classes");
  const std::size_t size = spec.params.participant_size != 0
                               ? spec.params.participant_size
                               : pool_rows / spec.n;
  const std::size_t designated = floor_count(spec.params.skew * size / 2.0);
  const std::size_t rest = size - 2 * designated;
  const std::size_t others = classes - 2;
  std::vector<std::vector<std::size_t>> counts(spec.n,
                                               std::vector<std::size_t>(classes, 0));
  for (std::size_t i = 0; i < spec.n; ++i) {
    const std::size_t pair = i / 2;
    const std::size_t a = (2 * pair) % classes;
    const std::size_t b = (2 * pair + 1) % classes;
    counts[i][a] = designated;
    counts[i][b] = designated;
    // Leftover rows go round-robin starting just after the pair's classes, so
    // every class absorbs the same share of extras across pairs.
    for (std::size_t k = 0; k < others; ++k) {
      const std::size_t c = (2 * pair + 2 + k) % classes;
      counts[i][c] = rest / others + (k < rest % others ? 1 : 0);
    }
  }
  return counts;
}

std::vector<std::vector<std::size_t>> ratio_counts(
    const ScenarioSpec& spec, const std::vector<std::vector<std::size_t>>& by_class) {
  const auto ratios = spec.size_ratios();
  const double ratio_sum = std::accumulate(ratios.begin(), ratios.end(), 0.0);
  const std::size_t classes = by_class.size();
  std::vector<std::vector<std::size_t>> counts(spec.n,
                                               std::vector<std::size_t>(classes, 0));
  for (std::size_t c = 0; c < classes; ++c) {
    const double available = static_cast<double>(by_class[c].size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < spec.n; ++i) {
      counts[i][c] = floor_count(ratios[i] * available);
      assigned += counts[i][c];
    }
    const std::size_t target = floor_count(ratio_sum * available);
    for (std::size_t i = 0; assigned < target; i = (i + 1) % spec.n) {
      ++counts[i][c];
      ++assigned;
    }
  }
  return counts;
}

void flip_labels(Partition& part, const std::vector<double>& rates,
                 std::uint32_t class_count, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < part.datasets.size(); ++i) {
    auto& ds = part.datasets[i];
    const auto flips = static_cast<std::size_t>(
        std::llround(rates[i] * static_cast<double>(ds.rows())));
    std::vector<std::size_t> idx(ds.rows());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    std::uniform_int_distribution<std::uint32_t> other(0, class_count - 2);
    for (std::size_t k = 0; k < flips; ++k) {
      auto& label = ds.labels[idx[k]];
      const std::uint32_t draw = other(rng);
      label = draw >= label ? draw + 1 : draw;
    }
  }
}

void add_feature_noise(Partition& part, const LabeledDataset& pool,
                       const std::vector<double>& rates, std::mt19937_64& rng) {
  const std::size_t d = pool.input_dim;
  std::vector<double> mean(d, 0.0);
  std::vector<double> sq(d, 0.0);
  for (std::size_t r = 0; r < pool.rows(); ++r) {
    auto x = pool.row(r);
    for (std::size_t j = 0; j < d; ++j) mean[j] += x[j];
  }
  for (double& m : mean) m /= static_cast<double>(pool.rows());
  for (std::size_t r = 0; r < pool.rows(); ++r) {
    auto x = pool.row(r);
    for (std::size_t j = 0; j < d; ++j) sq[j] += (x[j] - mean[j]) * (x[j] - mean[j]);
  }
  std::vector<double> stddev(d);
  for (std::size_t j = 0; j < d; ++j) {
    stddev[j] = std::sqrt(sq[j] / static_cast<double>(pool.rows()));
  }
  for (std::size_t i = 0; i < part.datasets.size(); ++i) {
    if (rates[i] == 0.0) continue;
    auto& ds = part.datasets[i];
    for (std::size_t r = 0; r < ds.rows(); ++r) {
      for (std::size_t j = 0; j < d; ++j) {
        std::normal_distribution<double> noise(0.0, rates[i] * stddev[j]);
        auto& v = ds.features[r * d + j];
        v = static_cast<float>(v + noise(rng));
      }
    }
  }
}

std::uint32_t read_be32(std::istream& in, const std::string& what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw FormatError(what + ": truncated header");
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) |
         (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

}  // namespace

std::vector<std::vector<double>> SyntheticSource::class_means() const {
  std::mt19937_64 rng(derive_seed(seed, "class-means"));
  std::normal_distribution<double> coord(0.0, separation);
  std::vector<std::vector<double>> means(class_count, std::vector<double>(input_dim));
  for (auto& m : means) {
    for (double& v : m) v = coord(rng);
  }
  for (std::size_t a = 0; a < means.size(); ++a) {
    for (std::size_t b = a + 1; b < means.size(); ++b) {
      if (means[a] == means[b]) throw std::logic_error("class means coincide");
    }
  }
  return means;
}

std::pair<LabeledDataset, LabeledDataset> generate_source(
    const SyntheticSource& source, std::size_t train_per_class,
    std::size_t test_per_class) {
  if (train_per_class < 1 || test_per_class < 1) {
    throw std::invalid_argument("per-class counts must be >= 1");
  }
  if (source.class_count < 2 || source.input_dim < 1) {
    throw std::invalid_argument("synthetic source needs >= 2 classes and >= 1 feature");
  }
  const auto means = source.class_means();
  std::mt19937_64 rng(derive_seed(source.seed, "samples"));
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::vector<float> x(source.input_dim);
  auto fill = [&](LabeledDataset& ds, std::size_t per_class) {
    ds.input_dim = source.input_dim;
    for (std::size_t s = 0; s < per_class; ++s) {
      for (std::uint32_t c = 0; c < source.class_count; ++c) {
        for (std::size_t j = 0; j < x.size(); ++j) {
          x[j] = static_cast<float>(means[c][j] + source.spread * jitter(rng));
        }
        ds.append_row(x, c);
      }
    }
  };
  LabeledDataset train;
  train.id = "synthetic/train";
  LabeledDataset test;
  test.id = "synthetic/test";
  fill(train, train_per_class);
  fill(test, test_per_class);
  return {std::move(train), std::move(test)};
}

std::string_view to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::kSameDistSameSize: return "same_dist_same_size";
    case ScenarioKind::kDiffDistSameSize: return "diff_dist_same_size";
    case ScenarioKind::kSameDistDiffSize: return "same_dist_diff_size";
    case ScenarioKind::kNoisyLabels: return "noisy_labels";
    case ScenarioKind::kNoisyFeatures: return "noisy_features";
  }
  return "unknown";
}

ScenarioKind parse_scenario_kind(std::string_view name) {
  for (auto kind : {ScenarioKind::kSameDistSameSize, ScenarioKind::kDiffDistSameSize,
                    ScenarioKind::kSameDistDiffSize, ScenarioKind::kNoisyLabels,
                    ScenarioKind::kNoisyFeatures}) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown scenario kind '" + std::string(name) + "'");
}

std::vector<double> default_size_ratios(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 0.10 + 0.05 * static_cast<double>(i / 2);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& v : w) v /= total;
  return w;
}

std::vector<double> default_noise_rates(std::size_t n) {
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) r[i] = 0.05 * static_cast<double>(i / 2);
  return r;
}

std::vector<double> ScenarioSpec::size_ratios() const {
  return params.size_ratios.empty() ? default_size_ratios(n) : params.size_ratios;
}

std::vector<double> ScenarioSpec::noise_rates() const {
  return params.noise_rates.empty() ? default_noise_rates(n) : params.noise_rates;
}

void ScenarioSpec::validate() const {
  if (n < 1) throw ConfigError("scenario needs >= 1 participant");
  if (is_paired(kind) && n % 2 != 0) {
    throw ConfigError("scenario '" + std::string(to_string(kind)) +
                      "' configures participants in pairs; n must be even");
  }
  if (!(params.skew >= 0.0 && params.skew <= 1.0)) {
    throw ConfigError("skew must lie in [0, 1]");
  }
  auto check_schedule = [&](const std::vector<double>& v, const char* name) {
    if (v.size() != n) {
      throw ConfigError(std::string(name) + " needs one entry per participant");
    }
    for (double x : v) {
      if (!(x >= 0.0 && x <= 1.0)) {
        throw ConfigError(std::string(name) + " entries must lie in [0, 1]");
      }
    }
  };
  check_schedule(size_ratios(), "size_ratios");
  check_schedule(noise_rates(), "noise_rates");
  const auto ratios = size_ratios();
  if (std::accumulate(ratios.begin(), ratios.end(), 0.0) > 1.0 + kFloorSlack) {
    throw ConfigError("size_ratios sum exceeds 1");
  }
}

Partition partition_with_provenance(const LabeledDataset& pool,
                                    const ScenarioSpec& spec,
                                    std::uint32_t class_count) {
  spec.validate();
  pool.validate(class_count);
  std::mt19937_64 rng(derive_seed(spec.seed, "partition"));
  auto by_class = rows_by_class(pool, class_count, rng);
  const std::string prefix(to_string(spec.kind));

  // Counts are computed before by_class is moved into draw().
  std::vector<std::vector<std::size_t>> counts;
  switch (spec.kind) {
    case ScenarioKind::kDiffDistSameSize:
      counts = skewed_counts(spec, pool.rows(), class_count);
      break;
    case ScenarioKind::kSameDistDiffSize:
      counts = ratio_counts(spec, by_class);
      break;
    default:
      counts = equal_balanced_counts(spec, by_class);
      break;
  }
  auto part = draw(pool, counts, std::move(by_class), prefix);

  switch (spec.kind) {
    case ScenarioKind::kSameDistSameSize:
    case ScenarioKind::kDiffDistSameSize:
    case ScenarioKind::kSameDistDiffSize:
      return part;
    case ScenarioKind::kNoisyLabels: {
      std::mt19937_64 noise_rng(derive_seed(spec.seed, "label-noise"));
      flip_labels(part, spec.noise_rates(), class_count, noise_rng);
      return part;
    }
    case ScenarioKind::kNoisyFeatures: {
      std::mt19937_64 noise_rng(derive_seed(spec.seed, "feature-noise"));
      add_feature_noise(part, pool, spec.noise_rates(), noise_rng);
      return part;
    }
  }
  throw std::logic_error("unhandled scenario kind");
}

std::vector<LabeledDataset> partition(const LabeledDataset& pool,
                                      const ScenarioSpec& spec,
                                      std::uint32_t class_count) {
  return partition_with_provenance(pool, spec, class_count).datasets;
}

LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path) {
  std::ifstream images(images_path, std::ios::binary);
  if (!images) throw std::runtime_error("cannot open " + images_path.string());
  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) throw std::runtime_error("cannot open " + labels_path.string());

  const std::string img_name = images_path.string();
  const std::string lbl_name = labels_path.string();
  if (read_be32(images, img_name) != kIdxImagesMagic) {
    throw FormatError(img_name + ": bad IDX image magic");
  }
  const std::uint32_t count = read_be32(images, img_name);
  const std::uint32_t rows = read_be32(images, img_name);
  const std::uint32_t cols = read_be32(images, img_name);
  if (read_be32(labels, lbl_name) != kIdxLabelsMagic) {
    throw FormatError(lbl_name + ": bad IDX label magic");
  }
  const std::uint32_t label_count = read_be32(labels, lbl_name);
  if (label_count != count) {
    throw FormatError("IDX count mismatch: " + std::to_string(count) +
                      " images vs " + std::to_string(label_count) + " labels");
  }

  LabeledDataset out;
  out.id = images_path.filename().string();
  out.input_dim = rows * cols;
  std::vector<unsigned char> pixels(std::size_t{rows} * cols * count);
  if (!images.read(reinterpret_cast<char*>(pixels.data()),
                   static_cast<std::streamsize>(pixels.size()))) {
    throw FormatError(img_name + ": truncated pixel data");
  }
  std::vector<unsigned char> raw_labels(count);
  if (!labels.read(reinterpret_cast<char*>(raw_labels.data()),
                   static_cast<std::streamsize>(raw_labels.size()))) {
    throw FormatError(lbl_name + ": truncated label data");
  }
  out.features.reserve(pixels.size());
  for (unsigned char p : pixels) out.features.push_back(static_cast<float>(p) / 255.0F);
  out.labels.assign(raw_labels.begin(), raw_labels.end());
  return out;
}

void write_idx(const LabeledDataset& data, std::uint32_t image_rows,
               std::uint32_t image_cols,
               const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path) {
  if (std::size_t{image_rows} * image_cols != data.input_dim) {
    throw DimensionError("image shape does not match input_dim");
  }
  std::ofstream images(images_path, std::ios::binary | std::ios::trunc);
  std::ofstream labels(labels_path, std::ios::binary | std::ios::trunc);
  if (!images || !labels) throw std::runtime_error("cannot open IDX output files");
  write_be32(images, kIdxImagesMagic);
  write_be32(images, static_cast<std::uint32_t>(data.rows()));
  write_be32(images, image_rows);
  write_be32(images, image_cols);
  for (float v : data.features) {
    const long q = std::lround(std::clamp(v, 0.0F, 1.0F) * 255.0F);
    images.put(static_cast<char>(q));
  }
  write_be32(labels, kIdxLabelsMagic);
  write_be32(labels, static_cast<std::uint32_t>(data.rows()));
  for (std::uint32_t y : data.labels) labels.put(static_cast<char>(y));
  if (!images || !labels) throw std::runtime_error("failed writing IDX files");
}

}  // namespace fedshap
