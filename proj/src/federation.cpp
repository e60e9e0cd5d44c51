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

#include "fedshap/federation.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

#include "fedshap/errors.hpp"
#include "fedshap/seed.hpp"

namespace fedshap {
namespace {

constexpr char kMagic[4] = {'G', 'T', 'G', 'L'};
// magic + version + 3 arch fields + n + T
constexpr std::size_t kHeaderBytes = 4 + 2 + 4 * 3 + 4 + 4;

class ByteWriter {
 public:
  void raw(const void* p, std::size_t len) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + len);
  }
  template <typename U>
  void le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }
  void floats(std::span<const float> values) {
    for (float f : values) le(std::bit_cast<std::uint32_t>(f));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }
  const std::vector<std::uint8_t>& bytes() const { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}

  template <typename U>
  U le() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<U>(in_[pos_ + i]) << (8 * i));
    }
    pos_ += sizeof(U);
    return v;
  }
  std::vector<float> floats(std::size_t count) {
    need(count * 4);
    std::vector<float> out(count);
    for (float& f : out) f = std::bit_cast<float>(le<std::uint32_t>());
    return out;
  }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t len) const {
    if (pos_ + len > in_.size()) throw FormatError("gradient log is truncated");
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

std::vector<Participant> make_participants(std::vector<LabeledDataset> datasets,
                                           std::uint64_t master_seed) {
  std::vector<Participant> out;
  out.reserve(datasets.size());
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    out.push_back(Participant{i, std::move(datasets[i]),
                              derive_seed(master_seed, std::uint64_t{i})});
  }
  return out;
}

const ParameterVector& GradientLog::initial_model() const {
  if (rounds.empty()) throw std::logic_error("gradient log has no rounds");
  return rounds.front().base_model;
}

const ParameterVector& GradientLog::final_model() const {
  if (rounds.empty()) throw std::logic_error("gradient log has no rounds");
  return rounds.back().aggregated;
}

void GradientLog::validate() const {
  const std::size_t p = architecture.parameter_count();
  for (std::size_t t = 0; t < rounds.size(); ++t) {
    const auto& r = rounds[t];
    if (r.round != t) throw FormatError("round indices are not contiguous");
    if (r.updates.size() != participants()) {
      throw FormatError("round " + std::to_string(t) + " lacks updates");
    }
    if (r.base_model.size() != p || r.aggregated.size() != p) {
      throw DimensionError("round " + std::to_string(t) + " model size");
    }
    for (const auto& u : r.updates) {
      if (u.size() != p) throw DimensionError("update size mismatch");
    }
    if (t + 1 < rounds.size() && !(rounds[t + 1].base_model == r.aggregated)) {
      throw FormatError("chain broken between rounds " + std::to_string(t) +
                        " and " + std::to_string(t + 1));
    }
  }
}

ParameterVector fedavg_aggregate(const ParameterVector& base,
                                 std::span<const ParameterVector> updates,
                                 std::span<const std::uint64_t> weights,
                                 Coalition members) {
  if (members.empty()) throw std::invalid_argument("empty update set");
  if (updates.size() != weights.size()) {
    throw DimensionError("update and weight counts differ");
  }
  const auto ids = members.members();
  if (ids.back() >= updates.size()) {
    throw std::out_of_range("coalition references unknown participant");
  }
  std::uint64_t total = 0;
  for (std::size_t id : ids) total += weights[id];
  if (total == 0) throw std::invalid_argument("zero total weight");

  const std::size_t p = base.size();
  std::vector<double> acc(p, 0.0);
  for (std::size_t id : ids) {
    const auto& u = updates[id];
    if (u.size() != p) throw DimensionError("update dimension mismatch");
    const double coef =
        static_cast<double>(weights[id]) / static_cast<double>(total);
    for (std::size_t k = 0; k < p; ++k) {
      acc[k] += coef * static_cast<double>(u[k]);
    }
  }
  std::vector<float> out(p);
  for (std::size_t k = 0; k < p; ++k) {
    out[k] = static_cast<float>(static_cast<double>(base[k]) + acc[k]);
  }
  return ParameterVector(base.architecture(), std::move(out));
}

ParameterVector fedavg_aggregate(
    const ParameterVector& base,
    const std::map<std::size_t, ParameterVector>& updates,
    const std::map<std::size_t, std::uint64_t>& weights) {
  if (updates.empty()) throw std::invalid_argument("empty update set");
  const std::size_t span = updates.rbegin()->first + 1;
  if (span > kMaxPlayers) throw CapacityError("participant id too large");
  std::vector<ParameterVector> dense(span, ParameterVector(base.architecture()));
  std::vector<std::uint64_t> w(span, 0);
  Coalition members;
  for (const auto& [id, u] : updates) {
    auto it = weights.find(id);
    if (it == weights.end()) {
      throw std::invalid_argument("missing weight for participant " +
                                  std::to_string(id));
    }
    dense[id] = u;
    w[id] = it->second;
    members = members.with(id);
  }
  return fedavg_aggregate(base, dense, w, members);
}

ParameterVector reconstruct_submodel(const RoundRecord& round,
                                     Coalition coalition,
                                     std::span<const std::uint64_t> weights) {
  if (coalition.empty()) {
    throw std::invalid_argument(
        "empty coalition has no reconstruction; use the base model");
  }
  return fedavg_aggregate(round.base_model, round.updates, weights, coalition);
}

GradientLog run_federation(std::span<const Participant> participants,
                           const ModelArchitecture& arch,
                           const TrainConfig& cfg, std::size_t rounds,
                           std::uint64_t init_seed) {
  if (participants.size() < 2) {
    throw std::invalid_argument("federation needs at least 2 participants");
  }
  if (participants.size() > kMaxPlayers) {
    throw CapacityError("too many participants");
  }
  if (rounds < 1) throw std::invalid_argument("federation needs >= 1 round");
  cfg.validate();
  arch.validate();

  GradientLog log;
  log.architecture = arch;
  for (std::size_t i = 0; i < participants.size(); ++i) {
    if (participants[i].id != i) {
      throw std::invalid_argument("participant ids must be 0..n-1 in order");
    }
    log.participant_weights.push_back(participants[i].weight());
  }
  const Coalition everyone = Coalition::Full(participants.size());

  ParameterVector model = ParameterVector::RandomUniform(arch, init_seed);
  for (std::size_t t = 0; t < rounds; ++t) {
    RoundRecord record;
    record.round = t;
    record.base_model = model;
    record.updates.reserve(participants.size());
    for (const auto& part : participants) {
      TrainConfig local = cfg;
      local.seed = derive_seed(part.seed, std::uint64_t{t});
      try {
        ParameterVector trained = train_local(model, part.dataset, local);
        record.updates.push_back(gradient_update(trained, model));
      } catch (const std::exception& e) {
        throw std::runtime_error("round " + std::to_string(t) +
                                 ", participant " + std::to_string(part.id) +
                                 ": " + e.what());
      }
    }
    record.aggregated = fedavg_aggregate(model, record.updates,
                                         log.participant_weights, everyone);
    model = record.aggregated;
    log.rounds.push_back(std::move(record));
  }
  return log;
}

std::vector<std::uint8_t> encode_log(const GradientLog& log) {
  log.validate();
  ByteWriter w;
  w.raw(kMagic, sizeof(kMagic));
  w.le<std::uint16_t>(kLogFormatVersion);
  w.le<std::uint32_t>(log.architecture.input_dim);
  w.le<std::uint32_t>(log.architecture.hidden_dim);
  w.le<std::uint32_t>(log.architecture.class_count);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(log.participants()));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(log.total_rounds()));
  for (std::uint64_t weight : log.participant_weights) w.le<std::uint64_t>(weight);
  for (const auto& r : log.rounds) {
    w.floats(r.base_model.data());
    for (const auto& u : r.updates) w.floats(u.data());
    w.floats(r.aggregated.data());
  }
  const std::uint32_t crc = crc32_of(w.bytes());
  w.le<std::uint32_t>(crc);
  return w.take();
}

GradientLog decode_log(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) throw FormatError("gradient log is truncated");
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a gradient log (bad magic)");
  }
  ByteReader r(bytes.subspan(sizeof(kMagic)));
  const auto version = r.le<std::uint16_t>();
  if (version != kLogFormatVersion) {
    throw VersionMismatchError("gradient log version " + std::to_string(version) +
                               " is not supported (expected " +
                               std::to_string(kLogFormatVersion) + ")");
  }
  GradientLog log;
  log.architecture.input_dim = r.le<std::uint32_t>();
  log.architecture.hidden_dim = r.le<std::uint32_t>();
  log.architecture.class_count = r.le<std::uint32_t>();
  const std::uint32_t n = r.le<std::uint32_t>();
  const std::uint32_t rounds = r.le<std::uint32_t>();
  log.architecture.validate();

  const std::size_t p = log.architecture.parameter_count();
  const std::size_t expected =
      kHeaderBytes + 8 * std::size_t{n} +
      std::size_t{rounds} * (std::size_t{n} + 2) * p * 4 + 4;
  if (bytes.size() < expected) throw FormatError("gradient log is truncated");
  if (bytes.size() > expected) throw FormatError("gradient log has trailing bytes");
  const auto payload = bytes.first(expected - 4);
  const std::uint32_t stored = ByteReader(bytes.last(4)).le<std::uint32_t>();
  if (stored != crc32_of(payload)) {
    throw ChecksumError("gradient log checksum mismatch");
  }

  for (std::uint32_t i = 0; i < n; ++i) {
    log.participant_weights.push_back(r.le<std::uint64_t>());
  }
  for (std::uint32_t t = 0; t < rounds; ++t) {
    RoundRecord rec;
    rec.round = t;
    rec.base_model = ParameterVector(log.architecture, r.floats(p));
    for (std::uint32_t i = 0; i < n; ++i) {
      rec.updates.emplace_back(log.architecture, r.floats(p));
    }
    rec.aggregated = ParameterVector(log.architecture, r.floats(p));
    log.rounds.push_back(std::move(rec));
  }
  log.validate();
  return log;
}

void save_log(const GradientLog& log, const std::filesystem::path& path) {
  const auto bytes = encode_log(log);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

GradientLog load_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_log(bytes);
}

}  // namespace fedshap
