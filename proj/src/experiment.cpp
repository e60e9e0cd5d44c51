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

#include "fedshap/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fedshap/errors.hpp"
#include "fedshap/seed.hpp"

namespace fedshap {
namespace {

using nlohmann::json;

// Typed access to one JSON object with dotted-path error messages and
// rejection of unknown keys.
class FieldReader {
 public:
  FieldReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  std::uint64_t unsigned_int(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const auto& v = obj_.at(key);
    if (!v.is_number_unsigned()) {
      throw ConfigError(where(key) + ": expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const auto& v = obj_.at(key);
    if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    return v.get<double>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const auto& v = obj_.at(key);
    if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    if (!has(key)) return {};
    const auto& v = obj_.at(key);
    if (!v.is_array()) throw ConfigError(where(key) + ": expected an array");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError(where(key) + ": expected numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }

  const json* object(const std::string& key) {
    if (!has(key)) return nullptr;
    return &obj_.at(key);
  }

  void ignore(const std::string& key) { seen_.insert(key); }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) throw ConfigError(where(key) + ": unknown field");
    }
  }

  std::string where(const std::string& key = "") const {
    if (key.empty()) return path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t col = 1;
    const std::size_t limit = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < limit; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) +
                      ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

const std::set<std::string>& gtg_family() {
  static const std::set<std::string> names{"gtg", "gtg_ti", "gtg_tib", "gtg_oti"};
  return names;
}

void check_params(const std::string& name, const json& params) {
  if (!params.is_object()) {
    throw ConfigError("estimator '" + name + "': parameters must be an object");
  }
  if (gtg_family().count(name)) {
    (void)gtg_config_from(params, 0);
  } else if (name == "tmr") {
    (void)tmr_config_from(params);
  } else if (name == "tmc") {
    (void)tmc_config_from(params, 0);
  } else if (!params.empty()) {
    throw ConfigError("estimator '" + name + "' takes no parameters");
  }
}

std::string estimator_list() {
  std::string out;
  for (const auto& n : registered_estimators()) {
    if (!out.empty()) out += ", ";
    out += n;
  }
  return out;
}

ModelArchitecture architecture_for(const ExperimentConfig& cfg,
                                   const PreparedData& data) {
  ModelArchitecture arch = cfg.model;
  arch.input_dim = data.pool.input_dim;
  return arch;
}

}  // namespace

const std::vector<std::string>& registered_estimators() {
  static const std::vector<std::string> names{
      "gtg", "gtg_ti", "gtg_tib", "gtg_oti", "mr", "tmr", "tmc", "original"};
  return names;
}

void ExperimentConfig::validate() const {
  if (rounds < 1) throw ConfigError("rounds: must be >= 1");
  scenario.validate();
  if (scenario.n < 2) throw ConfigError("scenario.n: federation needs >= 2 participants");
  if (scenario.n > kMaxPlayers) throw ConfigError("scenario.n: too many participants");
  if (data.source != "synthetic" && data.source != "idx") {
    throw ConfigError("data.source: expected 'synthetic' or 'idx'");
  }
  if (data.source == "synthetic") {
    if (data.input_dim < 1) throw ConfigError("data.input_dim: must be >= 1");
    if (data.train_per_class < 1 || data.test_per_class < 1) {
      throw ConfigError("data: per-class counts must be >= 1");
    }
  } else if (data.train_images.empty() || data.train_labels.empty() ||
             data.test_images.empty() || data.test_labels.empty()) {
    throw ConfigError("data: idx source needs train/test image and label paths");
  }
  if (model.class_count < 2) throw ConfigError("model.class_count: must be >= 2");
  try {
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("train: ") + e.what());
  }
  if (ground_truth != "original" && ground_truth != "mr") {
    throw ConfigError("ground_truth: expected 'original' or 'mr'");
  }
  const auto& names = registered_estimators();
  for (const auto& est : estimators) {
    if (std::find(names.begin(), names.end(), est.name) == names.end()) {
      throw ConfigError("estimators: unknown estimator '" + est.name +
                        "' (registered: " + estimator_list() + ")");
    }
    check_params(est.name, est.params);
  }
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  const json doc = parse_json_text(text, origin);
  ExperimentConfig cfg;
  FieldReader root(doc, "");
  const auto schema = root.unsigned_int("schema", kConfigSchemaVersion);
  if (schema != kConfigSchemaVersion) {
    throw ConfigError("schema: version " + std::to_string(schema) +
                      " is not supported (expected " +
                      std::to_string(kConfigSchemaVersion) + ")");
  }
  cfg.seed = root.unsigned_int("seed", 0);
  cfg.rounds = root.unsigned_int("rounds", cfg.rounds);
  cfg.ground_truth = root.string("ground_truth", cfg.ground_truth);
  cfg.output_dir = root.string("output_dir", "");

  if (const json* d = root.object("data")) {
    FieldReader r(*d, "data");
    cfg.data.source = r.string("source", cfg.data.source);
    cfg.data.input_dim = static_cast<std::uint32_t>(r.unsigned_int("input_dim", cfg.data.input_dim));
    cfg.data.separation = r.number("separation", cfg.data.separation);
    cfg.data.spread = r.number("spread", cfg.data.spread);
    cfg.data.train_per_class = r.unsigned_int("train_per_class", cfg.data.train_per_class);
    cfg.data.test_per_class = r.unsigned_int("test_per_class", cfg.data.test_per_class);
    cfg.data.train_images = r.string("train_images", "");
    cfg.data.train_labels = r.string("train_labels", "");
    cfg.data.test_images = r.string("test_images", "");
    cfg.data.test_labels = r.string("test_labels", "");
    r.finish();
  }
  if (const json* s = root.object("scenario")) {
    FieldReader r(*s, "scenario");
    try {
      cfg.scenario.kind = parse_scenario_kind(r.string("kind", "same_dist_same_size"));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("scenario.kind: ") + e.what());
    }
    cfg.scenario.n = r.unsigned_int("n", cfg.scenario.n);
    cfg.scenario.params.skew = r.number("skew", cfg.scenario.params.skew);
    cfg.scenario.params.size_ratios = r.numbers("size_ratios");
    cfg.scenario.params.noise_rates = r.numbers("noise_rates");
    cfg.scenario.params.participant_size = r.unsigned_int("participant_size", 0);
    r.finish();
  }
  if (const json* m = root.object("model")) {
    FieldReader r(*m, "model");
    cfg.model.hidden_dim = static_cast<std::uint32_t>(r.unsigned_int("hidden_dim", 0));
    cfg.model.class_count = static_cast<std::uint32_t>(r.unsigned_int("class_count", 10));
    r.finish();
  }
  if (const json* t = root.object("train")) {
    FieldReader r(*t, "train");
    cfg.train.local_epochs = static_cast<std::uint32_t>(r.unsigned_int("local_epochs", cfg.train.local_epochs));
    cfg.train.batch_size = static_cast<std::uint32_t>(r.unsigned_int("batch_size", cfg.train.batch_size));
    cfg.train.learning_rate = r.number("learning_rate", cfg.train.learning_rate);
    r.finish();
  }
  if (root.has("estimators")) {
    const auto& list = doc.at("estimators");
    if (!list.is_array()) throw ConfigError("estimators: expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string path = "estimators[" + std::to_string(i) + "]";
      const auto& entry = list[i];
      EstimatorSpec spec;
      if (entry.is_string()) {
        spec.name = entry.get<std::string>();
      } else if (entry.is_object()) {
        if (!entry.contains("name") || !entry.at("name").is_string()) {
          throw ConfigError(path + ".name: expected a string");
        }
        spec.name = entry.at("name").get<std::string>();
        for (const auto& [key, value] : entry.items()) {
          if (key != "name") spec.params[key] = value;
        }
      } else {
        throw ConfigError(path + ": expected a name or an object");
      }
      const auto& names = registered_estimators();
      if (std::find(names.begin(), names.end(), spec.name) == names.end()) {
        throw ConfigError(path + ": unknown estimator '" + spec.name +
                          "' (registered: " + estimator_list() + ")");
      }
      try {
        check_params(spec.name, spec.params);
      } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
      }
      cfg.estimators.push_back(std::move(spec));
    }
  }
  root.finish();
  cfg.scenario.seed = derive_seeds(cfg.seed).scenario;
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_text(path), path.string());
}

json to_json(const ExperimentConfig& cfg) {
  json estimators = json::array();
  for (const auto& e : cfg.estimators) {
    json entry = e.params;
    entry["name"] = e.name;
    estimators.push_back(entry);
  }
  json data{{"source", cfg.data.source}};
  if (cfg.data.source == "synthetic") {
    data["input_dim"] = cfg.data.input_dim;
    data["separation"] = cfg.data.separation;
    data["spread"] = cfg.data.spread;
    data["train_per_class"] = cfg.data.train_per_class;
    data["test_per_class"] = cfg.data.test_per_class;
  } else {
    data["train_images"] = cfg.data.train_images;
    data["train_labels"] = cfg.data.train_labels;
    data["test_images"] = cfg.data.test_images;
    data["test_labels"] = cfg.data.test_labels;
  }
  json scenario{{"kind", std::string(to_string(cfg.scenario.kind))},
                {"n", cfg.scenario.n},
                {"skew", cfg.scenario.params.skew},
                {"participant_size", cfg.scenario.params.participant_size}};
  if (!cfg.scenario.params.size_ratios.empty()) {
    scenario["size_ratios"] = cfg.scenario.params.size_ratios;
  }
  if (!cfg.scenario.params.noise_rates.empty()) {
    scenario["noise_rates"] = cfg.scenario.params.noise_rates;
  }
  json out{{"schema", kConfigSchemaVersion},
           {"seed", cfg.seed},
           {"rounds", cfg.rounds},
           {"data", data},
           {"scenario", scenario},
           {"model", {{"hidden_dim", cfg.model.hidden_dim},
                      {"class_count", cfg.model.class_count}}},
           {"train", {{"local_epochs", cfg.train.local_epochs},
                      {"batch_size", cfg.train.batch_size},
                      {"learning_rate", cfg.train.learning_rate}}},
           {"ground_truth", cfg.ground_truth},
           {"estimators", estimators}};
  if (!cfg.output_dir.empty()) out["output_dir"] = cfg.output_dir;
  return out;
}

std::uint64_t ComponentSeeds::estimator(const std::string& name) const {
  return derive_seed(master, "estimator:" + name);
}

ComponentSeeds derive_seeds(std::uint64_t master) {
  ComponentSeeds s;
  s.master = master;
  s.source = derive_seed(master, "source");
  s.scenario = derive_seed(master, "scenario");
  s.participants = derive_seed(master, "participants");
  s.init = derive_seed(master, "init");
  s.training = derive_seed(master, "training");
  return s;
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  const auto seeds = derive_seeds(cfg.seed);
  PreparedData out;
  if (cfg.data.source == "synthetic") {
    SyntheticSource src;
    src.class_count = cfg.model.class_count;
    src.input_dim = cfg.data.input_dim;
    src.separation = cfg.data.separation;
    src.spread = cfg.data.spread;
    src.seed = seeds.source;
    auto [pool, test] = generate_source(src, cfg.data.train_per_class,
                                        cfg.data.test_per_class);
    out.pool = std::move(pool);
    out.test = std::move(test);
  } else {
    out.pool = load_idx(cfg.data.train_images, cfg.data.train_labels);
    out.test = load_idx(cfg.data.test_images, cfg.data.test_labels);
  }
  ScenarioSpec spec = cfg.scenario;
  spec.seed = seeds.scenario;
  out.participants = make_participants(
      partition(out.pool, spec, cfg.model.class_count), seeds.participants);
  return out;
}

GradientLog simulate(const ExperimentConfig& cfg, const PreparedData& data) {
  const auto seeds = derive_seeds(cfg.seed);
  TrainConfig train = cfg.train;
  train.seed = seeds.training;
  return run_federation(data.participants, architecture_for(cfg, data), train,
                        cfg.rounds, seeds.init);
}

GtgConfig gtg_config_from(const json& params, std::uint64_t seed) {
  FieldReader r(params, "params");
  GtgConfig c;
  c.eps_between = r.number("eps_between", c.eps_between);
  c.eps_within = r.number("eps_within", c.eps_within);
  c.guided_prefix = r.unsigned_int("guided_prefix", c.guided_prefix);
  c.max_perms_per_round = r.unsigned_int("max_perms_per_round", c.max_perms_per_round);
  c.window = r.unsigned_int("window", c.window);
  c.threshold = r.number("threshold", c.threshold);
  c.min_samples = r.unsigned_int("min_samples", c.min_samples);
  if (r.has("sampling")) c.sampling = parse_sampling_mode(r.string("sampling", ""));
  r.finish();
  if (c.eps_between < 0.0 || c.eps_within < 0.0) {
    throw ConfigError("params: truncation thresholds must be >= 0");
  }
  if (c.window < 1 || !(c.threshold > 0.0)) {
    throw ConfigError("params: window must be >= 1 and threshold > 0");
  }
  c.seed = seed;
  return c;
}

TmrConfig tmr_config_from(const json& params) {
  FieldReader r(params, "params");
  TmrConfig c;
  c.decay = r.number("decay", c.decay);
  c.round_threshold = r.number("round_threshold", c.round_threshold);
  r.finish();
  if (!(c.decay > 0.0 && c.decay <= 1.0)) throw ConfigError("params.decay: must lie in (0, 1]");
  return c;
}

TmcConfig tmc_config_from(const json& params, std::uint64_t seed) {
  FieldReader r(params, "params");
  TmcConfig c;
  c.eps_within = r.number("eps_within", c.eps_within);
  c.max_perms = r.unsigned_int("max_perms", c.max_perms);
  c.window = r.unsigned_int("window", c.window);
  c.threshold = r.number("threshold", c.threshold);
  c.min_samples = r.unsigned_int("min_samples", c.min_samples);
  if (r.has("sampling")) c.sampling = parse_sampling_mode(r.string("sampling", ""));
  r.finish();
  if (c.sampling == SamplingMode::kGuided) {
    throw ConfigError("params.sampling: tmc samples uniformly or by enumeration");
  }
  if (c.sampling != SamplingMode::kEnumeration && c.max_perms < c.min_samples) {
    throw ConfigError("params.max_perms: must be >= min_samples");
  }
  c.seed = seed;
  return c;
}

EstimatorReport run_estimator(const EstimatorSpec& spec,
                              const ExperimentConfig& cfg,
                              const GradientLog& log, const PreparedData& data) {
  const auto seeds = derive_seeds(cfg.seed);
  const std::uint64_t seed = seeds.estimator(spec.name);
  EstimatorReport report;
  if (spec.name == "gtg") {
    report = gtg_eval(log, data.test, gtg_config_from(spec.params, seed));
  } else if (spec.name == "gtg_ti") {
    report = gtg_ti(log, data.test, gtg_config_from(spec.params, seed));
  } else if (spec.name == "gtg_tib") {
    report = gtg_tib(log, data.test, gtg_config_from(spec.params, seed));
  } else if (spec.name == "gtg_oti") {
    report = gtg_oti(log, data.test, gtg_config_from(spec.params, seed));
  } else if (spec.name == "mr") {
    report = mr_eval(log, data.test);
  } else if (spec.name == "tmr") {
    report = tmr_eval(log, data.test, tmr_config_from(spec.params));
  } else if (spec.name == "original" || spec.name == "tmc") {
    TrainConfig train = cfg.train;
    train.seed = seeds.training;
    RetrainSetup setup{data.participants, architecture_for(cfg, data), train,
                       cfg.rounds, seeds.init};
    report = spec.name == "original"
                 ? original_shapley_eval(setup, data.test)
                 : tmc_shapley_eval(setup, data.test, tmc_config_from(spec.params, seed));
  } else {
    throw ConfigError("unknown estimator '" + spec.name +
                      "' (registered: " + estimator_list() + ")");
  }
  report.estimator = spec.name;
  return report;
}

std::string experiment_stem(const ExperimentConfig& cfg) {
  return std::string(to_string(cfg.scenario.kind)) + "_seed" + std::to_string(cfg.seed);
}

SimulateResult cmd_simulate(const ExperimentConfig& cfg,
                            const std::filesystem::path& out_dir) {
  cfg.validate();
  const auto data = prepare_data(cfg);
  const auto log = simulate(cfg, data);

  std::filesystem::create_directories(out_dir);
  SimulateResult result;
  result.log_path = out_dir / (experiment_stem(cfg) + ".gtgl");
  result.sidecar_path = result.log_path;
  result.sidecar_path += ".json";
  save_log(log, result.log_path);
  result.final_accuracy = evaluate(log.final_model(), data.test);

  const auto seeds = derive_seeds(cfg.seed);
  json sidecar{{"schema_version", kSidecarSchemaVersion},
               {"scenario", std::string(to_string(cfg.scenario.kind))},
               {"config", to_json(cfg)},
               {"seeds", {{"master", seeds.master},
                          {"source", seeds.source},
                          {"scenario", seeds.scenario},
                          {"participants", seeds.participants},
                          {"init", seeds.init},
                          {"training", seeds.training}}},
               {"participants", log.participants()},
               {"rounds", log.total_rounds()},
               {"parameter_count", log.architecture.parameter_count()},
               {"initial_accuracy", evaluate(log.initial_model(), data.test)},
               {"final_accuracy", result.final_accuracy}};
  write_text(result.sidecar_path, sidecar.dump(2) + "\n");
  return result;
}

EvaluateResult cmd_evaluate(const std::filesystem::path& log_path,
                            const std::string& estimator, const json& params) {
  const auto& names = registered_estimators();
  if (std::find(names.begin(), names.end(), estimator) == names.end()) {
    throw ConfigError("unknown estimator '" + estimator +
                      "' (registered: " + estimator_list() + ")");
  }
  check_params(estimator, params);
  const auto log = load_log(log_path);

  auto sidecar_path = log_path;
  sidecar_path += ".json";
  const json sidecar = parse_json_text(read_text(sidecar_path), sidecar_path.string());
  if (sidecar.value("schema_version", 0) != kSidecarSchemaVersion) {
    throw VersionMismatchError(sidecar_path.string() + ": unsupported sidecar version");
  }
  const auto cfg = parse_config(sidecar.at("config").dump(), sidecar_path.string());
  const auto data = prepare_data(cfg);
  if (data.participants.size() != log.participants()) {
    throw FormatError("log and its metadata disagree on participant count");
  }
  for (std::size_t i = 0; i < data.participants.size(); ++i) {
    if (data.participants[i].weight() != log.participant_weights[i]) {
      throw FormatError("log and its metadata disagree on participant weights");
    }
  }

  EvaluateResult result;
  result.report = run_estimator(EstimatorSpec{estimator, params}, cfg, log, data);
  auto stem = log_path;
  stem.replace_extension();
  result.report_path = stem;
  result.report_path += "." + estimator + ".report.json";
  json doc = to_json(result.report);
  doc["schema_version"] = kReportSchemaVersion;
  doc["log"] = log_path.filename().string();
  write_text(result.report_path, doc.dump(2) + "\n");
  return result;
}

CompareResult cmd_compare(const ExperimentConfig& cfg,
                          const std::filesystem::path& out_dir) {
  cfg.validate();
  if (cfg.estimators.empty()) throw ConfigError("estimators: list is empty");
  const std::size_t n = cfg.scenario.n;
  if (cfg.ground_truth == "original" && n > kMaxRetrainPlayers) {
    throw ConfigError("ground_truth 'original' supports at most " +
                      std::to_string(kMaxRetrainPlayers) + " participants, scenario.n = " +
                      std::to_string(n));
  }
  for (const auto& est : cfg.estimators) {
    if (est.name == "original" && n > kMaxRetrainPlayers) {
      throw ConfigError("estimator 'original' supports at most " +
                        std::to_string(kMaxRetrainPlayers) + " participants");
    }
    if ((est.name == "mr" || est.name == "tmr") && n > kMaxExactPlayers) {
      throw ConfigError("estimator '" + est.name + "' supports at most " +
                        std::to_string(kMaxExactPlayers) + " participants");
    }
    if (gtg_family().count(est.name)) gtg_config_from(est.params, 0).validate(n);
    if (est.name == "tmc" && tmc_config_from(est.params, 0).sampling ==
                                 SamplingMode::kEnumeration &&
        n > EnumerationSampler::kMaxPlayers) {
      throw ConfigError("estimator 'tmc': enumeration needs n <= " +
                        std::to_string(EnumerationSampler::kMaxPlayers));
    }
  }

  const auto data = prepare_data(cfg);
  const auto log = simulate(cfg, data);

  ReportMetadata meta;
  meta.scenario = std::string(to_string(cfg.scenario.kind));
  meta.seed = cfg.seed;
  meta.truth_estimator = cfg.ground_truth;
  meta.config = to_json(cfg);
  auto truth = run_estimator(EstimatorSpec{cfg.ground_truth, json::object()}, cfg, log, data);
  meta.truth = truth.total;

  CompareResult result;
  for (const auto& est : cfg.estimators) {
    auto report = est.name == cfg.ground_truth && est.params.empty()
                      ? truth
                      : run_estimator(est, cfg, log, data);
    result.rows.push_back(compare_to_truth(meta.truth, report));
    meta.reports.push_back(std::move(report));
  }
  if (std::none_of(cfg.estimators.begin(), cfg.estimators.end(),
                   [&](const EstimatorSpec& e) { return e.name == cfg.ground_truth; })) {
    meta.reports.insert(meta.reports.begin(), std::move(truth));
  }
  const auto doc = build_report(result.rows, meta);
  const auto dir = out_dir;
  result.json_path = write_report(doc, dir, experiment_stem(cfg));
  result.csv_path = dir / (experiment_stem(cfg) + ".csv");
  return result;
}

std::string cmd_report(std::span<const std::filesystem::path> report_paths) {
  if (report_paths.empty()) throw ConfigError("report: no input files");
  std::vector<json> docs;
  for (const auto& p : report_paths) {
    docs.push_back(parse_json_text(read_text(p), p.string()));
  }
  return format_summary(merge_reports(docs));
}

}  // namespace fedshap
