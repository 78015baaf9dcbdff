// Copyright 2026 The clpriv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "clpriv/harness.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <set>
#include <thread>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "clpriv/aia.h"
#include "clpriv/checkpoint.h"
#include "clpriv/csv.h"
#include "clpriv/random.h"
#include "clpriv/status_macros.h"
#include "json.hpp"

#ifndef CLPRIV_VERSION_STRING
#define CLPRIV_VERSION_STRING "0.0.0"
#endif

namespace clpriv {

using json = nlohmann::json;

std::string VersionString() { return CLPRIV_VERSION_STRING; }

// ---------------------------------------------------------------------------
// Strict JSON reading.

namespace {

class ObjectReader {
 public:
  ObjectReader(const json& object, std::string path)
      : object_(object), path_(std::move(path)) {}

  absl::Status CheckObject() const {
    if (!object_.is_object()) {
      return absl::InvalidArgumentError(absl::StrCat(path_, " must be an object"));
    }
    return absl::OkStatus();
  }

  bool Has(const std::string& key) const { return object_.contains(key); }

  const json* Find(const std::string& key) {
    seen_.insert(key);
    const auto it = object_.find(key);
    return it == object_.end() ? nullptr : &*it;
  }

  std::string Path(const std::string& key) const {
    return path_.empty() ? key : absl::StrCat(path_, ".", key);
  }

  template <typename T>
  absl::Status Get(const std::string& key, T& out) {
    const json* value = Find(key);
    if (value == nullptr) return absl::OkStatus();
    return Convert(*value, Path(key), out);
  }

  template <typename T>
  absl::Status GetOptional(const std::string& key, std::optional<T>& out) {
    const json* value = Find(key);
    if (value == nullptr || value->is_null()) return absl::OkStatus();
    T parsed{};
    RETURN_IF_ERROR(Convert(*value, Path(key), parsed));
    out = parsed;
    return absl::OkStatus();
  }

  absl::Status Finish() const {
    for (auto it = object_.begin(); it != object_.end(); ++it) {
      if (!seen_.count(it.key())) {
        return absl::InvalidArgumentError(
            absl::StrCat("unknown configuration key '", Path(it.key()), "'"));
      }
    }
    return absl::OkStatus();
  }

  static absl::Status Convert(const json& v, const std::string& path, int& out) {
    if (!v.is_number_integer()) return TypeError(path, "an integer");
    const auto wide = v.get<int64_t>();
    if (wide < INT32_MIN || wide > INT32_MAX) return TypeError(path, "a 32-bit integer");
    out = static_cast<int>(wide);
    return absl::OkStatus();
  }
  static absl::Status Convert(const json& v, const std::string& path, uint64_t& out) {
    if (!v.is_number_unsigned()) return TypeError(path, "a non-negative integer");
    out = v.get<uint64_t>();
    return absl::OkStatus();
  }
  static absl::Status Convert(const json& v, const std::string& path, double& out) {
    if (!v.is_number()) return TypeError(path, "a number");
    out = v.get<double>();
    return absl::OkStatus();
  }
  static absl::Status Convert(const json& v, const std::string& path, bool& out) {
    if (!v.is_boolean()) return TypeError(path, "a boolean");
    out = v.get<bool>();
    return absl::OkStatus();
  }
  static absl::Status Convert(const json& v, const std::string& path, std::string& out) {
    if (!v.is_string()) return TypeError(path, "a string");
    out = v.get<std::string>();
    return absl::OkStatus();
  }
  template <typename T>
  static absl::Status Convert(const json& v, const std::string& path, std::vector<T>& out) {
    if (!v.is_array()) return TypeError(path, "an array");
    out.clear();
    for (size_t i = 0; i < v.size(); ++i) {
      T element{};
      RETURN_IF_ERROR(Convert(v[i], absl::StrCat(path, "[", i, "]"), element));
      out.push_back(std::move(element));
    }
    return absl::OkStatus();
  }

 private:
  static absl::Status TypeError(const std::string& path, const char* expected) {
    return absl::InvalidArgumentError(absl::StrCat(path, " must be ", expected));
  }

  const json& object_;
  std::string path_;
  std::set<std::string> seen_;
};

absl::StatusOr<json> ParseJson(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    return absl::InvalidArgumentError(absl::StrCat("malformed JSON: ", e.what()));
  }
}

std::string SamplingName(BatchSampling sampling) {
  return sampling == BatchSampling::kUniform ? "uniform" : "sequential";
}

absl::StatusOr<BatchSampling> ParseSampling(const std::string& name) {
  if (name == "uniform") return BatchSampling::kUniform;
  if (name == "sequential") return BatchSampling::kSequential;
  return absl::InvalidArgumentError(absl::StrCat("unknown batch sampling '", name, "'"));
}

absl::Status ParseSynth(const json& j, SynthParams& p) {
  ObjectReader r(j, "dataset.synth");
  RETURN_IF_ERROR(r.CheckObject());
  RETURN_IF_ERROR(r.Get("n", p.n));
  RETURN_IF_ERROR(r.Get("dim", p.dim));
  RETURN_IF_ERROR(r.Get("class_count", p.class_count));
  RETURN_IF_ERROR(r.Get("cluster_spread", p.cluster_spread));
  RETURN_IF_ERROR(r.Get("flip_noise", p.flip_noise));
  RETURN_IF_ERROR(r.Get("sensitive_count", p.sensitive_count));
  RETURN_IF_ERROR(r.Get("sensitive_block", p.sensitive_block));
  return r.Finish();
}

absl::Status ParseDataset(const json& j, DatasetSource& source) {
  ObjectReader r(j, "dataset");
  RETURN_IF_ERROR(r.CheckObject());
  if (const json* synth = r.Find("synth")) {
    SynthParams params;
    RETURN_IF_ERROR(ParseSynth(*synth, params));
    source.synth = params;
  }
  if (const json* csv = r.Find("csv")) {
    ObjectReader c(*csv, "dataset.csv");
    RETURN_IF_ERROR(c.CheckObject());
    CsvSource src;
    RETURN_IF_ERROR(c.Get("path", src.path));
    RETURN_IF_ERROR(c.Get("label_column", src.schema.label_column));
    RETURN_IF_ERROR(c.GetOptional("sensitive_column", src.schema.sensitive_column));
    RETURN_IF_ERROR(c.Finish());
    source.csv = src;
  }
  return r.Finish();
}

absl::Status ParseSplit(const json& j,
                        std::vector<std::pair<SplitName, double>>& split) {
  if (!j.is_object()) return absl::InvalidArgumentError("split must be an object");
  split.clear();
  // Keep the canonical split order regardless of key order in the file.
  for (const SplitName name : kAllSplitNames) {
    const std::string key = SplitNameString(name);
    if (!j.contains(key)) continue;
    double fraction = 0.0;
    RETURN_IF_ERROR(ObjectReader::Convert(j.at(key), "split." + key, fraction));
    split.emplace_back(name, fraction);
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!ParseSplitName(it.key()).ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("unknown configuration key 'split.", it.key(), "'"));
    }
  }
  return absl::OkStatus();
}

bool Contains(const std::vector<std::string>& list, const std::string& item) {
  return std::find(list.begin(), list.end(), item) != list.end();
}

template <size_t N>
bool OneOf(const std::array<const char*, N>& names, const std::string& item) {
  return std::any_of(names.begin(), names.end(),
                     [&item](const char* n) { return item == n; });
}

}  // namespace

absl::Status ExperimentConfig::Validate() const {
  if (experiment_id.empty() ||
      experiment_id.find_first_not_of("abcdefghijklmnopqrstuvwxyz"
                                      "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-") !=
          std::string::npos) {
    return absl::FailedPreconditionError(
        "experiment_id must be non-empty and use only [A-Za-z0-9_-]");
  }
  if (dataset.synth.has_value() == dataset.csv.has_value()) {
    return absl::FailedPreconditionError(
        "dataset needs exactly one of 'synth' or 'csv'");
  }
  if (dataset.synth.has_value()) RETURN_IF_ERROR(dataset.synth->Validate());
  SplitPlan plan{split, 0};
  RETURN_IF_ERROR(plan.Validate());
  auto has_split = [this](SplitName name) {
    return std::any_of(split.begin(), split.end(), [name](const auto& entry) {
      return entry.first == name && entry.second > 0.0;
    });
  };
  if (!has_split(SplitName::kTargetTrain) || !has_split(SplitName::kTest)) {
    return absl::FailedPreconditionError("split needs target_train and test");
  }
  for (const int h : hidden) {
    if (h < 1) return absl::FailedPreconditionError("hidden widths must be >= 1");
  }
  if (hidden.empty()) {
    return absl::FailedPreconditionError("model needs at least one hidden layer");
  }
  TrainConfig plain = train;
  plain.optimizer = Optimizer::kSgd;
  plain.dp_clip.reset();
  plain.dp_noise.reset();
  RETURN_IF_ERROR(plain.Validate());
  if (train.epochs < 1) return absl::FailedPreconditionError("train.epochs must be >= 1");
  if (regimes.empty()) return absl::FailedPreconditionError("regimes must not be empty");
  std::set<std::string> unique;
  for (const std::string& r : regimes) {
    if (!OneOf(kRegimeNames, r)) {
      return absl::FailedPreconditionError(absl::StrCat("unknown regime '", r, "'"));
    }
    if (!unique.insert(r).second) {
      return absl::FailedPreconditionError(absl::StrCat("duplicate regime '", r, "'"));
    }
  }
  unique.clear();
  for (const std::string& a : attacks) {
    if (!OneOf(kAttackNames, a)) {
      return absl::FailedPreconditionError(absl::StrCat("unknown attack '", a, "'"));
    }
    if (!unique.insert(a).second) {
      return absl::FailedPreconditionError(absl::StrCat("duplicate attack '", a, "'"));
    }
  }
  if (!(pacing.start_fraction > 0.0 && pacing.start_fraction <= 1.0) ||
      !(pacing.growth > 1.0) || pacing.step_length < 0) {
    return absl::FailedPreconditionError("invalid pacing parameters");
  }
  RETURN_IF_ERROR(attack_train.Validate());
  if (shadow_count < 1 || reference_count < 1) {
    return absl::FailedPreconditionError("shadow_count and reference_count must be >= 1");
  }
  if (Contains(attacks, "label_only")) RETURN_IF_ERROR(label_only.Validate());
  RETURN_IF_ERROR(defense.Validate());
  if (!attacks.empty() && !has_split(SplitName::kShadowTrain)) {
    return absl::FailedPreconditionError("attacks need a shadow_train split");
  }
  if (aia && !has_split(SplitName::kShadowTrain)) {
    return absl::FailedPreconditionError("aia uses shadow_train as auxiliary data");
  }
  if ((Contains(attacks, "diffcali") || Contains(regimes, "transfer")) &&
      !has_split(SplitName::kReference1)) {
    return absl::FailedPreconditionError(
        "diffcali and transfer need a reference_1 split");
  }
  if (defense.kind == DefenseKind::kMemGuard && !Contains(attacks, "nn")) {
    return absl::FailedPreconditionError("memguard defends the nn attack; add it");
  }
  if (memorization.enabled) {
    if (!(memorization.holdout_fraction > 0.0 && memorization.holdout_fraction < 1.0)) {
      return absl::FailedPreconditionError("memorization.holdout_fraction must be in (0, 1)");
    }
    if (memorization.seed_count < 1 || memorization.scenarios.empty()) {
      return absl::FailedPreconditionError("memorization needs scenarios and seed_count >= 1");
    }
  }
  if (shapley.enabled && (shapley.k < 1 || shapley.validation_size < 1)) {
    return absl::FailedPreconditionError("shapley.k and validation_size must be >= 1");
  }
  if (levels < 1) return absl::FailedPreconditionError("levels must be >= 1");
  for (const double f : fpr_grid) {
    if (!(f > 0.0 && f <= 1.0)) {
      return absl::FailedPreconditionError("fpr_grid values must be in (0, 1]");
    }
  }
  if (repeat < 1) return absl::FailedPreconditionError("repeat must be >= 1");
  if (jobs < 1) return absl::FailedPreconditionError("jobs must be >= 1");
  return absl::OkStatus();
}

absl::StatusOr<ExperimentConfig> ParseExperimentConfig(const std::string& json_text) {
  ASSIGN_OR_RETURN(const json root, ParseJson(json_text));
  ExperimentConfig c;
  ObjectReader r(root, "");
  RETURN_IF_ERROR(r.CheckObject());
  RETURN_IF_ERROR(r.Get("experiment_id", c.experiment_id));
  if (const json* d = r.Find("dataset")) RETURN_IF_ERROR(ParseDataset(*d, c.dataset));
  if (const json* s = r.Find("split")) RETURN_IF_ERROR(ParseSplit(*s, c.split));
  if (const json* m = r.Find("model")) {
    ObjectReader mr(*m, "model");
    RETURN_IF_ERROR(mr.CheckObject());
    RETURN_IF_ERROR(mr.Get("hidden", c.hidden));
    RETURN_IF_ERROR(mr.Finish());
  }
  if (const json* t = r.Find("train")) {
    ObjectReader tr(*t, "train");
    RETURN_IF_ERROR(tr.CheckObject());
    RETURN_IF_ERROR(tr.Get("epochs", c.train.epochs));
    RETURN_IF_ERROR(tr.Get("batch_size", c.train.batch_size));
    RETURN_IF_ERROR(tr.Get("learning_rate", c.train.learning_rate));
    RETURN_IF_ERROR(tr.Finish());
  }
  RETURN_IF_ERROR(r.Get("regimes", c.regimes));
  if (const json* p = r.Find("pacing")) {
    ObjectReader pr(*p, "pacing");
    RETURN_IF_ERROR(pr.CheckObject());
    RETURN_IF_ERROR(pr.Get("start_fraction", c.pacing.start_fraction));
    RETURN_IF_ERROR(pr.Get("growth", c.pacing.growth));
    RETURN_IF_ERROR(pr.Get("step_length", c.pacing.step_length));
    std::string sampling = SamplingName(c.pacing.sampling);
    RETURN_IF_ERROR(pr.Get("sampling", sampling));
    ASSIGN_OR_RETURN(c.pacing.sampling, ParseSampling(sampling));
    RETURN_IF_ERROR(pr.Finish());
  }
  RETURN_IF_ERROR(r.Get("attacks", c.attacks));
  if (const json* a = r.Find("attack_train")) {
    ObjectReader ar(*a, "attack_train");
    RETURN_IF_ERROR(ar.CheckObject());
    RETURN_IF_ERROR(ar.Get("epochs", c.attack_train.epochs));
    RETURN_IF_ERROR(ar.Get("batch_size", c.attack_train.batch_size));
    RETURN_IF_ERROR(ar.Get("learning_rate", c.attack_train.learning_rate));
    std::string optimizer = AttackOptimizerName(c.attack_train.optimizer);
    RETURN_IF_ERROR(ar.Get("optimizer", optimizer));
    ASSIGN_OR_RETURN(c.attack_train.optimizer, ParseAttackOptimizer(optimizer));
    RETURN_IF_ERROR(ar.Finish());
  }
  RETURN_IF_ERROR(r.Get("shadow_count", c.shadow_count));
  RETURN_IF_ERROR(r.Get("reference_count", c.reference_count));
  if (const json* l = r.Find("label_only")) {
    ObjectReader lr(*l, "label_only");
    RETURN_IF_ERROR(lr.CheckObject());
    RETURN_IF_ERROR(lr.Get("noise_grid", c.label_only.noise_grid));
    RETURN_IF_ERROR(lr.Get("trials_per_level", c.label_only.trials_per_level));
    RETURN_IF_ERROR(lr.Finish());
  }
  if (const json* d = r.Find("defense")) {
    ObjectReader dr(*d, "defense");
    RETURN_IF_ERROR(dr.CheckObject());
    std::string kind = DefenseKindName(c.defense.kind);
    RETURN_IF_ERROR(dr.Get("kind", kind));
    ASSIGN_OR_RETURN(c.defense.kind, ParseDefenseKind(kind));
    std::optional<double> clip;
    std::optional<double> noise;
    RETURN_IF_ERROR(dr.GetOptional("dp_clip", clip));
    RETURN_IF_ERROR(dr.GetOptional("dp_noise", noise));
    if (clip.has_value() != noise.has_value()) {
      return absl::InvalidArgumentError("defense needs both dp_clip and dp_noise");
    }
    if (clip.has_value()) c.defense.dp = DpParams{*clip, *noise};
    RETURN_IF_ERROR(dr.GetOptional("memguard_budget", c.defense.memguard_budget));
    RETURN_IF_ERROR(dr.Finish());
  }
  if (const json* a = r.Find("aia")) {
    ObjectReader ar(*a, "aia");
    RETURN_IF_ERROR(ar.CheckObject());
    RETURN_IF_ERROR(ar.Get("enabled", c.aia));
    RETURN_IF_ERROR(ar.Finish());
  }
  if (const json* m = r.Find("memorization")) {
    ObjectReader mr(*m, "memorization");
    RETURN_IF_ERROR(mr.CheckObject());
    RETURN_IF_ERROR(mr.Get("enabled", c.memorization.enabled));
    RETURN_IF_ERROR(mr.Get("holdout_fraction", c.memorization.holdout_fraction));
    RETURN_IF_ERROR(mr.Get("seed_count", c.memorization.seed_count));
    if (mr.Has("scenarios")) {
      std::vector<std::string> names;
      RETURN_IF_ERROR(mr.Get("scenarios", names));
      c.memorization.scenarios.clear();
      for (const std::string& name : names) {
        ASSIGN_OR_RETURN(const MemorizationScenario s, ParseScenario(name));
        c.memorization.scenarios.push_back(s);
      }
    }
    RETURN_IF_ERROR(mr.Finish());
  }
  if (const json* s = r.Find("shapley")) {
    ObjectReader sr(*s, "shapley");
    RETURN_IF_ERROR(sr.CheckObject());
    RETURN_IF_ERROR(sr.Get("enabled", c.shapley.enabled));
    RETURN_IF_ERROR(sr.Get("k", c.shapley.k));
    RETURN_IF_ERROR(sr.Get("validation_size", c.shapley.validation_size));
    RETURN_IF_ERROR(sr.Finish());
  }
  RETURN_IF_ERROR(r.Get("levels", c.levels));
  RETURN_IF_ERROR(r.Get("fpr_grid", c.fpr_grid));
  RETURN_IF_ERROR(r.Get("repeat", c.repeat));
  RETURN_IF_ERROR(r.Get("seed", c.seed));
  RETURN_IF_ERROR(r.Get("emit_verdicts", c.emit_verdicts));
  RETURN_IF_ERROR(r.Get("jobs", c.jobs));
  RETURN_IF_ERROR(r.Finish());
  RETURN_IF_ERROR(c.Validate());
  return c;
}

absl::StatusOr<ExperimentConfig> LoadExperimentConfig(const std::string& path) {
  ASSIGN_OR_RETURN(const std::string text, ReadFile(path));
  return ParseExperimentConfig(text);
}

namespace {

json ConfigToJsonValue(const ExperimentConfig& c) {
  json j;
  j["experiment_id"] = c.experiment_id;
  json dataset = json::object();
  if (c.dataset.synth.has_value()) {
    const SynthParams& p = *c.dataset.synth;
    dataset["synth"] = {{"n", p.n},
                        {"dim", p.dim},
                        {"class_count", p.class_count},
                        {"cluster_spread", p.cluster_spread},
                        {"flip_noise", p.flip_noise},
                        {"sensitive_count", p.sensitive_count},
                        {"sensitive_block", p.sensitive_block}};
  }
  if (c.dataset.csv.has_value()) {
    json csv = {{"path", c.dataset.csv->path},
                {"label_column", c.dataset.csv->schema.label_column}};
    if (c.dataset.csv->schema.sensitive_column.has_value()) {
      csv["sensitive_column"] = *c.dataset.csv->schema.sensitive_column;
    }
    dataset["csv"] = csv;
  }
  j["dataset"] = dataset;
  json split = json::object();
  for (const auto& [name, fraction] : c.split) split[SplitNameString(name)] = fraction;
  j["split"] = split;
  j["model"] = {{"hidden", c.hidden}};
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.learning_rate}};
  j["regimes"] = c.regimes;
  j["pacing"] = {{"start_fraction", c.pacing.start_fraction},
                 {"growth", c.pacing.growth},
                 {"step_length", c.pacing.step_length},
                 {"sampling", SamplingName(c.pacing.sampling)}};
  j["attacks"] = c.attacks;
  j["attack_train"] = {{"epochs", c.attack_train.epochs},
                       {"batch_size", c.attack_train.batch_size},
                       {"learning_rate", c.attack_train.learning_rate},
                       {"optimizer", AttackOptimizerName(c.attack_train.optimizer)}};
  j["shadow_count"] = c.shadow_count;
  j["reference_count"] = c.reference_count;
  j["label_only"] = {{"noise_grid", c.label_only.noise_grid},
                     {"trials_per_level", c.label_only.trials_per_level}};
  json defense = {{"kind", DefenseKindName(c.defense.kind)}};
  if (c.defense.dp.has_value()) {
    defense["dp_clip"] = c.defense.dp->clip;
    defense["dp_noise"] = c.defense.dp->noise;
  }
  if (c.defense.memguard_budget.has_value()) {
    defense["memguard_budget"] = *c.defense.memguard_budget;
  }
  j["defense"] = defense;
  j["aia"] = {{"enabled", c.aia}};
  std::vector<std::string> scenarios;
  for (const auto s : c.memorization.scenarios) scenarios.push_back(ScenarioName(s));
  j["memorization"] = {{"enabled", c.memorization.enabled},
                       {"holdout_fraction", c.memorization.holdout_fraction},
                       {"scenarios", scenarios},
                       {"seed_count", c.memorization.seed_count}};
  j["shapley"] = {{"enabled", c.shapley.enabled},
                  {"k", c.shapley.k},
                  {"validation_size", c.shapley.validation_size}};
  j["levels"] = c.levels;
  j["fpr_grid"] = c.fpr_grid;
  j["repeat"] = c.repeat;
  j["seed"] = c.seed;
  j["emit_verdicts"] = c.emit_verdicts;
  return j;
}

}  // namespace

std::string ExperimentConfigToJson(const ExperimentConfig& config) {
  return ConfigToJsonValue(config).dump(2);
}

// ---------------------------------------------------------------------------
// Aggregation.

std::map<std::string, MetricSummary> Aggregate(const std::vector<TrialResult>& trials) {
  std::map<std::string, std::vector<double>> values;
  for (const TrialResult& t : trials) {
    if (!t.ok) continue;
    for (const auto& [key, value] : t.metrics) values[key].push_back(value);
  }
  std::map<std::string, MetricSummary> summary;
  for (const auto& [key, v] : values) {
    MetricSummary s;
    s.n = static_cast<int>(v.size());
    for (const double x : v) s.mean += x;
    s.mean /= s.n;
    if (s.n > 1) {
      double ss = 0.0;
      for (const double x : v) ss += (x - s.mean) * (x - s.mean);
      s.std = std::sqrt(ss / (s.n - 1));
    }
    summary[key] = s;
  }
  return summary;
}

// ---------------------------------------------------------------------------
// Trial pipeline.

namespace {

std::string FprKey(double fpr) { return absl::StrCat("tpr@", FormatDouble(fpr)); }

double VerdictAccuracy(const std::vector<MembershipVerdict>& verdicts,
                       const std::vector<bool>& truth) {
  int hits = 0;
  for (size_t i = 0; i < verdicts.size(); ++i) {
    hits += verdicts[i].is_member == truth[i] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(verdicts.size());
}

Table BucketTable(const BucketReport& report) {
  Table t{{"level", "member_count", "accuracy", "member_likelihood", "pool_likelihood"}, {}};
  for (const BucketRow& row : report.rows) {
    t.rows.push_back({row.level, row.member_count, row.accuracy, row.member_likelihood,
                      row.pool_likelihood});
  }
  return t;
}

Table HistogramTable(const BucketReport& report) {
  Table t{{"bin", "member_count", "non_member_count"}, {}};
  for (size_t b = 0; b < report.member_loss.counts.size(); ++b) {
    t.rows.push_back({static_cast<double>(b), report.member_loss.counts[b],
                      report.non_member_loss.counts[b]});
  }
  return t;
}

class TrialRunner {
 public:
  TrialRunner(const ExperimentConfig& config, const RunOptions& options,
              const std::optional<Dataset>& csv_data, int trial)
      : config_(config),
        options_(options),
        csv_data_(csv_data),
        seed_(config.seed + static_cast<uint64_t>(trial)) {
    result_.trial = trial;
    result_.seed = seed_;
  }

  std::pair<TrialResult, TrialArtifacts> Run() {
    const absl::Status status = RunStages();
    if (!status.ok()) {
      result_.ok = false;
      result_.error_stage = stage_;
      result_.error_message = std::string(status.message());
      result_.metrics.clear();
      result_.tables.clear();
    }
    return {std::move(result_), std::move(artifacts_)};
  }

 private:
  bool Enabled(Stage stage) const { return (options_.stages & stage) != 0; }
  bool HasAttack(const char* name) const { return Contains(config_.attacks, name); }
  bool HasRegime(const char* name) const { return Contains(config_.regimes, name); }

  TrainConfig TargetConfig(uint64_t stream) const {
    TrainConfig c = config_.train;
    c.seed = DeriveSeed(seed_, stream);
    if (config_.defense.dp.has_value()) c = WithDp(c, *config_.defense.dp);
    return c;
  }

  absl::Status RunStages() {
    RETURN_IF_ERROR(LoadData());
    const bool attacks = Enabled(kStageAttacks) && !config_.attacks.empty();
    const bool aia = Enabled(kStageAia) && config_.aia;
    const bool memorization = Enabled(kStageMemorization) && config_.memorization.enabled;
    const bool shapley = Enabled(kStageShapley) && config_.shapley.enabled;
    const bool targets = Enabled(kStageTargets) || attacks || aia;
    const bool need_measurer = memorization || shapley || attacks || aia ||
                               (targets && (HasRegime("bootstrap") || HasRegime("anti")));
    if (need_measurer) RETURN_IF_ERROR(Measure());
    const bool need_references =
        (attacks && HasAttack("diffcali")) || (targets && HasRegime("transfer"));
    if (need_references) RETURN_IF_ERROR(TrainReferences());
    if (targets) RETURN_IF_ERROR(TrainTargets());
    if (attacks) {
      RETURN_IF_ERROR(BuildAttacks());
      RETURN_IF_ERROR(EvaluateAttacks());
    }
    if (aia) RETURN_IF_ERROR(RunAia());
    if (memorization) RETURN_IF_ERROR(RunMemorization());
    if (shapley) RETURN_IF_ERROR(RunShapley());
    return absl::OkStatus();
  }

  absl::Status LoadData() {
    stage_ = "data";
    if (config_.dataset.synth.has_value()) {
      SynthParams params = *config_.dataset.synth;
      params.seed = DeriveSeed(seed_, kStreamData);
      ASSIGN_OR_RETURN(data_, SynthTabular(params));
    } else {
      data_ = *csv_data_;
    }
    ASSIGN_OR_RETURN(splits_, Split(data_, SplitPlan{config_.split, seed_}));
    if (options_.keep_models) artifacts_.split_manifest = SplitManifestCsv(splits_);
    train_ = data_.Subset(splits_.at(SplitName::kTargetTrain));
    test_ = data_.Subset(splits_.at(SplitName::kTest));
    if (splits_.contains(SplitName::kShadowTrain)) {
      shadow_ = data_.Subset(splits_.at(SplitName::kShadowTrain));
    }
    if (splits_.contains(SplitName::kReference1)) {
      reference_ = data_.Subset(splits_.at(SplitName::kReference1));
    }
    dims_ = {data_.dim()};
    dims_.insert(dims_.end(), config_.hidden.begin(), config_.hidden.end());
    dims_.push_back(data_.class_count);
    // Balanced query set: the first m members against the first m test rows.
    const int m = std::min(train_.size(), test_.size());
    query_members_.resize(m);
    std::iota(query_members_.begin(), query_members_.end(), 0);
    std::vector<int> cols(query_members_);
    const Dataset non_members = test_.Subset(cols);
    const Dataset members = train_.Subset(cols);
    query_x_.resize(data_.dim(), 2 * m);
    query_x_ << members.features, non_members.features;
    query_labels_ = members.labels;
    query_labels_.insert(query_labels_.end(), non_members.labels.begin(),
                         non_members.labels.end());
    query_truth_.assign(2 * m, false);
    std::fill(query_truth_.begin(), query_truth_.begin() + m, true);
    return absl::OkStatus();
  }

  absl::Status Measure() {
    stage_ = "measurer";
    TrainConfig c = config_.train;
    c.seed = DeriveSeed(seed_, kStreamMeasurer);
    if (config_.defense.kind == DefenseKind::kDpSgdStar) c = WithDp(c, *config_.defense.dp);
    ASSIGN_OR_RETURN(DifficultyScores scores,
                     ScoreDifficulty(train_, BootstrapMeasurer{dims_, c}));
    measurer_scores_ = std::move(scores.scores);
    ASSIGN_OR_RETURN(measured_, BuildCurriculum(measurer_scores_, CurriculumMode::kBootstrap,
                                                seed_));
    ASSIGN_OR_RETURN(levels_, Bucketize(measured_->ranks(), config_.levels));
    return absl::OkStatus();
  }

  absl::Status TrainReferences() {
    stage_ = "references";
    const uint64_t base = DeriveSeed(seed_, kStreamReference);
    for (int r = 0; r < config_.reference_count; ++r) {
      TrainConfig c = config_.train;
      c.seed = DeriveSeed(base, static_cast<uint64_t>(r));
      ASSIGN_OR_RETURN(Network init, Network::Create(dims_, c.seed));
      ASSIGN_OR_RETURN(TrainResult trained,
                       Train(std::move(init), reference_.features, reference_.labels, c));
      references_.push_back(std::move(trained.network));
    }
    return absl::OkStatus();
  }

  absl::StatusOr<Curriculum> RegimeCurriculum(const std::string& regime) {
    if (regime == "bootstrap") return *measured_;
    if (regime == "anti") return BuildCurriculum(measurer_scores_, CurriculumMode::kAnti, seed_);
    if (regime == "transfer") {
      ASSIGN_OR_RETURN(std::vector<double> scores,
                       ScoreWithMeasurer(references_.front(), train_));
      return BuildCurriculum(std::move(scores), CurriculumMode::kTransfer, seed_);
    }
    std::vector<double> scores = measurer_scores_;
    if (scores.empty()) scores.assign(train_.size(), 0.0);
    return BuildCurriculum(std::move(scores), CurriculumMode::kBaseline, seed_);
  }

  absl::Status TrainTargets() {
    for (const std::string& regime : config_.regimes) {
      stage_ = absl::StrCat("target:", regime);
      const TrainConfig c = TargetConfig(kStreamTarget);
      ASSIGN_OR_RETURN(Network init, Network::Create(dims_, c.seed));
      TrainResult trained{init, {}};
      if (regime == "normal") {
        ASSIGN_OR_RETURN(trained, Train(std::move(init), train_.features, train_.labels, c));
      } else {
        ASSIGN_OR_RETURN(const Curriculum curriculum, RegimeCurriculum(regime));
        ASSIGN_OR_RETURN(
            const PacingSchedule schedule,
            PacingSchedule::Create(train_.size(), IterationsPerEpoch(train_.size(), c.batch_size),
                                   config_.pacing.start_fraction, config_.pacing.growth,
                                   config_.pacing.step_length));
        CurriculumTrainOptions options;
        options.sampling = config_.pacing.sampling;
        ASSIGN_OR_RETURN(trained, CurriculumTrain(std::move(init), train_, curriculum,
                                                  schedule, c, options));
        if (options_.keep_models) artifacts_.curricula[regime] = CurriculumCsv(curriculum);
      }
      ASSIGN_OR_RETURN(const double train_acc,
                       Accuracy(trained.network, train_.features, train_.labels));
      ASSIGN_OR_RETURN(const double test_acc,
                       Accuracy(trained.network, test_.features, test_.labels));
      result_.metrics[regime + ".train_accuracy"] = train_acc;
      result_.metrics[regime + ".test_accuracy"] = test_acc;
      if (!trained.history.empty()) {
        result_.metrics[regime + ".final_loss"] = trained.history.back().loss;
      }
      if (options_.keep_models) artifacts_.targets.emplace(regime, trained.network);
      targets_.emplace_back(regime, std::move(trained.network));
    }
    return absl::OkStatus();
  }

  absl::Status BuildAttacks() {
    stage_ = "shadows";
    ASSIGN_OR_RETURN(shadows_, TrainShadows(shadow_, config_.shadow_count, dims_,
                                            TargetConfig(kStreamShadow)));
    const ShadowModel& s0 = shadows_.front();
    shadow_membership_.assign(shadow_.size(), false);
    for (const int i : s0.members) shadow_membership_[i] = true;

    AttackTrainConfig attack_config = config_.attack_train;
    attack_config.seed = DeriveSeed(seed_, kStreamAttack);
    if (HasAttack("nn")) {
      stage_ = "attack:nn";
      ASSIGN_OR_RETURN(nn_attack_, NnAttackTrain(shadows_, shadow_, attack_config));
    }
    ASSIGN_OR_RETURN(const Matrix shadow_posteriors,
                     ForwardBatch(s0.network, shadow_.features));
    for (const char* name : {"corr", "conf", "ent", "ment"}) {
      if (!HasAttack(name)) continue;
      stage_ = absl::StrCat("attack:", name);
      ASSIGN_OR_RETURN(const MetricMode mode, ParseMetricMode(name));
      ASSIGN_OR_RETURN(MetricAttack attack,
                       FitMetricAttack(mode, shadow_posteriors, shadow_.labels,
                                       shadow_membership_, data_.class_count));
      metric_attacks_.emplace_back(name, std::move(attack));
    }
    if (HasAttack("label_only")) {
      stage_ = "attack:label_only";
      LabelOnlyConfig lo = config_.label_only;
      lo.seed = DeriveSeed(seed_, kStreamLabelOnly);
      std::vector<int> ids(shadow_.size());
      std::iota(ids.begin(), ids.end(), 0);
      ASSIGN_OR_RETURN(label_only_, FitLabelOnlyAttack(s0.network, shadow_.features, ids,
                                                       shadow_membership_, lo));
    }
    if (HasAttack("diffcali")) {
      stage_ = "attack:diffcali";
      ASSIGN_OR_RETURN(const Vector difficulty,
                       MeanReferenceLoss(references_, shadow_.features, shadow_.labels));
      ASSIGN_OR_RETURN(const Vector s_cal, CalibratedScores(s0.network, references_,
                                                            shadow_.features, shadow_.labels));
      ASSIGN_OR_RETURN(
          const Curriculum attacker_curriculum,
          BuildCurriculum(std::vector<double>(difficulty.data(), difficulty.data() + difficulty.size()),
                          CurriculumMode::kTransfer, seed_));
      ASSIGN_OR_RETURN(diffcali_, DiffCaliTrain(s_cal, shadow_membership_, attacker_curriculum,
                                                attack_config));
      result_.metrics["diffcali.theta0"] = diffcali_->state.theta0;
    }
    return absl::OkStatus();
  }

  absl::Status Score(const std::string& key, const std::vector<MembershipVerdict>& verdicts) {
    result_.metrics[key + ".accuracy"] = VerdictAccuracy(verdicts, query_truth_);
    std::vector<double> raw(verdicts.size());
    for (size_t i = 0; i < verdicts.size(); ++i) raw[i] = verdicts[i].raw_score;
    ASSIGN_OR_RETURN(const RocCurve roc, ComputeRoc(raw, query_truth_));
    result_.metrics[key + ".auc"] = roc.auc;
    Table tpr{{"fpr_target", "fpr", "tpr"}, {}};
    for (const TprAtFpr& row : TprAtFprTable(roc, config_.fpr_grid)) {
      result_.metrics[absl::StrCat(key, ".", FprKey(row.fpr_target))] = row.tpr;
      tpr.rows.push_back({row.fpr_target, row.fpr, row.tpr});
    }
    result_.tables[key + ".tpr_at_fpr"] = std::move(tpr);
    artifacts_.roc[key] = roc.points;
    if (config_.emit_verdicts) {
      const int m = static_cast<int>(query_members_.size());
      const std::vector<int>& train_rows = splits_.at(SplitName::kTargetTrain);
      const std::vector<int>& test_rows = splits_.at(SplitName::kTest);
      std::vector<VerdictRecord> records(verdicts.size());
      for (size_t i = 0; i < verdicts.size(); ++i) {
        const bool member = query_truth_[i];
        const int local = member ? static_cast<int>(i) : static_cast<int>(i) - m;
        records[i].sample_index = member ? train_rows[local] : test_rows[local];
        records[i].is_member_truth = member;
        records[i].verdict = verdicts[i];
        if (member && !levels_.empty()) records[i].difficulty_level = levels_[local];
      }
      artifacts_.verdicts[key] = std::move(records);
    }
    return absl::OkStatus();
  }

  absl::Status EvaluateAttacks() {
    const int m = static_cast<int>(query_members_.size());
    for (const auto& [regime, target] : targets_) {
      stage_ = absl::StrCat("evaluate:", regime);
      ASSIGN_OR_RETURN(const Matrix posteriors, ForwardBatch(target, query_x_));
      ASSIGN_OR_RETURN(const Vector losses, PerSampleLoss(target, query_x_, query_labels_));
      if (nn_attack_.has_value()) {
        ASSIGN_OR_RETURN(const std::vector<MembershipVerdict> verdicts,
                         NnAttackInferPosteriors(*nn_attack_, posteriors));
        RETURN_IF_ERROR(Score(regime + ".nn", verdicts));
        RETURN_IF_ERROR(ReportBuckets(regime, verdicts, losses, m));
        if (config_.defense.kind == DefenseKind::kMemGuard) {
          RETURN_IF_ERROR(EvaluateMemGuard(regime, posteriors));
        }
      }
      for (const auto& [name, attack] : metric_attacks_) {
        ASSIGN_OR_RETURN(const std::vector<MembershipVerdict> verdicts,
                         MetricAttackInfer(attack, posteriors, query_labels_));
        RETURN_IF_ERROR(Score(absl::StrCat(regime, ".", name), verdicts));
      }
      if (label_only_.has_value()) {
        std::vector<int> ids(query_labels_.size());
        std::iota(ids.begin(), ids.end(), 0);
        ASSIGN_OR_RETURN(const std::vector<MembershipVerdict> verdicts,
                         LabelOnlyAttackInfer(*label_only_, target, query_x_, ids));
        RETURN_IF_ERROR(Score(regime + ".label_only", verdicts));
      }
      if (diffcali_.has_value()) {
        ASSIGN_OR_RETURN(const Vector difficulty,
                         MeanReferenceLoss(references_, query_x_, query_labels_));
        ASSIGN_OR_RETURN(const Vector s_cal,
                         CalibratedScores(target, references_, query_x_, query_labels_));
        std::vector<int> ranks(difficulty.size());
        for (Eigen::Index i = 0; i < difficulty.size(); ++i) {
          ranks[i] = diffcali_->state.EstimateRank(difficulty(i));
        }
        ASSIGN_OR_RETURN(const std::vector<MembershipVerdict> verdicts,
                         DiffCaliInfer(*diffcali_, s_cal, ranks));
        RETURN_IF_ERROR(Score(regime + ".diffcali", verdicts));
      }
    }
    return absl::OkStatus();
  }

  absl::Status ReportBuckets(const std::string& regime,
                             const std::vector<MembershipVerdict>& verdicts,
                             const Vector& losses, int m) {
    BucketInputs in;
    for (int i = 0; i < m; ++i) {
      in.member_verdicts.push_back(verdicts[i]);
      in.member_levels.push_back(levels_[query_members_[i]]);
      in.member_likelihood.push_back(verdicts[i].raw_score);
      in.member_loss.push_back(losses(i));
      in.pool_verdicts.push_back(verdicts[m + i]);
      in.pool_likelihood.push_back(verdicts[m + i].raw_score);
      in.pool_loss.push_back(losses(m + i));
    }
    ASSIGN_OR_RETURN(const BucketReport report, ComputeBucketReport(in, config_.levels));
    result_.tables[regime + ".nn.buckets"] = BucketTable(report);
    result_.tables[regime + ".loss_histogram"] = HistogramTable(report);
    const BucketRow& easiest = report.rows.front();
    const BucketRow& hardest = report.rows.back();
    if (easiest.member_likelihood.has_value() && hardest.member_likelihood.has_value()) {
      result_.metrics[regime + ".nn.confidence_gap"] =
          *easiest.member_likelihood - *hardest.member_likelihood;
    }
    return absl::OkStatus();
  }

  absl::Status EvaluateMemGuard(const std::string& regime, const Matrix& posteriors) {
    stage_ = absl::StrCat("memguard:", regime);
    ASSIGN_OR_RETURN(const Matrix defended,
                     MemGuardPerturbBatch(posteriors, *nn_attack_,
                                          *config_.defense.memguard_budget));
    ASSIGN_OR_RETURN(const std::vector<MembershipVerdict> verdicts,
                     NnAttackInferPosteriors(*nn_attack_, defended));
    RETURN_IF_ERROR(Score(regime + ".nn_memguard", verdicts));
    bool identical = true;
    double l1 = 0.0;
    for (Eigen::Index j = 0; j < posteriors.cols(); ++j) {
      Eigen::Index before = 0;
      Eigen::Index after = 0;
      posteriors.col(j).maxCoeff(&before);
      defended.col(j).maxCoeff(&after);
      identical = identical && before == after;
      l1 += (defended.col(j) - posteriors.col(j)).lpNorm<1>();
    }
    result_.metrics[regime + ".memguard.labels_identical"] = identical ? 1.0 : 0.0;
    result_.metrics[regime + ".memguard.mean_l1"] = l1 / static_cast<double>(posteriors.cols());
    return absl::OkStatus();
  }

  absl::Status RunAia() {
    if (!shadow_.has_sensitive()) {
      stage_ = "aia";
      return absl::FailedPreconditionError("dataset has no sensitive attribute");
    }
    const TrainConfig c = DefaultAiaTrainConfig(config_.train, DeriveSeed(seed_, kStreamAia));
    const int m = static_cast<int>(query_members_.size());
    const Dataset members = train_.Subset(query_members_);
    for (const auto& [regime, target] : targets_) {
      stage_ = absl::StrCat("aia:", regime);
      ASSIGN_OR_RETURN(const AiaAttackModel attack, AiaTrain(target, shadow_, c));
      ASSIGN_OR_RETURN(const std::vector<AiaPrediction> predictions,
                       AiaInfer(attack, target, members.features));
      result_.metrics[regime + ".aia.accuracy"] =
          PredictionAccuracy(predictions, *members.sensitive);
      ASSIGN_OR_RETURN(const double baseline,
                       MajorityBaselineAccuracy(*shadow_.sensitive, *members.sensitive));
      result_.metrics[regime + ".aia.majority_baseline"] = baseline;
      std::vector<int> count(config_.levels, 0);
      std::vector<int> hits(config_.levels, 0);
      for (int i = 0; i < m; ++i) {
        const int level = levels_[query_members_[i]];
        ++count[level];
        hits[level] += predictions[i].attribute == (*members.sensitive)[i] ? 1 : 0;
      }
      Table t{{"level", "member_count", "accuracy"}, {}};
      for (int l = 0; l < config_.levels; ++l) {
        std::optional<double> acc;
        if (count[l] > 0) acc = static_cast<double>(hits[l]) / count[l];
        t.rows.push_back({static_cast<double>(l), count[l], acc});
      }
      result_.tables[regime + ".aia.buckets"] = std::move(t);
    }
    return absl::OkStatus();
  }

  absl::Status RunMemorization() {
    stage_ = "memorization";
    MemorizationConfig mc;
    mc.holdout_fraction = config_.memorization.holdout_fraction;
    mc.scenarios = config_.memorization.scenarios;
    mc.layer_dims = dims_;
    mc.train = TargetConfig(kStreamMemorization);
    mc.seed_count = config_.memorization.seed_count;
    ASSIGN_OR_RETURN(const std::vector<MemorizationResult> results,
                     MemorizationExperiment(train_, *measured_, mc));
    Table t{{"sample_index"}, {}};
    for (const MemorizationResult& r : results) {
      const std::string name = ScenarioName(r.scenario);
      result_.metrics["memorization." + name + ".q1"] = r.quartiles.q1;
      result_.metrics["memorization." + name + ".median"] = r.quartiles.median;
      result_.metrics["memorization." + name + ".q3"] = r.quartiles.q3;
      t.columns.push_back(name);
    }
    const std::vector<int>& holdout = results.front().holdout;
    result_.metrics["memorization.holdout_size"] = static_cast<double>(holdout.size());
    for (size_t i = 0; i < holdout.size(); ++i) {
      std::vector<std::optional<double>> row = {
          static_cast<double>(splits_.at(SplitName::kTargetTrain)[holdout[i]])};
      for (const MemorizationResult& r : results) row.push_back(r.true_class_probability[i]);
      t.rows.push_back(std::move(row));
    }
    result_.tables["memorization.probabilities"] = std::move(t);
    return absl::OkStatus();
  }

  absl::Status RunShapley() {
    stage_ = "shapley";
    const int v = std::min(config_.shapley.validation_size, test_.size());
    std::vector<int> rows(v);
    std::iota(rows.begin(), rows.end(), 0);
    ASSIGN_OR_RETURN(const std::vector<double> values,
                     KnnShapley(train_, test_.Subset(rows), config_.shapley.k));
    std::vector<double> sum(config_.levels, 0.0);
    std::vector<int> count(config_.levels, 0);
    for (size_t i = 0; i < values.size(); ++i) {
      sum[levels_[i]] += values[i];
      ++count[levels_[i]];
    }
    Table t{{"level", "count", "mean_value"}, {}};
    double total = 0.0;
    for (int l = 0; l < config_.levels; ++l) {
      std::optional<double> mean;
      if (count[l] > 0) mean = sum[l] / count[l];
      t.rows.push_back({static_cast<double>(l), count[l], mean});
      total += sum[l];
    }
    result_.tables["shapley.buckets"] = std::move(t);
    result_.metrics["shapley.total_value"] = total;
    return absl::OkStatus();
  }

  const ExperimentConfig& config_;
  const RunOptions& options_;
  const std::optional<Dataset>& csv_data_;
  const uint64_t seed_;
  std::string stage_ = "setup";
  TrialResult result_;
  TrialArtifacts artifacts_;

  Dataset data_;
  Splits splits_;
  Dataset train_;
  Dataset test_;
  Dataset shadow_;
  Dataset reference_;
  std::vector<int> dims_;
  std::vector<int> query_members_;
  Matrix query_x_;
  std::vector<int> query_labels_;
  std::vector<bool> query_truth_;

  std::vector<double> measurer_scores_;
  std::optional<Curriculum> measured_;
  std::vector<int> levels_;
  std::vector<Network> references_;
  std::vector<std::pair<std::string, Network>> targets_;
  std::vector<ShadowModel> shadows_;
  std::vector<bool> shadow_membership_;
  std::optional<AttackModel> nn_attack_;
  std::vector<std::pair<std::string, MetricAttack>> metric_attacks_;
  std::optional<LabelOnlyAttack> label_only_;
  std::optional<DiffCaliModel> diffcali_;
};

}  // namespace

absl::StatusOr<ExperimentOutput> RunExperiment(const ExperimentConfig& config,
                                               const RunOptions& options) {
  RETURN_IF_ERROR(config.Validate());
  std::optional<Dataset> csv_data;
  if (config.dataset.csv.has_value()) {
    ASSIGN_OR_RETURN(csv_data, LoadCsv(config.dataset.csv->path, config.dataset.csv->schema));
  }
  std::vector<TrialResult> results(config.repeat);
  std::vector<TrialArtifacts> artifacts(config.repeat);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int t = next++; t < config.repeat; t = next++) {
      TrialRunner runner(config, options, csv_data, t);
      std::tie(results[t], artifacts[t]) = runner.Run();
    }
  };
  const int jobs = std::min(config.jobs, config.repeat);
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  ExperimentOutput out;
  out.report.experiment_id = config.experiment_id;
  out.report.version = VersionString();
  out.report.config_json = ExperimentConfigToJson(config);
  out.report.summary = Aggregate(results);
  out.report.trials = std::move(results);
  out.artifacts = std::move(artifacts);
  return out;
}

// ---------------------------------------------------------------------------
// Report serialization.

namespace {

json NumberOrNull(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json TableToJson(const Table& t) {
  json rows = json::array();
  for (const auto& row : t.rows) {
    json r = json::array();
    for (const auto& cell : row) r.push_back(cell.has_value() ? NumberOrNull(*cell) : json(nullptr));
    rows.push_back(std::move(r));
  }
  return {{"columns", t.columns}, {"rows", rows}};
}

absl::StatusOr<double> NumberFrom(const json& v, const std::string& path) {
  if (v.is_null()) return std::nan("");
  if (!v.is_number()) return absl::InvalidArgumentError(path + " must be a number");
  return v.get<double>();
}

absl::StatusOr<Table> TableFromJson(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  RETURN_IF_ERROR(r.CheckObject());
  Table t;
  RETURN_IF_ERROR(r.Get("columns", t.columns));
  const json* rows = r.Find("rows");
  if (rows == nullptr || !rows->is_array()) {
    return absl::InvalidArgumentError(path + ".rows must be an array");
  }
  for (const json& row : *rows) {
    if (!row.is_array() || row.size() != t.columns.size()) {
      return absl::InvalidArgumentError(path + " has a malformed row");
    }
    std::vector<std::optional<double>> cells;
    for (const json& cell : row) {
      if (cell.is_null()) {
        cells.push_back(std::nullopt);
      } else {
        ASSIGN_OR_RETURN(const double v, NumberFrom(cell, path));
        cells.push_back(v);
      }
    }
    t.rows.push_back(std::move(cells));
  }
  RETURN_IF_ERROR(r.Finish());
  return t;
}

}  // namespace

std::string ReportToJson(const AuditReport& report) {
  json j;
  j["experiment_id"] = report.experiment_id;
  j["version"] = report.version;
  j["config"] = report.config_json.empty() ? json::object() : json::parse(report.config_json);
  json trials = json::array();
  for (const TrialResult& t : report.trials) {
    json tj = {{"trial", t.trial}, {"seed", t.seed}, {"ok", t.ok}};
    if (!t.ok) tj["error"] = {{"stage", t.error_stage}, {"message", t.error_message}};
    json metrics = json::object();
    for (const auto& [k, v] : t.metrics) metrics[k] = NumberOrNull(v);
    tj["metrics"] = metrics;
    json tables = json::object();
    for (const auto& [k, v] : t.tables) tables[k] = TableToJson(v);
    tj["tables"] = tables;
    trials.push_back(std::move(tj));
  }
  j["trials"] = trials;
  json summary = json::object();
  for (const auto& [k, s] : report.summary) {
    summary[k] = {{"mean", NumberOrNull(s.mean)}, {"std", NumberOrNull(s.std)}, {"n", s.n}};
  }
  j["summary"] = summary;
  return j.dump(2) + "\n";
}

absl::StatusOr<AuditReport> ReportFromJson(const std::string& json_text) {
  ASSIGN_OR_RETURN(const json root, ParseJson(json_text));
  ObjectReader r(root, "report");
  RETURN_IF_ERROR(r.CheckObject());
  AuditReport report;
  RETURN_IF_ERROR(r.Get("experiment_id", report.experiment_id));
  RETURN_IF_ERROR(r.Get("version", report.version));
  if (const json* config = r.Find("config")) {
    report.config_json = config->empty() ? std::string() : config->dump(2);
  }
  if (const json* trials = r.Find("trials")) {
    if (!trials->is_array()) return absl::InvalidArgumentError("report.trials must be an array");
    for (size_t i = 0; i < trials->size(); ++i) {
      const std::string path = absl::StrCat("report.trials[", i, "]");
      ObjectReader tr((*trials)[i], path);
      RETURN_IF_ERROR(tr.CheckObject());
      TrialResult t;
      RETURN_IF_ERROR(tr.Get("trial", t.trial));
      RETURN_IF_ERROR(tr.Get("seed", t.seed));
      RETURN_IF_ERROR(tr.Get("ok", t.ok));
      if (const json* error = tr.Find("error")) {
        ObjectReader er(*error, path + ".error");
        RETURN_IF_ERROR(er.CheckObject());
        RETURN_IF_ERROR(er.Get("stage", t.error_stage));
        RETURN_IF_ERROR(er.Get("message", t.error_message));
        RETURN_IF_ERROR(er.Finish());
      }
      if (const json* metrics = tr.Find("metrics")) {
        for (auto it = metrics->begin(); it != metrics->end(); ++it) {
          ASSIGN_OR_RETURN(t.metrics[it.key()], NumberFrom(it.value(), path + "." + it.key()));
        }
      }
      if (const json* tables = tr.Find("tables")) {
        for (auto it = tables->begin(); it != tables->end(); ++it) {
          ASSIGN_OR_RETURN(t.tables[it.key()], TableFromJson(it.value(), path + "." + it.key()));
        }
      }
      RETURN_IF_ERROR(tr.Finish());
      report.trials.push_back(std::move(t));
    }
  }
  if (const json* summary = r.Find("summary")) {
    for (auto it = summary->begin(); it != summary->end(); ++it) {
      ObjectReader sr(it.value(), "report.summary." + it.key());
      RETURN_IF_ERROR(sr.CheckObject());
      MetricSummary s;
      if (const json* mean = sr.Find("mean")) { ASSIGN_OR_RETURN(s.mean, NumberFrom(*mean, "mean")); }
      if (const json* std = sr.Find("std")) { ASSIGN_OR_RETURN(s.std, NumberFrom(*std, "std")); }
      RETURN_IF_ERROR(sr.Get("n", s.n));
      RETURN_IF_ERROR(sr.Finish());
      report.summary[it.key()] = s;
    }
  }
  RETURN_IF_ERROR(r.Finish());
  return report;
}

namespace {

std::string Cell(const std::optional<double>& v) {
  return v.has_value() && std::isfinite(*v) ? FormatDouble(*v) : std::string();
}

absl::Status EnsureDirectory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    return absl::PermissionDeniedError(
        absl::StrCat("cannot create output directory '", dir, "': ", ec.message()));
  }
  return absl::OkStatus();
}

}  // namespace

absl::Status EmitReport(const ExperimentOutput& output, const std::string& out_dir,
                        ReportFormat format) {
  RETURN_IF_ERROR(EnsureDirectory(out_dir));
  const AuditReport& report = output.report;
  const std::string prefix =
      (std::filesystem::path(out_dir) / report.experiment_id).string();
  if (format != ReportFormat::kCsvBundle) {
    RETURN_IF_ERROR(WriteFileAtomically(prefix + ".report.json", ReportToJson(report)));
  }
  if (format == ReportFormat::kJson) return absl::OkStatus();

  CsvTable summary({"metric", "mean", "std", "n"});
  for (const auto& [key, s] : report.summary) {
    summary.AddRow({key, FormatDouble(s.mean), FormatDouble(s.std), absl::StrCat(s.n)});
  }
  RETURN_IF_ERROR(summary.Write(prefix + ".summary.csv"));
  for (const TrialResult& t : report.trials) {
    const std::string tp = absl::StrCat(prefix, ".trial", t.trial);
    CsvTable metrics({"metric", "value"});
    for (const auto& [key, v] : t.metrics) metrics.AddRow({key, FormatDouble(v)});
    RETURN_IF_ERROR(metrics.Write(tp + ".metrics.csv"));
    for (const auto& [name, table] : t.tables) {
      CsvTable csv(table.columns);
      for (const auto& row : table.rows) {
        std::vector<std::string> cells;
        for (const auto& cell : row) cells.push_back(Cell(cell));
        csv.AddRow(std::move(cells));
      }
      RETURN_IF_ERROR(csv.Write(absl::StrCat(tp, ".", name, ".csv")));
    }
  }
  for (size_t i = 0; i < output.artifacts.size(); ++i) {
    const TrialArtifacts& a = output.artifacts[i];
    const std::string tp = absl::StrCat(prefix, ".trial", report.trials[i].trial);
    for (const auto& [key, points] : a.roc) {
      CsvTable roc({"fpr", "tpr"});
      for (const RocPoint& p : points) roc.AddRow({FormatDouble(p.fpr), FormatDouble(p.tpr)});
      RETURN_IF_ERROR(roc.Write(absl::StrCat(tp, ".", key, ".roc.csv")));
    }
    for (const auto& [key, records] : a.verdicts) {
      CsvTable v({"sample_index", "is_member_truth", "verdict", "confidence", "raw_score",
                  "difficulty_level"});
      for (const VerdictRecord& r : records) {
        v.AddRow({absl::StrCat(r.sample_index), r.is_member_truth ? "1" : "0",
                  r.verdict.is_member ? "1" : "0", FormatDouble(r.verdict.confidence),
                  FormatDouble(r.verdict.raw_score),
                  r.difficulty_level.has_value() ? absl::StrCat(*r.difficulty_level) : ""});
      }
      RETURN_IF_ERROR(v.Write(absl::StrCat(tp, ".", key, ".verdicts.csv")));
    }
    if (!a.split_manifest.empty()) {
      RETURN_IF_ERROR(WriteFileAtomically(tp + ".splits.csv", a.split_manifest));
    }
    for (const auto& [regime, csv] : a.curricula) {
      RETURN_IF_ERROR(WriteFileAtomically(absl::StrCat(tp, ".", regime, ".curriculum.csv"), csv));
    }
    for (const auto& [regime, net] : a.targets) {
      RETURN_IF_ERROR(SaveNetwork(net, absl::StrCat(tp, ".", regime, ".clpnn")));
    }
  }
  return absl::OkStatus();
}

}  // namespace clpriv
