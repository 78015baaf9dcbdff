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

// Experiment configuration, the seeded multi-trial pipeline and report
// emission.

#ifndef CLPRIV_HARNESS_H_
#define CLPRIV_HARNESS_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "clpriv/analysis.h"
#include "clpriv/curriculum.h"
#include "clpriv/data.h"
#include "clpriv/defense.h"
#include "clpriv/mia.h"
#include "clpriv/nn.h"

namespace clpriv {

std::string VersionString();

struct CsvSource {
  std::string path;
  CsvSchema schema;
};

struct DatasetSource {
  // Exactly one is set. Synthetic data is regenerated per trial from the
  // trial seed; its `seed` field is ignored.
  std::optional<SynthParams> synth;
  std::optional<CsvSource> csv;
};

struct PacingConfig {
  double start_fraction = kDefaultPacingStart;
  double growth = kDefaultPacingGrowth;
  int step_length = 0;  // 0: one tenth of the iterations per epoch
  BatchSampling sampling = BatchSampling::kUniform;
};

struct MemorizationSettings {
  bool enabled = false;
  double holdout_fraction = 0.04;
  std::vector<MemorizationScenario> scenarios = {kAllScenarios.begin(),
                                                 kAllScenarios.end()};
  int seed_count = 1;
};

struct ShapleySettings {
  bool enabled = false;
  int k = 5;
  int validation_size = 500;
};

// Training regimes for the target model. "normal" reshuffles every epoch;
// the others follow a curriculum.
inline constexpr std::array<const char*, 5> kRegimeNames = {
    "normal", "bootstrap", "transfer", "baseline", "anti"};
// Attack names: "nn", "corr", "conf", "ent", "ment", "label_only",
// "diffcali".
inline constexpr std::array<const char*, 7> kAttackNames = {
    "nn", "corr", "conf", "ent", "ment", "label_only", "diffcali"};

struct ExperimentConfig {
  std::string experiment_id = "experiment";
  DatasetSource dataset;
  // Split fractions; the split seed comes from the trial seed.
  std::vector<std::pair<SplitName, double>> split = {
      {SplitName::kTargetTrain, 0.25},
      {SplitName::kShadowTrain, 0.25},
      {SplitName::kTest, 0.25},
      {SplitName::kReference1, 0.25}};
  std::vector<int> hidden = {256};
  TrainConfig train;  // optimizer, dp fields and seed are set per run
  std::vector<std::string> regimes = {"normal", "bootstrap", "anti"};
  PacingConfig pacing;
  std::vector<std::string> attacks = {"nn"};
  AttackTrainConfig attack_train;  // seed is set per trial
  int shadow_count = 1;
  int reference_count = 1;
  LabelOnlyConfig label_only;  // seed is set per trial
  DefenseConfig defense;
  bool aia = false;
  MemorizationSettings memorization;
  ShapleySettings shapley;
  int levels = 10;
  std::vector<double> fpr_grid = DefaultFprGrid();
  int repeat = 5;
  uint64_t seed = 1;
  bool emit_verdicts = false;
  // Execution settings; not part of the echoed configuration.
  int jobs = 1;

  absl::Status Validate() const;
};

// Strict parser: unknown keys and wrong types are errors.
absl::StatusOr<ExperimentConfig> ParseExperimentConfig(const std::string& json_text);
absl::StatusOr<ExperimentConfig> LoadExperimentConfig(const std::string& path);
// Canonical JSON with every field spelled out; parses back to an equal
// configuration.
std::string ExperimentConfigToJson(const ExperimentConfig& config);

// A numeric table; empty cells are std::nullopt.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::optional<double>>> rows;

  bool operator==(const Table&) const = default;
};

struct TrialResult {
  int trial = 0;
  uint64_t seed = 0;
  bool ok = true;
  std::string error_stage;
  std::string error_message;
  std::map<std::string, double> metrics;
  std::map<std::string, Table> tables;

  bool operator==(const TrialResult&) const = default;
};

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single trial
  int n = 0;

  bool operator==(const MetricSummary&) const = default;
};

struct AuditReport {
  std::string experiment_id;
  std::string version;
  std::string config_json;  // canonical echo
  std::vector<TrialResult> trials;
  std::map<std::string, MetricSummary> summary;

  bool operator==(const AuditReport&) const = default;
};

struct VerdictRecord {
  int sample_index = 0;  // row of the source dataset
  bool is_member_truth = false;
  MembershipVerdict verdict;
  std::optional<int> difficulty_level;  // members only
};

// Bulky per-trial outputs that go to CSV files only.
struct TrialArtifacts {
  std::map<std::string, std::vector<RocPoint>> roc;
  std::map<std::string, std::vector<VerdictRecord>> verdicts;
  std::map<std::string, Network> targets;
  std::string split_manifest;
  std::map<std::string, std::string> curricula;  // regime -> curriculum CSV
};

struct ExperimentOutput {
  AuditReport report;
  std::vector<TrialArtifacts> artifacts;  // one per trial
};

enum Stage : unsigned {
  kStageTargets = 1u << 0,
  kStageAttacks = 1u << 1,
  kStageAia = 1u << 2,
  kStageMemorization = 1u << 3,
  kStageShapley = 1u << 4,
  kStageAll = 0x1fu,
};

struct RunOptions {
  unsigned stages = kStageAll;
  // Keep trained targets, curricula and split manifests in the artifacts.
  bool keep_models = false;
};

// Mean and sample standard deviation of every metric over successful
// trials.
std::map<std::string, MetricSummary> Aggregate(const std::vector<TrialResult>& trials);

// Runs `repeat` trials with seeds seed, seed + 1, ..., up to `jobs` at a
// time. A failing stage marks only its own trial as failed.
absl::StatusOr<ExperimentOutput> RunExperiment(const ExperimentConfig& config,
                                               const RunOptions& options = {});

std::string ReportToJson(const AuditReport& report);
absl::StatusOr<AuditReport> ReportFromJson(const std::string& json_text);

enum class ReportFormat { kJson, kCsvBundle, kBoth };

// Writes <id>.report.json and/or the CSV bundle (<id>.summary.csv,
// <id>.trial<t>.<table>.csv, ROC and verdict files) into `out_dir`. Every
// file is replaced atomically.
absl::Status EmitReport(const ExperimentOutput& output, const std::string& out_dir,
                        ReportFormat format = ReportFormat::kBoth);

}  // namespace clpriv

#endif  // CLPRIV_HARNESS_H_
