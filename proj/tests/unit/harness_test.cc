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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gtest/gtest.h"
#include "test_util.h"

namespace clpriv {
namespace {

using ::clpriv::testing::CodeOf;

constexpr char kSmallConfig[] = R"({
  "experiment_id": "unit",
  "dataset": {"synth": {"n": 240, "dim": 16, "class_count": 3,
                        "cluster_spread": 0.3, "flip_noise": 0.05}},
  "model": {"hidden": [8]},
  "train": {"epochs": 3, "batch_size": 16},
  "regimes": ["normal", "bootstrap"],
  "attacks": ["nn", "conf"],
  "attack_train": {"epochs": 3},
  "repeat": 2,
  "seed": 5
})";

ExperimentConfig SmallConfig() { return ParseExperimentConfig(kSmallConfig).value(); }

std::string Slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(ConfigTest, ParsesAndFillsDefaults) {
  const ExperimentConfig c = SmallConfig();
  EXPECT_EQ(c.experiment_id, "unit");
  ASSERT_TRUE(c.dataset.synth.has_value());
  EXPECT_EQ(c.dataset.synth->n, 240);
  EXPECT_EQ(c.hidden, (std::vector<int>{8}));
  EXPECT_EQ(c.train.epochs, 3);
  EXPECT_DOUBLE_EQ(c.train.learning_rate, TrainConfig{}.learning_rate);
  EXPECT_EQ(c.attack_train.epochs, 3);
  EXPECT_EQ(c.levels, 10);
  EXPECT_EQ(c.pacing.sampling, BatchSampling::kUniform);
  EXPECT_EQ(c.repeat, 2);
  EXPECT_EQ(c.seed, 5u);
}

TEST(ConfigTest, UnknownKeysAreRejected) {
  const absl::StatusOr<ExperimentConfig> top =
      ParseExperimentConfig(R"({"experiment_id": "x", "epochs": 3})");
  EXPECT_EQ(CodeOf(top), absl::StatusCode::kInvalidArgument);
  EXPECT_NE(top.status().message().find("epochs"), std::string::npos);
  const absl::StatusOr<ExperimentConfig> nested = ParseExperimentConfig(
      R"({"dataset": {"synth": {"n": 10, "dims": 4}}})");
  EXPECT_NE(nested.status().message().find("dataset.synth.dims"), std::string::npos);
}

TEST(ConfigTest, WrongTypesAndMalformedJsonAreRejected) {
  EXPECT_FALSE(ParseExperimentConfig(R"({"repeat": "five"})").ok());
  EXPECT_FALSE(ParseExperimentConfig(R"({"repeat": 1.5})").ok());
  EXPECT_FALSE(ParseExperimentConfig("{").ok());
  EXPECT_FALSE(ParseExperimentConfig("[]").ok());
}

TEST(ConfigTest, CrossFieldValidation) {
  ExperimentConfig c = SmallConfig();
  EXPECT_OK(c.Validate());
  c.regimes = {"normal", "normal"};
  EXPECT_EQ(CodeOf(c.Validate()), absl::StatusCode::kFailedPrecondition);
  c = SmallConfig();
  c.attacks = {"diffcali"};
  c.split = {{SplitName::kTargetTrain, 0.4}, {SplitName::kShadowTrain, 0.3},
             {SplitName::kTest, 0.3}};
  EXPECT_EQ(CodeOf(c.Validate()), absl::StatusCode::kFailedPrecondition);
  c = SmallConfig();
  c.defense.kind = DefenseKind::kMemGuard;
  c.defense.memguard_budget = 0.2;
  c.attacks = {"conf"};
  EXPECT_EQ(CodeOf(c.Validate()), absl::StatusCode::kFailedPrecondition);
  c = SmallConfig();
  c.train.epochs = 0;
  EXPECT_EQ(CodeOf(c.Validate()), absl::StatusCode::kFailedPrecondition);
  c = SmallConfig();
  c.regimes = {"warmup"};
  EXPECT_EQ(CodeOf(c.Validate()), absl::StatusCode::kFailedPrecondition);
}

TEST(ConfigTest, CanonicalEchoIsClosed) {
  const ExperimentConfig c = SmallConfig();
  const std::string echo = ExperimentConfigToJson(c);
  ASSERT_OK_AND_ASSIGN(const ExperimentConfig again, ParseExperimentConfig(echo));
  EXPECT_EQ(ExperimentConfigToJson(again), echo);
  EXPECT_EQ(echo.find("\"jobs\""), std::string::npos);
}

TEST(ConfigTest, MissingFileIsNotFound) {
  EXPECT_EQ(CodeOf(LoadExperimentConfig("/nonexistent/config.json")),
            absl::StatusCode::kNotFound);
}

TrialResult Trial(int index, bool ok, double value) {
  TrialResult t;
  t.trial = index;
  t.ok = ok;
  t.metrics["m"] = value;
  return t;
}

TEST(AggregateTest, MeanAndSampleStdOverSuccessfulTrials) {
  const auto summary = Aggregate({Trial(0, true, 1.0), Trial(1, true, 3.0), Trial(2, false, 99.0)});
  const MetricSummary& m = summary.at("m");
  EXPECT_EQ(m.n, 2);
  EXPECT_DOUBLE_EQ(m.mean, 2.0);
  EXPECT_DOUBLE_EQ(m.std, std::sqrt(2.0));
  EXPECT_EQ(Aggregate({Trial(0, true, 4.0)}).at("m").std, 0.0);
}

TEST(RunTest, DeterministicForAFixedSeed) {
  const ExperimentConfig c = SmallConfig();
  ASSERT_OK_AND_ASSIGN(const ExperimentOutput a, RunExperiment(c));
  ASSERT_OK_AND_ASSIGN(const ExperimentOutput b, RunExperiment(c));
  EXPECT_EQ(ReportToJson(a.report), ReportToJson(b.report));
  ASSERT_EQ(a.report.trials.size(), 2u);
  for (const TrialResult& t : a.report.trials) {
    EXPECT_TRUE(t.ok) << t.error_stage << ": " << t.error_message;
    EXPECT_EQ(t.seed, c.seed + t.trial);
    for (const char* key : {"normal.test_accuracy", "bootstrap.nn.auc", "normal.conf.accuracy"}) {
      EXPECT_TRUE(t.metrics.contains(key)) << key;
    }
  }
  EXPECT_NE(a.report.trials[0].metrics, a.report.trials[1].metrics);
  EXPECT_EQ(a.report.summary.at("normal.nn.auc").n, 2);
}

TEST(RunTest, ParallelJobsGiveTheSameReport) {
  ExperimentConfig c = SmallConfig();
  ASSERT_OK_AND_ASSIGN(const ExperimentOutput serial, RunExperiment(c));
  c.jobs = 2;
  ASSERT_OK_AND_ASSIGN(const ExperimentOutput parallel, RunExperiment(c));
  EXPECT_EQ(ReportToJson(serial.report), ReportToJson(parallel.report));
}

TEST(RunTest, SingleTrialHasZeroStd) {
  ExperimentConfig c = SmallConfig();
  c.repeat = 1;
  ASSERT_OK_AND_ASSIGN(const ExperimentOutput out, RunExperiment(c));
  for (const auto& [key, s] : out.report.summary) {
    EXPECT_EQ(s.std, 0.0) << key;
    EXPECT_EQ(s.n, 1);
  }
}

TEST(RunTest, FailingStageIsRecordedPerTrial) {
  ExperimentConfig c = SmallConfig();
  c.aia = true;  // the synthetic data carries no sensitive attribute
  ASSERT_OK_AND_ASSIGN(const ExperimentOutput out, RunExperiment(c));
  for (const TrialResult& t : out.report.trials) {
    EXPECT_FALSE(t.ok);
    EXPECT_EQ(t.error_stage.rfind("aia", 0), 0u) << t.error_stage;
    EXPECT_FALSE(t.error_message.empty());
    EXPECT_TRUE(t.metrics.empty());
  }
  EXPECT_TRUE(out.report.summary.empty());
}

TEST(RunTest, AiaOnSensitiveDataEmitsAccuracyAndBuckets) {
  ExperimentConfig c = SmallConfig();
  c.repeat = 1;
  c.attacks.clear();
  c.aia = true;
  c.dataset.synth->sensitive_count = 2;
  c.dataset.synth->sensitive_block = 4;
  ASSERT_OK_AND_ASSIGN(const ExperimentOutput out, RunExperiment(c));
  const TrialResult& t = out.report.trials[0];
  ASSERT_TRUE(t.ok) << t.error_stage << ": " << t.error_message;
  for (const std::string regime : {"normal", "bootstrap"}) {
    const double accuracy = t.metrics.at(regime + ".aia.accuracy");
    EXPECT_GE(accuracy, 0.0);
    EXPECT_LE(accuracy, 1.0);
    EXPECT_GE(t.metrics.at(regime + ".aia.majority_baseline"), 0.5);
    EXPECT_EQ(t.tables.at(regime + ".aia.buckets").rows.size(), 10u);
  }
}

TEST(ReportTest, JsonRoundTrip) {
  ASSERT_OK_AND_ASSIGN(const ExperimentOutput out, RunExperiment(SmallConfig()));
  const std::string json = ReportToJson(out.report);
  ASSERT_OK_AND_ASSIGN(const AuditReport parsed, ReportFromJson(json));
  EXPECT_EQ(parsed, out.report);
  EXPECT_EQ(ReportToJson(parsed), json);
  EXPECT_EQ(json.back(), '\n');
  EXPECT_EQ(parsed.config_json, ExperimentConfigToJson(SmallConfig()));
  EXPECT_FALSE(ReportFromJson("{\"trials\": 3}").ok());
}

TEST(EmitTest, WritesJsonAndCsvBundle) {
  ExperimentConfig c = SmallConfig();
  c.repeat = 1;
  c.emit_verdicts = true;
  ASSERT_OK_AND_ASSIGN(const ExperimentOutput out, RunExperiment(c));
  const std::filesystem::path dir =
      std::filesystem::path(::testing::TempDir()) / "clpriv_emit_test";
  std::filesystem::remove_all(dir);
  ASSERT_OK(EmitReport(out, dir.string()));
  EXPECT_EQ(Slurp(dir / "unit.report.json"), ReportToJson(out.report));
  const std::string summary = Slurp(dir / "unit.summary.csv");
  EXPECT_EQ(summary.rfind("metric,mean,std,n\n", 0), 0u) << summary.substr(0, 40);
  const std::string roc = Slurp(dir / "unit.trial0.normal.nn.roc.csv");
  EXPECT_EQ(roc.rfind("fpr,tpr\n", 0), 0u);
  std::istringstream roc_lines(roc.substr(8));
  double last_fpr = 0.0;
  double last_tpr = 0.0;
  int points = 0;
  for (std::string line; std::getline(roc_lines, line); ++points) {
    const size_t comma = line.find(',');
    ASSERT_NE(comma, std::string::npos) << line;
    const double fpr = std::stod(line.substr(0, comma));
    const double tpr = std::stod(line.substr(comma + 1));
    EXPECT_GE(fpr, last_fpr);
    EXPECT_GE(tpr, last_tpr);
    last_fpr = fpr;
    last_tpr = tpr;
  }
  EXPECT_GE(points, 2);
  EXPECT_EQ(last_fpr, 1.0);
  EXPECT_EQ(last_tpr, 1.0);
  const std::string verdicts = Slurp(dir / "unit.trial0.normal.nn.verdicts.csv");
  EXPECT_EQ(verdicts.rfind(
                "sample_index,is_member_truth,verdict,confidence,raw_score,difficulty_level\n", 0),
            0u);

  // A second emit replaces files in place and leaves no temporaries behind.
  const auto count = [&dir] {
    return std::distance(std::filesystem::directory_iterator(dir),
                         std::filesystem::directory_iterator());
  };
  const auto before = count();
  ASSERT_OK(EmitReport(out, dir.string()));
  EXPECT_EQ(count(), before);
  std::filesystem::remove_all(dir);
}

TEST(EmitTest, JsonOnlyFormat) {
  ExperimentConfig c = SmallConfig();
  c.repeat = 1;
  ASSERT_OK_AND_ASSIGN(const ExperimentOutput out, RunExperiment(c));
  const std::filesystem::path dir =
      std::filesystem::path(::testing::TempDir()) / "clpriv_emit_json";
  std::filesystem::remove_all(dir);
  ASSERT_OK(EmitReport(out, dir.string(), ReportFormat::kJson));
  EXPECT_TRUE(std::filesystem::exists(dir / "unit.report.json"));
  EXPECT_FALSE(std::filesystem::exists(dir / "unit.summary.csv"));
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace clpriv
