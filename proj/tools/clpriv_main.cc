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

// clpriv: command-line front end for the privacy audit workbench.
//
//   clpriv run --config exp.json --out results/
//   clpriv attack --config exp.json --out results/ --repeat 1 --jobs 4
//   clpriv report --input results/exp.report.json --out plots/

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "clpriv/csv.h"
#include "clpriv/harness.h"

namespace {

constexpr int kExitTrialFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

struct CommonFlags {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<uint64_t> seed;
  std::optional<int> repeat;
  std::optional<int> jobs;
  std::string format = "both";
};

int ExitCodeFor(const absl::Status& status) {
  switch (status.code()) {
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kFailedPrecondition:
    case absl::StatusCode::kUnimplemented:
      return kExitConfig;
    default:
      return kExitIo;
  }
}

int Fail(const std::string& stage, const absl::Status& status) {
  std::cerr << "clpriv: [" << stage << "] " << status.message() << "\n";
  return ExitCodeFor(status);
}

clpriv::ReportFormat FormatFromFlag(const std::string& flag) {
  if (flag == "json") return clpriv::ReportFormat::kJson;
  if (flag == "csv") return clpriv::ReportFormat::kCsvBundle;
  return clpriv::ReportFormat::kBoth;
}

int RunVerb(const std::string& verb, const CommonFlags& flags, unsigned stages,
            bool keep_models) {
  absl::StatusOr<clpriv::ExperimentConfig> config =
      clpriv::LoadExperimentConfig(flags.config_path);
  if (!config.ok()) return Fail("config", config.status());
  if (flags.seed.has_value()) config->seed = *flags.seed;
  if (flags.repeat.has_value()) config->repeat = *flags.repeat;
  if (flags.jobs.has_value()) config->jobs = *flags.jobs;
  if (verb == "defend" && config->defense.kind == clpriv::DefenseKind::kNone) {
    return Fail("config", absl::FailedPreconditionError(
                              "'defend' needs a defense.kind other than none"));
  }
  clpriv::RunOptions options;
  options.stages = stages;
  options.keep_models = keep_models;
  absl::StatusOr<clpriv::ExperimentOutput> output =
      clpriv::RunExperiment(*config, options);
  if (!output.ok()) return Fail("config", output.status());
  const absl::Status emitted =
      clpriv::EmitReport(*output, flags.out_dir, FormatFromFlag(flags.format));
  if (!emitted.ok()) return Fail("emit", emitted);

  int failed = 0;
  for (const clpriv::TrialResult& trial : output->report.trials) {
    if (trial.ok) continue;
    ++failed;
    std::cerr << "clpriv: trial " << trial.trial << " (seed " << trial.seed
              << ") failed at [" << trial.error_stage << "] "
              << trial.error_message << "\n";
  }
  for (const auto& [metric, s] : output->report.summary) {
    std::printf("%-40s %10.6g +- %-10.4g (n=%d)\n", metric.c_str(), s.mean, s.std,
                s.n);
  }
  return failed > 0 ? kExitTrialFailed : 0;
}

int ReportVerb(const std::string& input, const CommonFlags& flags) {
  absl::StatusOr<std::string> text = clpriv::ReadFile(input);
  if (!text.ok()) return Fail("report", text.status());
  absl::StatusOr<clpriv::AuditReport> report = clpriv::ReportFromJson(*text);
  if (!report.ok()) return Fail("report", report.status());
  clpriv::ExperimentOutput output;
  output.report = *std::move(report);
  const absl::Status emitted =
      clpriv::EmitReport(output, flags.out_dir, FormatFromFlag(flags.format));
  if (!emitted.ok()) return Fail("emit", emitted);
  return 0;
}

void AddCommonFlags(CLI::App* app, CommonFlags& flags, bool needs_config) {
  auto* config = app->add_option("--config", flags.config_path,
                                 "Experiment configuration (JSON)");
  if (needs_config) config->required()->check(CLI::ExistingFile);
  app->add_option("--out", flags.out_dir, "Output directory");
  app->add_option("--format", flags.format, "Report format")
      ->check(CLI::IsMember({"json", "csv", "both"}));
}

void AddRunFlags(CLI::App* app, CommonFlags& flags) {
  AddCommonFlags(app, flags, /*needs_config=*/true);
  app->add_option("--seed", flags.seed, "Override the base seed");
  app->add_option("--repeat", flags.repeat, "Override the trial count")
      ->check(CLI::PositiveNumber);
  app->add_option("--jobs", flags.jobs, "Trials run in parallel")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"clpriv " + clpriv::VersionString() +
               ": privacy audits of curriculum-trained classifiers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", clpriv::VersionString());

  CommonFlags flags;
  struct VerbSpec {
    const char* name;
    const char* help;
    unsigned stages;
    bool keep_models;
  };
  const VerbSpec verbs[] = {
      {"run", "Full pipeline", clpriv::kStageAll, false},
      {"train", "Train target models and save checkpoints and curricula",
       clpriv::kStageTargets, true},
      {"attack", "Train targets and evaluate membership and attribute attacks",
       clpriv::kStageTargets | clpriv::kStageAttacks | clpriv::kStageAia, false},
      {"defend", "Evaluate attacks against a configured defense",
       clpriv::kStageTargets | clpriv::kStageAttacks, false},
      {"memorize", "Memorization scenarios on the most difficult samples",
       clpriv::kStageMemorization, false},
      {"shapley", "KNN-Shapley values bucketed by difficulty",
       clpriv::kStageShapley, false},
  };
  std::map<CLI::App*, const VerbSpec*> by_app;
  for (const VerbSpec& verb : verbs) {
    CLI::App* sub = app.add_subcommand(verb.name, verb.help);
    AddRunFlags(sub, flags);
    by_app[sub] = &verb;
  }
  std::string report_input;
  CLI::App* report = app.add_subcommand("report", "Re-emit a saved JSON report");
  report->add_option("--input", report_input, "Report JSON")
      ->required()
      ->check(CLI::ExistingFile);
  AddCommonFlags(report, flags, /*needs_config=*/false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  if (report->parsed()) return ReportVerb(report_input, flags);
  for (const auto& [sub, verb] : by_app) {
    if (sub->parsed()) {
      return RunVerb(verb->name, flags, verb->stages, verb->keep_models);
    }
  }
  return kExitConfig;
}
