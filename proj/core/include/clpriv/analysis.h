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

// Memorization experiments, KNN-Shapley data valuation, ROC analysis and the
// per-difficulty bucket tables.

#ifndef CLPRIV_ANALYSIS_H_
#define CLPRIV_ANALYSIS_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "clpriv/curriculum.h"
#include "clpriv/data.h"
#include "clpriv/mia.h"
#include "clpriv/nn.h"

namespace clpriv {

// ---------------------------------------------------------------------------
// Memorization.

enum class MemorizationScenario { kNotSeen, kFirstSeen, kLastSeen, kRandom };

inline constexpr std::array<MemorizationScenario, 4> kAllScenarios = {
    MemorizationScenario::kNotSeen, MemorizationScenario::kFirstSeen,
    MemorizationScenario::kLastSeen, MemorizationScenario::kRandom};

std::string ScenarioName(MemorizationScenario scenario);
absl::StatusOr<MemorizationScenario> ParseScenario(const std::string& name);

struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

// Linear interpolation between order statistics.
absl::StatusOr<Quartiles> ComputeQuartiles(std::vector<double> values);

struct MemorizationConfig {
  double holdout_fraction = 0.04;
  std::vector<MemorizationScenario> scenarios = {kAllScenarios.begin(),
                                                 kAllScenarios.end()};
  std::vector<int> layer_dims;
  TrainConfig train;
  // Independent training seeds whose probabilities are averaged.
  int seed_count = 1;
};

struct MemorizationResult {
  MemorizationScenario scenario = MemorizationScenario::kNotSeen;
  std::vector<int> holdout;                 // split indices, hardest last
  std::vector<double> true_class_probability;  // aligned with holdout
  Quartiles quartiles;
};

// Training order for a scenario: the curriculum order without the holdout,
// with the holdout prepended, appended, scattered at seeded random positions,
// or left out entirely.
absl::StatusOr<std::vector<int>> ScenarioOrder(MemorizationScenario scenario,
                                               std::span<const int> curriculum_order,
                                               std::span<const int> holdout,
                                               uint64_t seed);

absl::StatusOr<std::vector<MemorizationResult>> MemorizationExperiment(
    const Dataset& split, const Curriculum& curriculum,
    const MemorizationConfig& config);

// ---------------------------------------------------------------------------
// KNN-Shapley.

// Values of every training point for one validation point (x, y).
absl::StatusOr<std::vector<double>> KnnShapleyPoint(
    const Eigen::Ref<const Matrix>& train_x, std::span<const int> train_y,
    const Eigen::Ref<const Vector>& x, int y, int k);

// Mean of KnnShapleyPoint over the validation split.
absl::StatusOr<std::vector<double>> KnnShapley(const Dataset& train,
                                               const Dataset& validation, int k);

// ---------------------------------------------------------------------------
// ROC.

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // member iff score >= threshold
};

struct RocCurve {
  std::vector<RocPoint> points;  // from (0, 0) to (1, 1)
  double auc = 0.0;
};

struct TprAtFpr {
  double fpr_target = 0.0;
  double fpr = 0.0;  // achieved
  double tpr = 0.0;
};

// Sweeps every distinct score as a threshold, highest first. Samples sharing
// a score flip together, so ties count half in the AUC.
absl::StatusOr<RocCurve> ComputeRoc(std::span<const double> scores,
                                    const std::vector<bool>& truth);

// For each target, the highest TPR among points with FPR <= target.
std::vector<TprAtFpr> TprAtFprTable(const RocCurve& roc,
                                    std::span<const double> fpr_grid);

std::vector<double> DefaultFprGrid();

// ---------------------------------------------------------------------------
// Per-difficulty buckets.

struct BucketRow {
  int level = 0;
  int member_count = 0;
  std::optional<double> accuracy;           // absent for an empty level
  std::optional<double> member_likelihood;  // mean over the level's members
  double pool_likelihood = 0.0;             // mean over the non-member pool
};

struct Histogram {
  double min = 0.0;  // raw value mapped to 0
  double max = 0.0;  // raw value mapped to 1
  std::vector<int> counts;
};

struct BucketReport {
  std::vector<BucketRow> rows;
  Histogram member_loss;
  Histogram non_member_loss;
};

struct BucketInputs {
  std::vector<MembershipVerdict> member_verdicts;
  std::vector<int> member_levels;
  std::vector<double> member_likelihood;
  std::vector<double> member_loss;
  std::vector<MembershipVerdict> pool_verdicts;
  std::vector<double> pool_likelihood;
  std::vector<double> pool_loss;
};

inline constexpr int kHistogramBins = 20;

// Level accuracy is measured over the level's members together with the
// whole non-member pool. Both loss histograms share one min-max scale.
absl::StatusOr<BucketReport> ComputeBucketReport(const BucketInputs& inputs,
                                                 int n_levels = 10,
                                                 int bins = kHistogramBins);

// Maps min to 0 and max to 1; a constant input maps to all zeros.
std::vector<double> NormalizeMinMax(std::span<const double> values);

}  // namespace clpriv

#endif  // CLPRIV_ANALYSIS_H_
