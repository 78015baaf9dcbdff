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

// Difficulty scoring, curriculum construction, pacing and the curriculum
// training loop: the training order is computed once, then every epoch walks
// the same order while the pacing function widens the eligible prefix.

#ifndef CLPRIV_CURRICULUM_H_
#define CLPRIV_CURRICULUM_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "clpriv/data.h"
#include "clpriv/nn.h"

namespace clpriv {

enum class CurriculumMode { kBootstrap, kTransfer, kBaseline, kAnti };

std::string CurriculumModeName(CurriculumMode mode);
absl::StatusOr<CurriculumMode> ParseCurriculumMode(const std::string& name);

class Curriculum {
 public:
  // `order` must be a permutation of 0..N-1. Bootstrap and transfer orders
  // must have non-decreasing scores, anti orders non-increasing scores.
  static absl::StatusOr<Curriculum> FromOrder(std::vector<double> scores,
                                              std::vector<int> order,
                                              CurriculumMode mode);

  int size() const { return static_cast<int>(order_.size()); }
  CurriculumMode mode() const { return mode_; }
  const std::vector<double>& scores() const { return scores_; }
  // Sample indices, first = presented first.
  const std::vector<int>& order() const { return order_; }
  // ranks()[i] is the 1-based position of sample i in order().
  const std::vector<int>& ranks() const { return ranks_; }

  absl::StatusOr<int> Rank(int sample_index) const;

 private:
  Curriculum(std::vector<double> scores, std::vector<int> order,
             std::vector<int> ranks, CurriculumMode mode)
      : scores_(std::move(scores)),
        order_(std::move(order)),
        ranks_(std::move(ranks)),
        mode_(mode) {}

  std::vector<double> scores_;
  std::vector<int> order_;
  std::vector<int> ranks_;
  CurriculumMode mode_;
};

// Train a fresh model normally on the split, then score with its loss.
struct BootstrapMeasurer {
  std::vector<int> layer_dims;
  TrainConfig config;
};

// Score with an already-trained network (e.g. one fitted on auxiliary data).
struct TransferMeasurer {
  const Network* scorer = nullptr;
};

using DifficultyMethod = std::variant<BootstrapMeasurer, TransferMeasurer>;

struct DifficultyScores {
  std::vector<double> scores;  // per-sample loss; higher is more difficult
  std::optional<Network> measurer;  // set for bootstrap
};

absl::StatusOr<std::vector<double>> ScoreWithMeasurer(const Network& measurer,
                                                      const Dataset& split);
absl::StatusOr<DifficultyScores> ScoreDifficulty(const Dataset& split,
                                                 const DifficultyMethod& method);

// bootstrap/transfer: ascending score with ties broken by sample index;
// anti: the exact reverse of that order; baseline: a seeded random order.
absl::StatusOr<Curriculum> BuildCurriculum(std::vector<double> scores,
                                           CurriculumMode mode, uint64_t seed);

inline constexpr double kDefaultPacingStart = 0.04;
inline constexpr double kDefaultPacingGrowth = 1.9;

// Varied exponential pacing:
//   size(i) = min(N, ceil(N * start * growth^floor((i - 1) / step_length)))
// for iterations i = 1..M of an epoch.
class PacingSchedule {
 public:
  // step_length <= 0 selects max(1, M / 10).
  static absl::StatusOr<PacingSchedule> Create(
      int sample_count, int total_iterations,
      double start_fraction = kDefaultPacingStart,
      double growth = kDefaultPacingGrowth, int step_length = 0);

  absl::StatusOr<int> Size(int iteration) const;

  int sample_count() const { return sample_count_; }
  int total_iterations() const { return total_iterations_; }
  double start_fraction() const { return start_fraction_; }
  double growth() const { return growth_; }
  int step_length() const { return step_length_; }

 private:
  PacingSchedule(int n, int m, double start, double growth, int step)
      : sample_count_(n),
        total_iterations_(m),
        start_fraction_(start),
        growth_(growth),
        step_length_(step) {}

  int sample_count_;
  int total_iterations_;
  double start_fraction_;
  double growth_;
  int step_length_;
};

// Mini-batches per epoch: ceil(n / batch_size).
int IterationsPerEpoch(int sample_count, int batch_size);

enum class BatchSampling {
  // Draw min(batch_size, size(i)) distinct samples uniformly from the prefix.
  kUniform,
  // Skip sampling: batch i takes positions (i-1)*B .. i*B-1, wrapped into the
  // current prefix.
  kSequential,
};

struct CurriculumTrainOptions {
  BatchSampling sampling = BatchSampling::kUniform;
  BatchObserver observer;
};

absl::StatusOr<TrainResult> CurriculumTrain(
    Network net, const Dataset& split, const Curriculum& curriculum,
    const PacingSchedule& schedule, const TrainConfig& config,
    const CurriculumTrainOptions& options = {});

// Every epoch visits `order` front to back in consecutive mini-batches. The
// order may omit samples of `split`.
absl::StatusOr<TrainResult> FixedOrderTrain(Network net, const Dataset& split,
                                            std::span<const int> order,
                                            const TrainConfig& config,
                                            const BatchObserver& observer = {});

// CSV with columns sample_index,score,rank, one row per sample.
std::string CurriculumCsv(const Curriculum& curriculum);

}  // namespace clpriv

#endif  // CLPRIV_CURRICULUM_H_
