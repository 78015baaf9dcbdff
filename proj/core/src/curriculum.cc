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

#include "clpriv/curriculum.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "absl/strings/str_cat.h"
#include "clpriv/csv.h"
#include "clpriv/random.h"
#include "clpriv/status_macros.h"

namespace clpriv {
namespace {

// Knuth's selection sampling: `count` distinct positions from [0, population),
// returned in increasing order.
void SamplePositions(int population, int count, Rng& rng,
                     std::vector<int>& out) {
  out.clear();
  int needed = count;
  for (int p = 0; p < population && needed > 0; ++p) {
    const int remaining = population - p;
    if (UniformIndex(static_cast<uint64_t>(remaining), rng) <
        static_cast<uint64_t>(needed)) {
      out.push_back(p);
      --needed;
    }
  }
}

absl::Status CheckSplit(const Network& net, const Dataset& split) {
  if (split.size() == 0) return absl::InvalidArgumentError("empty split");
  if (split.dim() != net.input_dim()) {
    return absl::InvalidArgumentError(
        absl::StrCat("split has ", split.dim(), " features, network expects ",
                     net.input_dim()));
  }
  return absl::OkStatus();
}

// Runs one training step on the given sample indices and folds its stats in.
class EpochRunner {
 public:
  EpochRunner(const Dataset& split, const TrainConfig& config)
      : split_(split), config_(config),
        noise_rng_(DeriveSeed(config.seed, kStreamDpNoise)) {}

  absl::Status Step(Network& net, std::span<const int> batch) {
    GatherColumns(split_.features, batch, batch_x_);
    batch_labels_.resize(batch.size());
    for (size_t i = 0; i < batch.size(); ++i) {
      batch_labels_[i] = split_.labels[batch[i]];
    }
    ASSIGN_OR_RETURN(const LossAndGradient step,
                     ApplyTrainingStep(net, batch_x_, batch_labels_, config_,
                                       noise_rng_));
    loss_sum_ += step.loss * static_cast<double>(batch.size());
    correct_ += step.correct;
    seen_ += static_cast<int>(batch.size());
    return absl::OkStatus();
  }

  EpochStats Finish() {
    EpochStats stats;
    if (seen_ > 0) {
      stats.loss = loss_sum_ / seen_;
      stats.accuracy = static_cast<double>(correct_) / seen_;
    }
    loss_sum_ = 0.0;
    correct_ = 0;
    seen_ = 0;
    return stats;
  }

 private:
  const Dataset& split_;
  const TrainConfig& config_;
  Rng noise_rng_;
  Matrix batch_x_;
  std::vector<int> batch_labels_;
  double loss_sum_ = 0.0;
  int correct_ = 0;
  int seen_ = 0;
};

}  // namespace

std::string CurriculumModeName(CurriculumMode mode) {
  switch (mode) {
    case CurriculumMode::kBootstrap:
      return "bootstrap";
    case CurriculumMode::kTransfer:
      return "transfer";
    case CurriculumMode::kBaseline:
      return "baseline";
    case CurriculumMode::kAnti:
      return "anti";
  }
  return "unknown";
}

absl::StatusOr<CurriculumMode> ParseCurriculumMode(const std::string& name) {
  for (const CurriculumMode mode :
       {CurriculumMode::kBootstrap, CurriculumMode::kTransfer,
        CurriculumMode::kBaseline, CurriculumMode::kAnti}) {
    if (CurriculumModeName(mode) == name) return mode;
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unknown curriculum mode '", name, "'"));
}

absl::StatusOr<Curriculum> Curriculum::FromOrder(std::vector<double> scores,
                                                 std::vector<int> order,
                                                 CurriculumMode mode) {
  const int n = static_cast<int>(order.size());
  if (n == 0) return absl::InvalidArgumentError("empty curriculum");
  if (static_cast<int>(scores.size()) != n) {
    return absl::InvalidArgumentError("scores/order size mismatch");
  }
  std::vector<int> ranks(n, 0);
  for (int pos = 0; pos < n; ++pos) {
    const int i = order[pos];
    if (i < 0 || i >= n || ranks[i] != 0) {
      return absl::InvalidArgumentError("order is not a permutation of 0..N-1");
    }
    ranks[i] = pos + 1;
  }
  for (int pos = 1; pos < n; ++pos) {
    const double prev = scores[order[pos - 1]];
    const double cur = scores[order[pos]];
    if ((mode == CurriculumMode::kBootstrap ||
         mode == CurriculumMode::kTransfer) && cur < prev) {
      return absl::InvalidArgumentError("scores decrease along an easy-first order");
    }
    if (mode == CurriculumMode::kAnti && cur > prev) {
      return absl::InvalidArgumentError("scores increase along an anti order");
    }
  }
  return Curriculum(std::move(scores), std::move(order), std::move(ranks), mode);
}

absl::StatusOr<int> Curriculum::Rank(int sample_index) const {
  if (sample_index < 0 || sample_index >= size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("sample ", sample_index, " not in curriculum of size ",
                     size()));
  }
  return ranks_[sample_index];
}

absl::StatusOr<std::vector<double>> ScoreWithMeasurer(const Network& measurer,
                                                      const Dataset& split) {
  RETURN_IF_ERROR(CheckSplit(measurer, split));
  ASSIGN_OR_RETURN(const Vector losses,
                   PerSampleLoss(measurer, split.features, split.labels));
  return std::vector<double>(losses.data(), losses.data() + losses.size());
}

absl::StatusOr<DifficultyScores> ScoreDifficulty(
    const Dataset& split, const DifficultyMethod& method) {
  if (const auto* transfer = std::get_if<TransferMeasurer>(&method)) {
    if (transfer->scorer == nullptr) {
      return absl::InvalidArgumentError("transfer measurer has no scorer");
    }
    ASSIGN_OR_RETURN(std::vector<double> scores,
                     ScoreWithMeasurer(*transfer->scorer, split));
    return DifficultyScores{std::move(scores), std::nullopt};
  }
  const auto& bootstrap = std::get<BootstrapMeasurer>(method);
  ASSIGN_OR_RETURN(Network fresh,
                   Network::Create(bootstrap.layer_dims, bootstrap.config.seed));
  ASSIGN_OR_RETURN(TrainResult trained,
                   Train(std::move(fresh), split.features, split.labels,
                         bootstrap.config));
  ASSIGN_OR_RETURN(std::vector<double> scores,
                   ScoreWithMeasurer(trained.network, split));
  return DifficultyScores{std::move(scores), std::move(trained.network)};
}

absl::StatusOr<Curriculum> BuildCurriculum(std::vector<double> scores,
                                           CurriculumMode mode, uint64_t seed) {
  const int n = static_cast<int>(scores.size());
  if (n == 0) return absl::InvalidArgumentError("no difficulty scores");
  for (const double s : scores) {
    if (std::isnan(s)) return absl::InvalidArgumentError("NaN difficulty score");
  }
  std::vector<int> order;
  if (mode == CurriculumMode::kBaseline) {
    Rng rng(DeriveSeed(seed, kStreamCurriculum));
    order = RandomPermutation(n, rng);
  } else {
    order.resize(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&scores](int a, int b) { return scores[a] < scores[b]; });
    if (mode == CurriculumMode::kAnti) std::reverse(order.begin(), order.end());
  }
  return Curriculum::FromOrder(std::move(scores), std::move(order), mode);
}

absl::StatusOr<PacingSchedule> PacingSchedule::Create(int sample_count,
                                                      int total_iterations,
                                                      double start_fraction,
                                                      double growth,
                                                      int step_length) {
  if (sample_count < 1 || total_iterations < 1) {
    return absl::FailedPreconditionError(
        "pacing needs at least one sample and one iteration");
  }
  if (!(start_fraction > 0.0 && start_fraction <= 1.0)) {
    return absl::FailedPreconditionError("start_fraction must be in (0, 1]");
  }
  if (!(growth > 1.0) || !std::isfinite(growth)) {
    return absl::FailedPreconditionError("growth must be > 1");
  }
  if (step_length <= 0) step_length = std::max(1, total_iterations / 10);
  return PacingSchedule(sample_count, total_iterations, start_fraction, growth,
                        step_length);
}

absl::StatusOr<int> PacingSchedule::Size(int iteration) const {
  if (iteration < 1 || iteration > total_iterations_) {
    return absl::InvalidArgumentError(absl::StrCat(
        "iteration ", iteration, " outside 1..", total_iterations_));
  }
  const int step = (iteration - 1) / step_length_;
  const double fraction = start_fraction_ * std::pow(growth_, step);
  if (fraction >= 1.0) return sample_count_;
  // The small slack keeps exact products such as 100 * 0.04 from rounding up.
  const double size = std::ceil(sample_count_ * fraction - 1e-9);
  return std::clamp(static_cast<int>(size), 1, sample_count_);
}

int IterationsPerEpoch(int sample_count, int batch_size) {
  return (sample_count + batch_size - 1) / batch_size;
}

absl::StatusOr<TrainResult> CurriculumTrain(
    Network net, const Dataset& split, const Curriculum& curriculum,
    const PacingSchedule& schedule, const TrainConfig& config,
    const CurriculumTrainOptions& options) {
  RETURN_IF_ERROR(config.Validate());
  RETURN_IF_ERROR(CheckSplit(net, split));
  const int n = split.size();
  if (curriculum.size() != n) {
    return absl::FailedPreconditionError(
        absl::StrCat("curriculum covers ", curriculum.size(),
                     " samples, split has ", n));
  }
  const int iterations = IterationsPerEpoch(n, config.batch_size);
  if (schedule.sample_count() != n || schedule.total_iterations() != iterations) {
    return absl::FailedPreconditionError(absl::StrCat(
        "pacing schedule is for ", schedule.sample_count(), " samples x ",
        schedule.total_iterations(), " iterations; training needs ", n, " x ",
        iterations));
  }
  std::vector<int> prefix_sizes(iterations);
  for (int i = 1; i <= iterations; ++i) {
    ASSIGN_OR_RETURN(prefix_sizes[i - 1], schedule.Size(i));
  }

  const std::vector<int>& order = curriculum.order();
  Rng batch_rng(DeriveSeed(config.seed, kStreamBatches));
  EpochRunner runner(split, config);
  TrainResult result{std::move(net), {}};
  result.history.reserve(config.epochs);
  std::vector<int> positions;
  std::vector<int> batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (int i = 0; i < iterations; ++i) {
      const int prefix = prefix_sizes[i];
      batch.clear();
      if (options.sampling == BatchSampling::kUniform) {
        SamplePositions(prefix, std::min(config.batch_size, prefix), batch_rng,
                        positions);
        for (const int p : positions) batch.push_back(order[p]);
      } else {
        const int begin = i * config.batch_size;
        const int end = std::min(begin + config.batch_size, n);
        for (int p = begin; p < end; ++p) batch.push_back(order[p % prefix]);
      }
      if (options.observer) options.observer(epoch, i, batch);
      RETURN_IF_ERROR(runner.Step(result.network, batch));
    }
    result.history.push_back(runner.Finish());
  }
  return result;
}

absl::StatusOr<TrainResult> FixedOrderTrain(Network net, const Dataset& split,
                                            std::span<const int> order,
                                            const TrainConfig& config,
                                            const BatchObserver& observer) {
  RETURN_IF_ERROR(config.Validate());
  RETURN_IF_ERROR(CheckSplit(net, split));
  if (order.empty()) return absl::InvalidArgumentError("empty training order");
  for (const int i : order) {
    if (i < 0 || i >= split.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("order refers to sample ", i, " outside the split"));
    }
  }
  const int n = static_cast<int>(order.size());
  EpochRunner runner(split, config);
  TrainResult result{std::move(net), {}};
  result.history.reserve(config.epochs);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    int iteration = 0;
    for (int start = 0; start < n; start += config.batch_size, ++iteration) {
      const int width = std::min(config.batch_size, n - start);
      const std::span<const int> batch = order.subspan(start, width);
      if (observer) observer(epoch, iteration, batch);
      RETURN_IF_ERROR(runner.Step(result.network, batch));
    }
    result.history.push_back(runner.Finish());
  }
  return result;
}

std::string CurriculumCsv(const Curriculum& curriculum) {
  CsvTable table({"sample_index", "score", "rank"});
  for (int i = 0; i < curriculum.size(); ++i) {
    table.AddRow({absl::StrCat(i), FormatDouble(curriculum.scores()[i]),
                  absl::StrCat(curriculum.ranks()[i])});
  }
  return table.ToString();
}

}  // namespace clpriv
