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

#include "clpriv/aia.h"

#include <algorithm>
#include <map>

#include "absl/strings/str_cat.h"
#include "clpriv/random.h"
#include "clpriv/status_macros.h"

namespace clpriv {

TrainConfig DefaultAiaTrainConfig(TrainConfig base, uint64_t seed) {
  base.epochs = 100;
  base.learning_rate = 0.01;
  base.seed = seed;
  return base;
}

absl::StatusOr<AiaAttackModel> AiaTrainOnEmbeddings(
    const Eigen::Ref<const Matrix>& embeddings, std::span<const int> sensitive,
    int sensitive_count, const TrainConfig& config) {
  if (embeddings.cols() != static_cast<Eigen::Index>(sensitive.size())) {
    return absl::InvalidArgumentError("embedding/attribute count mismatch");
  }
  if (sensitive.empty()) return absl::InvalidArgumentError("no auxiliary samples");
  for (const int s : sensitive) {
    if (s < 0 || s >= sensitive_count) {
      return absl::InvalidArgumentError(
          absl::StrCat("sensitive value ", s, " outside 0..", sensitive_count - 1));
    }
  }
  ASSIGN_OR_RETURN(
      Network net,
      Network::Create({static_cast<int>(embeddings.rows()), kAiaHiddenWidth,
                       kAiaHiddenWidth, sensitive_count},
                      DeriveSeed(config.seed, kStreamAia)));
  ASSIGN_OR_RETURN(TrainResult trained,
                   Train(std::move(net), embeddings, sensitive, config));
  return AiaAttackModel{std::move(trained.network)};
}

absl::StatusOr<AiaAttackModel> AiaTrain(const Network& target,
                                        const Dataset& auxiliary,
                                        const TrainConfig& config) {
  if (!auxiliary.has_sensitive()) {
    return absl::FailedPreconditionError(
        "auxiliary split has no sensitive attribute labels");
  }
  ASSIGN_OR_RETURN(const Matrix embeddings, EmbedBatch(target, auxiliary.features));
  return AiaTrainOnEmbeddings(embeddings, *auxiliary.sensitive,
                              auxiliary.sensitive_count, config);
}

absl::StatusOr<std::vector<AiaPrediction>> AiaInferEmbeddings(
    const AiaAttackModel& attack, const Eigen::Ref<const Matrix>& embeddings) {
  ASSIGN_OR_RETURN(const Matrix posteriors, ForwardBatch(attack.network, embeddings));
  std::vector<AiaPrediction> out(posteriors.cols());
  for (Eigen::Index j = 0; j < posteriors.cols(); ++j) {
    Eigen::Index arg = 0;
    posteriors.col(j).maxCoeff(&arg);
    out[j] = AiaPrediction{static_cast<int>(arg), posteriors.col(j)};
  }
  return out;
}

absl::StatusOr<std::vector<AiaPrediction>> AiaInfer(
    const AiaAttackModel& attack, const Network& target,
    const Eigen::Ref<const Matrix>& xs) {
  ASSIGN_OR_RETURN(const Matrix embeddings, EmbedBatch(target, xs));
  return AiaInferEmbeddings(attack, embeddings);
}

absl::StatusOr<double> MajorityBaselineAccuracy(std::span<const int> reference,
                                                std::span<const int> evaluated) {
  if (reference.empty() || evaluated.empty()) {
    return absl::InvalidArgumentError("majority baseline needs samples");
  }
  std::map<int, int> counts;
  for (const int s : reference) ++counts[s];
  int majority = counts.begin()->first;
  int best = 0;
  for (const auto& [value, count] : counts) {
    if (count > best) {
      best = count;
      majority = value;
    }
  }
  const auto hits = std::count(evaluated.begin(), evaluated.end(), majority);
  return static_cast<double>(hits) / static_cast<double>(evaluated.size());
}

double PredictionAccuracy(const std::vector<AiaPrediction>& predictions,
                          std::span<const int> truth) {
  if (predictions.empty() || predictions.size() != truth.size()) return 0.0;
  int hits = 0;
  for (size_t j = 0; j < truth.size(); ++j) {
    hits += predictions[j].attribute == truth[j] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace clpriv
