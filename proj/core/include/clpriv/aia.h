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

// Attribute inference from a target model's penultimate-layer embeddings.

#ifndef CLPRIV_AIA_H_
#define CLPRIV_AIA_H_

#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "clpriv/data.h"
#include "clpriv/nn.h"

namespace clpriv {

inline constexpr int kAiaHiddenWidth = 128;

struct AiaAttackModel {
  // embedding_dim -> 128 -> 128 -> sensitive_count
  Network network;
};

struct AiaPrediction {
  int attribute = 0;
  Vector posterior;
};

// `base` with the attack's 100 epochs at learning rate 0.01.
TrainConfig DefaultAiaTrainConfig(TrainConfig base, uint64_t seed);

absl::StatusOr<AiaAttackModel> AiaTrainOnEmbeddings(
    const Eigen::Ref<const Matrix>& embeddings, std::span<const int> sensitive,
    int sensitive_count, const TrainConfig& config);

// Trains on (embed(target, x), s) pairs of the auxiliary split.
absl::StatusOr<AiaAttackModel> AiaTrain(const Network& target,
                                        const Dataset& auxiliary,
                                        const TrainConfig& config);

absl::StatusOr<std::vector<AiaPrediction>> AiaInferEmbeddings(
    const AiaAttackModel& attack, const Eigen::Ref<const Matrix>& embeddings);
absl::StatusOr<std::vector<AiaPrediction>> AiaInfer(
    const AiaAttackModel& attack, const Network& target,
    const Eigen::Ref<const Matrix>& xs);

// Accuracy of always guessing the most frequent value of `reference` (lowest
// value on ties) on `evaluated`.
absl::StatusOr<double> MajorityBaselineAccuracy(std::span<const int> reference,
                                                std::span<const int> evaluated);

double PredictionAccuracy(const std::vector<AiaPrediction>& predictions,
                          std::span<const int> truth);

}  // namespace clpriv

#endif  // CLPRIV_AIA_H_
