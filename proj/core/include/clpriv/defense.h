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

// Training-time and inference-time defenses: DP-SGD targets, a curriculum
// whose difficulty measurer is itself trained with DP-SGD, and a posterior
// perturbation that confuses a known attack model.

#ifndef CLPRIV_DEFENSE_H_
#define CLPRIV_DEFENSE_H_

#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "clpriv/curriculum.h"
#include "clpriv/data.h"
#include "clpriv/mia.h"
#include "clpriv/nn.h"

namespace clpriv {

enum class DefenseKind { kNone, kDpSgd, kDpSgdStar, kMemGuard };

std::string DefenseKindName(DefenseKind kind);
absl::StatusOr<DefenseKind> ParseDefenseKind(const std::string& name);

struct DpParams {
  double clip = 1.0;
  double noise = 1.0;
};

struct DefenseConfig {
  DefenseKind kind = DefenseKind::kNone;
  std::optional<DpParams> dp;               // dp_sgd and dp_sgd_star
  std::optional<double> memguard_budget;    // memguard: max L1 change

  absl::Status Validate() const;
};

// Switches `config` to DP-SGD with the given clipping bound and noise.
TrainConfig WithDp(TrainConfig config, const DpParams& dp);

// Bootstrap curriculum whose measurer is trained with DP-SGD.
absl::StatusOr<Curriculum> DpStarCurriculum(const Dataset& split,
                                            const std::vector<int>& layer_dims,
                                            const TrainConfig& measurer_config,
                                            const DpParams& dp);

struct MemGuardOptions {
  int max_rounds = 40;
  int step_levels = 8;
  // Stop once the member posterior is within this distance below 0.5.
  double tolerance = 1e-4;
};

// Greedy mass transfers between posterior entries, each keeping the vector on
// the simplex and the original argmax strictly on top, with
// |q - posterior|_1 <= budget. The search moves the defender attack's member
// posterior toward 0.5 and prefers to finish on the non-member side of the
// boundary; a move is only taken if the distance to 0.5 stays within the
// starting distance. Returns the input unchanged when nothing helps.
absl::StatusOr<Vector> MemGuardPerturb(const Eigen::Ref<const Vector>& posterior,
                                       const AttackModel& defender, double budget,
                                       const MemGuardOptions& options = {});

// Column-wise MemGuardPerturb.
absl::StatusOr<Matrix> MemGuardPerturbBatch(const Eigen::Ref<const Matrix>& posteriors,
                                            const AttackModel& defender,
                                            double budget,
                                            const MemGuardOptions& options = {});

}  // namespace clpriv

#endif  // CLPRIV_DEFENSE_H_
