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

#include "clpriv/defense.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "absl/strings/str_cat.h"
#include "clpriv/status_macros.h"

namespace clpriv {

std::string DefenseKindName(DefenseKind kind) {
  switch (kind) {
    case DefenseKind::kNone:
      return "none";
    case DefenseKind::kDpSgd:
      return "dp_sgd";
    case DefenseKind::kDpSgdStar:
      return "dp_sgd_star";
    case DefenseKind::kMemGuard:
      return "memguard";
  }
  return "unknown";
}

absl::StatusOr<DefenseKind> ParseDefenseKind(const std::string& name) {
  for (const DefenseKind kind : {DefenseKind::kNone, DefenseKind::kDpSgd,
                                 DefenseKind::kDpSgdStar, DefenseKind::kMemGuard}) {
    if (DefenseKindName(kind) == name) return kind;
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown defense '", name, "'"));
}

absl::Status DefenseConfig::Validate() const {
  const bool needs_dp = kind == DefenseKind::kDpSgd || kind == DefenseKind::kDpSgdStar;
  const bool needs_budget = kind == DefenseKind::kMemGuard;
  if (needs_dp != dp.has_value()) {
    return absl::FailedPreconditionError(
        absl::StrCat("defense ", DefenseKindName(kind),
                     needs_dp ? " requires" : " does not take", " dp parameters"));
  }
  if (needs_budget != memguard_budget.has_value()) {
    return absl::FailedPreconditionError(
        absl::StrCat("defense ", DefenseKindName(kind),
                     needs_budget ? " requires" : " does not take", " a memguard budget"));
  }
  if (dp.has_value() && (!(dp->clip > 0.0) || !(dp->noise >= 0.0))) {
    return absl::FailedPreconditionError("dp clip must be > 0 and noise >= 0");
  }
  if (memguard_budget.has_value() && !(*memguard_budget >= 0.0)) {
    return absl::FailedPreconditionError("memguard budget must be >= 0");
  }
  return absl::OkStatus();
}

TrainConfig WithDp(TrainConfig config, const DpParams& dp) {
  config.optimizer = Optimizer::kDpSgd;
  config.dp_clip = dp.clip;
  config.dp_noise = dp.noise;
  return config;
}

absl::StatusOr<Curriculum> DpStarCurriculum(const Dataset& split,
                                            const std::vector<int>& layer_dims,
                                            const TrainConfig& measurer_config,
                                            const DpParams& dp) {
  const BootstrapMeasurer measurer{layer_dims, WithDp(measurer_config, dp)};
  ASSIGN_OR_RETURN(DifficultyScores scores, ScoreDifficulty(split, measurer));
  return BuildCurriculum(std::move(scores.scores), CurriculumMode::kBootstrap,
                         measurer_config.seed);
}

namespace {

struct Candidate {
  Vector q;
  double p = 0.0;
};

bool ArgmaxHolds(const Vector& q, Eigen::Index top) {
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (i != top && q(i) >= q(top)) return false;
  }
  return true;
}

// Indices of the three largest entries and the smallest one, deduplicated.
std::vector<Eigen::Index> PivotIndices(const Vector& q) {
  std::vector<Eigen::Index> idx(q.size());
  for (Eigen::Index i = 0; i < q.size(); ++i) idx[i] = i;
  const size_t k = std::min<size_t>(3, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(),
                    [&q](Eigen::Index a, Eigen::Index b) {
                      return q(a) > q(b) || (q(a) == q(b) && a < b);
                    });
  std::vector<Eigen::Index> pivots(idx.begin(), idx.begin() + k);
  Eigen::Index low = 0;
  q.minCoeff(&low);
  if (std::find(pivots.begin(), pivots.end(), low) == pivots.end()) {
    pivots.push_back(low);
  }
  return pivots;
}

}  // namespace

absl::StatusOr<Vector> MemGuardPerturb(const Eigen::Ref<const Vector>& posterior,
                                       const AttackModel& defender, double budget,
                                       const MemGuardOptions& options) {
  if (!(budget >= 0.0)) return absl::InvalidArgumentError("budget must be >= 0");
  if (defender.feature_kind != AttackFeatureKind::kTopKPosteriors) {
    return absl::InvalidArgumentError("defender attack must take posteriors");
  }
  const int k = defender.network.input_dim();
  if (posterior.size() < k) {
    return absl::InvalidArgumentError("posterior shorter than the attack's top-k");
  }
  const Vector original = posterior;
  Eigen::Index top = 0;
  original.maxCoeff(&top);
  if (!ArgmaxHolds(original, top)) return original;  // tied argmax: nothing to keep

  auto member_posterior = [&](const Matrix& qs) -> absl::StatusOr<Vector> {
    ASSIGN_OR_RETURN(const Matrix features, TopKFeaturesBatch(qs, k));
    ASSIGN_OR_RETURN(const Matrix out, ForwardBatch(defender.network, features));
    return Vector(out.row(kMemberClass).transpose());
  };
  ASSIGN_OR_RETURN(const Vector p0, member_posterior(original));
  const double start_distance = std::abs(p0(0) - 0.5);
  Vector best = original;
  double best_p = p0(0);
  if (budget == 0.0) return best;

  std::vector<Candidate> candidates;
  Matrix batch;
  for (int round = 0; round < options.max_rounds; ++round) {
    const bool crossed = best_p <= 0.5;
    if (crossed && 0.5 - best_p <= options.tolerance) break;
    const double used = (best - original).lpNorm<1>();
    const std::vector<Eigen::Index> pivots = PivotIndices(best);
    candidates.clear();
    for (const Eigen::Index from : pivots) {
      for (const Eigen::Index to : pivots) {
        if (from == to) continue;
        double delta = std::min(best(from), (budget - used) / 2.0);
        for (int level = 0; level < options.step_levels && delta > 0.0;
             ++level, delta /= 2.0) {
          Vector q = best;
          q(from) -= delta;
          q(to) += delta;
          if (q(from) < 0.0 || !ArgmaxHolds(q, top)) continue;
          if ((q - original).lpNorm<1>() > budget) continue;
          candidates.push_back({std::move(q), 0.0});
        }
      }
    }
    if (candidates.empty()) break;
    batch.resize(original.size(), static_cast<Eigen::Index>(candidates.size()));
    for (size_t c = 0; c < candidates.size(); ++c) batch.col(c) = candidates[c].q;
    ASSIGN_OR_RETURN(const Vector ps, member_posterior(batch));

    // Rank: being on the non-member side first, then distance to 0.5. A move
    // must not exceed the starting distance, and once across the boundary
    // the search stays there.
    int pick = -1;
    double pick_distance = 0.0;
    bool pick_side = false;
    for (size_t c = 0; c < candidates.size(); ++c) {
      const double p = ps(static_cast<Eigen::Index>(c));
      const double distance = std::abs(p - 0.5);
      const bool side = p <= 0.5;
      if (distance > start_distance) continue;
      if (crossed && !side) continue;
      if (crossed && distance >= std::abs(best_p - 0.5)) continue;
      if (!crossed && !side && distance >= std::abs(best_p - 0.5)) continue;
      if (pick < 0 || (side && !pick_side) ||
          (side == pick_side && distance < pick_distance)) {
        pick = static_cast<int>(c);
        pick_distance = distance;
        pick_side = side;
      }
    }
    if (pick < 0) break;
    best = std::move(candidates[pick].q);
    best_p = ps(pick);
  }
  return best;
}

absl::StatusOr<Matrix> MemGuardPerturbBatch(const Eigen::Ref<const Matrix>& posteriors,
                                            const AttackModel& defender,
                                            double budget,
                                            const MemGuardOptions& options) {
  Matrix out(posteriors.rows(), posteriors.cols());
  for (Eigen::Index j = 0; j < posteriors.cols(); ++j) {
    ASSIGN_OR_RETURN(out.col(j),
                     MemGuardPerturb(posteriors.col(j), defender, budget, options));
  }
  return out;
}

}  // namespace clpriv
