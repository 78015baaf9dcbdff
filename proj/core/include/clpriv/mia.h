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

// Membership-inference attacks: shadow models, the top-k posterior attack
// network, metric and label-only threshold attacks, calibrated scores and
// the difficulty-calibrated attack.

#ifndef CLPRIV_MIA_H_
#define CLPRIV_MIA_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "clpriv/curriculum.h"
#include "clpriv/data.h"
#include "clpriv/nn.h"

namespace clpriv {

// Output index of the "member" class in every attack network. The other
// output is "non-member".
inline constexpr int kMemberClass = 0;
inline constexpr int kTopK = 3;

enum class AttackOptimizer { kAdam, kSgd };

std::string AttackOptimizerName(AttackOptimizer optimizer);
absl::StatusOr<AttackOptimizer> ParseAttackOptimizer(const std::string& name);

// Attack networks are small and trained separately from targets.
struct AttackTrainConfig {
  int epochs = 100;
  int batch_size = 128;
  double learning_rate = 0.01;
  AttackOptimizer optimizer = AttackOptimizer::kAdam;
  uint64_t seed = 0;
  absl::Status Validate() const;
};

AttackTrainConfig DefaultAttackTrainConfig(uint64_t seed);

// Hooks for FitAttackNetwork. `before_epoch` runs ahead of every epoch and
// once more after the last one; `offsets` fills per-sample logit offsets for
// a batch (output_dim x batch).
struct AttackFitHooks {
  std::function<absl::Status(int epoch, const Network& net)> before_epoch;
  std::function<absl::Status(std::span<const int> batch, Matrix& offsets)> offsets;
};

// Mini-batch training of an attack network on `features` (dim x N) with
// cross-entropy. Adam uses beta1 0.9, beta2 0.999, eps 1e-8.
absl::StatusOr<Network> FitAttackNetwork(Network net,
                                         const Eigen::Ref<const Matrix>& features,
                                         std::span<const int> labels,
                                         const AttackTrainConfig& config,
                                         const AttackFitHooks& hooks = {});

// The k largest entries of `posterior`, sorted descending.
absl::StatusOr<Vector> TopKFeatures(const Eigen::Ref<const Vector>& posterior,
                                    int k = kTopK);
// Column-wise TopKFeatures over a class_count x N posterior matrix.
absl::StatusOr<Matrix> TopKFeaturesBatch(const Eigen::Ref<const Matrix>& posteriors,
                                         int k = kTopK);

struct ShadowModel {
  Network network;
  std::vector<int> members;      // indices into the shadow split
  std::vector<int> non_members;  // indices into the shadow split
};

// Each shadow draws its own random half of `shadow_split` as members and is
// trained normally on it; the rest of the split are its non-members.
absl::StatusOr<std::vector<ShadowModel>> TrainShadows(
    const Dataset& shadow_split, int count, const std::vector<int>& layer_dims,
    const TrainConfig& config);

enum class AttackFeatureKind { kTopKPosteriors, kCalibratedScore };

struct AttackModel {
  Network network;
  AttackFeatureKind feature_kind = AttackFeatureKind::kTopKPosteriors;
};

struct MembershipVerdict {
  bool is_member = false;
  double confidence = 0.0;  // posterior of the predicted class, in [0, 1]
  double raw_score = 0.0;   // larger means more member-like
};

// Fits an attack network on rows of `features` (feature_dim x N); membership
// is the label, true meaning member.
absl::StatusOr<AttackModel> TrainAttackOnFeatures(
    const Eigen::Ref<const Matrix>& features, const std::vector<bool>& membership,
    AttackFeatureKind kind, const AttackTrainConfig& config);

// Top-3 attack: each shadow contributes an equal number of member and
// non-member posteriors computed on `shadow_split`.
absl::StatusOr<AttackModel> NnAttackTrain(std::span<const ShadowModel> shadows,
                                          const Dataset& shadow_split,
                                          const AttackTrainConfig& config);

// Member iff the attack's member posterior is strictly above 0.5, so an exact
// tie is a non-member. raw_score is the member posterior.
MembershipVerdict VerdictFromAttackPosterior(const Eigen::Ref<const Vector>& posterior);

// Attack applied to target posteriors (class_count x N) directly, which lets
// defended posteriors be scored.
absl::StatusOr<std::vector<MembershipVerdict>> NnAttackInferPosteriors(
    const AttackModel& attack, const Eigen::Ref<const Matrix>& posteriors);
absl::StatusOr<std::vector<MembershipVerdict>> NnAttackInfer(
    const AttackModel& attack, const Network& target,
    const Eigen::Ref<const Matrix>& xs);

// ---------------------------------------------------------------------------
// Threshold attacks.

struct ThresholdChoice {
  double threshold = 0.0;
  double accuracy = 0.0;
};

// Picks t maximizing the accuracy of "member iff key >= t" over the
// candidates {every distinct key, +infinity}. Ties go to the smallest t.
absl::StatusOr<ThresholdChoice> SelectThreshold(std::span<const double> keys,
                                                const std::vector<bool>& membership);

enum class MetricMode { kCorr, kConf, kEnt, kMent };

std::string MetricModeName(MetricMode mode);
absl::StatusOr<MetricMode> ParseMetricMode(const std::string& name);

// conf = p_y, ent = -sum p log p, ment = the modified entropy. Probabilities
// are clamped to [1e-12, 1] inside logarithms. corr returns 1 or 0.
absl::StatusOr<double> MetricValue(MetricMode mode,
                                   const Eigen::Ref<const Vector>& posterior,
                                   int label);

struct MetricAttack {
  MetricMode mode = MetricMode::kCorr;
  // Thresholds live in key space, key = conf, -ent or -ment, so every mode
  // decides "member iff key >= threshold".
  std::vector<double> class_thresholds;
  std::vector<bool> class_fitted;  // false: class had no shadow samples
  double global_threshold = 0.0;

  // Threshold used for class y, in the mode's natural units (conf >= t,
  // ent <= t, ment <= t).
  double NaturalThreshold(int y) const;
};

absl::StatusOr<MetricAttack> FitMetricAttack(
    MetricMode mode, const Eigen::Ref<const Matrix>& shadow_posteriors,
    std::span<const int> shadow_labels, const std::vector<bool>& membership,
    int class_count);

// confidence = p_y; raw_score = the key (corr: 1 for a correct prediction).
absl::StatusOr<std::vector<MembershipVerdict>> MetricAttackInfer(
    const MetricAttack& attack, const Eigen::Ref<const Matrix>& posteriors,
    std::span<const int> labels);

struct LabelOnlyConfig {
  std::vector<double> noise_grid = {0.02, 0.05, 0.1};
  int trials_per_level = 10;
  uint64_t seed = 0;
  absl::Status Validate() const;
};

// Fraction of perturbed copies whose predicted label matches the prediction
// on the clean input, averaged over the noise grid. Binary features get
// independent bit flips with the level as probability; others get Gaussian
// noise with the level as standard deviation. Copies of query j use an rng
// seeded from `sample_ids[j]`.
absl::StatusOr<std::vector<double>> RobustnessScores(
    const Network& net, const Eigen::Ref<const Matrix>& xs,
    std::span<const int> sample_ids, const LabelOnlyConfig& config);

struct LabelOnlyAttack {
  LabelOnlyConfig config;
  double threshold = 0.0;  // member iff robustness >= threshold
};

absl::StatusOr<LabelOnlyAttack> FitLabelOnlyAttack(
    const Network& shadow, const Eigen::Ref<const Matrix>& shadow_xs,
    std::span<const int> shadow_ids, const std::vector<bool>& membership,
    const LabelOnlyConfig& config);

absl::StatusOr<std::vector<MembershipVerdict>> LabelOnlyAttackInfer(
    const LabelOnlyAttack& attack, const Network& target,
    const Eigen::Ref<const Matrix>& xs, std::span<const int> sample_ids);

// ---------------------------------------------------------------------------
// Calibrated scores and the difficulty-calibrated attack.

// Membership score s = -loss.
double CalibratedScoreFromLosses(double target_loss,
                                 std::span<const double> reference_losses);
absl::StatusOr<Vector> CalibratedScores(const Network& target,
                                        std::span<const Network> references,
                                        const Eigen::Ref<const Matrix>& xs,
                                        std::span<const int> labels);
// Mean reference loss per sample; the attacker's difficulty estimate.
absl::StatusOr<Vector> MeanReferenceLoss(std::span<const Network> references,
                                         const Eigen::Ref<const Matrix>& xs,
                                         std::span<const int> labels);

inline constexpr double kThetaFloor = 0.0001;
inline constexpr double kThetaMax = 0.1;
inline constexpr double kThetaStep = 0.001;

// g(rank) = (|D| - rank)(theta0 - floor) / (|D| - 1) + floor. Rank 1 is the
// easiest sample. A single-sample D maps to theta0.
absl::StatusOr<double> DifficultyThreshold(int rank, int d_size, double theta0);

// The 101 grid points 0, 0.001, ..., 0.1.
std::vector<double> Theta0Grid();

struct DiffCaliState {
  double theta0 = kThetaFloor;
  double floor = kThetaFloor;
  Curriculum curriculum;               // attacker-side ranking of D
  std::vector<double> sorted_scores;   // D's difficulty scores, ascending

  int d_size() const { return curriculum.size(); }
  // Rank of an unseen sample with difficulty `score` against D:
  // 1 + #{d in D : score(d) < score}, capped at |D|.
  int EstimateRank(double score) const;
};

// Accuracy of "member iff p_member >= g(rank)" with the given theta0.
absl::StatusOr<double> ThresholdedAccuracy(const Network& attack,
                                           const Eigen::Ref<const Vector>& s_cal,
                                           std::span<const int> ranks, int d_size,
                                           const std::vector<bool>& membership,
                                           double theta0);

// Scans Theta0Grid() and keeps the first maximizer. Candidate 0 is evaluated
// as the floor so every threshold stays in [floor, theta0].
absl::StatusOr<double> SearchTheta0(const Network& attack,
                                    const Eigen::Ref<const Vector>& s_cal,
                                    std::span<const int> ranks, int d_size,
                                    const std::vector<bool>& membership);

struct DiffCaliModel {
  AttackModel attack;
  DiffCaliState state;
};

// Per epoch: search theta0 with the current attack network, then train one
// epoch on (s_cal, membership) with each sample's decision boundary moved to
// g(rank). A last search follows the final epoch.
absl::StatusOr<DiffCaliModel> DiffCaliTrain(const Eigen::Ref<const Vector>& s_cal,
                                            const std::vector<bool>& membership,
                                            const Curriculum& curriculum,
                                            const AttackTrainConfig& config);

// Member iff p_member >= g(rank); raw_score = p_member - g(rank).
absl::StatusOr<std::vector<MembershipVerdict>> DiffCaliInfer(
    const DiffCaliModel& model, const Eigen::Ref<const Vector>& s_cal,
    std::span<const int> ranks);

}  // namespace clpriv

#endif  // CLPRIV_MIA_H_
