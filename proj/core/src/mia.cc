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

#include "clpriv/mia.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <utility>

#include "absl/strings/str_cat.h"
#include "clpriv/random.h"
#include "clpriv/status_macros.h"

namespace clpriv {
namespace {

constexpr int kNonMemberClass = 1 - kMemberClass;

std::vector<int> AttackLabels(const std::vector<bool>& membership) {
  std::vector<int> labels(membership.size());
  for (size_t i = 0; i < membership.size(); ++i) {
    labels[i] = membership[i] ? kMemberClass : kNonMemberClass;
  }
  return labels;
}

absl::Status CheckBothClasses(const std::vector<bool>& membership) {
  const auto members = std::count(membership.begin(), membership.end(), true);
  if (members == 0 || members == static_cast<long>(membership.size())) {
    return absl::FailedPreconditionError(
        "attack training data must contain members and non-members");
  }
  return absl::OkStatus();
}

double SafeLog(double p) { return std::log(std::max(p, kProbabilityFloor)); }

double KeyFromValue(MetricMode mode, double value) {
  return (mode == MetricMode::kEnt || mode == MetricMode::kMent) ? -value
                                                                 : value;
}

bool IsBinary(const Eigen::Ref<const Matrix>& xs) {
  return ((xs.array() == 0.0) || (xs.array() == 1.0)).all();
}

}  // namespace

std::string AttackOptimizerName(AttackOptimizer optimizer) {
  return optimizer == AttackOptimizer::kAdam ? "adam" : "sgd";
}

absl::StatusOr<AttackOptimizer> ParseAttackOptimizer(const std::string& name) {
  if (name == "adam") return AttackOptimizer::kAdam;
  if (name == "sgd") return AttackOptimizer::kSgd;
  return absl::InvalidArgumentError(absl::StrCat("unknown attack optimizer '", name, "'"));
}

absl::Status AttackTrainConfig::Validate() const {
  if (epochs < 0) return absl::FailedPreconditionError("attack epochs must be >= 0");
  if (batch_size < 1) return absl::FailedPreconditionError("attack batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    return absl::FailedPreconditionError("attack learning_rate must be positive");
  }
  return absl::OkStatus();
}

AttackTrainConfig DefaultAttackTrainConfig(uint64_t seed) {
  AttackTrainConfig config;
  config.seed = seed;
  return config;
}

namespace {

class AdamState {
 public:
  explicit AdamState(const Network& net) {
    for (const DenseLayer& layer : net.layers()) {
      m_.push_back({Matrix::Zero(layer.weights.rows(), layer.weights.cols()),
                    Vector::Zero(layer.biases.size())});
    }
    v_ = m_;
  }

  void Apply(Network& net, const Gradients& grads, double lr) {
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    auto& layers = net.mutable_layers();
    for (size_t l = 0; l < layers.size(); ++l) {
      Update(layers[l].weights, grads[l].weights, m_[l].weights, v_[l].weights,
             lr, c1, c2, kBeta1, kBeta2, kEps);
      Update(layers[l].biases, grads[l].biases, m_[l].biases, v_[l].biases, lr,
             c1, c2, kBeta1, kBeta2, kEps);
    }
  }

 private:
  template <typename T>
  static void Update(T& param, const T& grad, T& m, T& v, double lr, double c1,
                     double c2, double b1, double b2, double eps) {
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
    param.array() -=
        lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }

  std::vector<DenseLayer> m_;
  std::vector<DenseLayer> v_;
  int t_ = 0;
};

}  // namespace

absl::StatusOr<Network> FitAttackNetwork(Network net,
                                         const Eigen::Ref<const Matrix>& features,
                                         std::span<const int> labels,
                                         const AttackTrainConfig& config,
                                         const AttackFitHooks& hooks) {
  RETURN_IF_ERROR(config.Validate());
  const int n = static_cast<int>(labels.size());
  if (n == 0 || features.cols() != n) {
    return absl::InvalidArgumentError("attack features/labels mismatch or empty");
  }
  Rng batch_rng(DeriveSeed(config.seed, kStreamBatches));
  AdamState adam(net);
  Matrix batch_x;
  Matrix offsets;
  std::vector<int> batch_labels;
  for (int epoch = 0; epoch <= config.epochs; ++epoch) {
    if (hooks.before_epoch) RETURN_IF_ERROR(hooks.before_epoch(epoch, net));
    if (epoch == config.epochs) break;
    const std::vector<int> perm = RandomPermutation(n, batch_rng);
    for (int start = 0; start < n; start += config.batch_size) {
      const std::span<const int> batch =
          std::span(perm).subspan(start, std::min(config.batch_size, n - start));
      GatherColumns(features, batch, batch_x);
      batch_labels.resize(batch.size());
      for (size_t b = 0; b < batch.size(); ++b) batch_labels[b] = labels[batch[b]];
      const Matrix* offset_ptr = nullptr;
      if (hooks.offsets) {
        offsets = Matrix::Zero(net.output_dim(), static_cast<Eigen::Index>(batch.size()));
        RETURN_IF_ERROR(hooks.offsets(batch, offsets));
        offset_ptr = &offsets;
      }
      ASSIGN_OR_RETURN(const LossAndGradient step,
                       LossAndGrad(net, batch_x, batch_labels, offset_ptr));
      if (config.optimizer == AttackOptimizer::kAdam) {
        adam.Apply(net, step.gradients, config.learning_rate);
      } else {
        RETURN_IF_ERROR(ApplySgdUpdate(net, step.gradients, config.learning_rate));
      }
    }
  }
  if (!net.AllFinite()) return absl::InternalError("attack training diverged");
  return net;
}

absl::StatusOr<Vector> TopKFeatures(const Eigen::Ref<const Vector>& posterior,
                                    int k) {
  if (k < 1 || k > posterior.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("k=", k, " invalid for ", posterior.size(), " classes"));
  }
  std::vector<double> values(posterior.data(),
                             posterior.data() + posterior.size());
  std::partial_sort(values.begin(), values.begin() + k, values.end(),
                    std::greater<double>());
  return Eigen::Map<const Vector>(values.data(), k);
}

absl::StatusOr<Matrix> TopKFeaturesBatch(
    const Eigen::Ref<const Matrix>& posteriors, int k) {
  Matrix out(k, posteriors.cols());
  for (Eigen::Index j = 0; j < posteriors.cols(); ++j) {
    ASSIGN_OR_RETURN(out.col(j), TopKFeatures(posteriors.col(j), k));
  }
  return out;
}

absl::StatusOr<std::vector<ShadowModel>> TrainShadows(
    const Dataset& shadow_split, int count, const std::vector<int>& layer_dims,
    const TrainConfig& config) {
  if (count < 1) return absl::FailedPreconditionError("need at least one shadow");
  if (shadow_split.size() < 2) {
    return absl::FailedPreconditionError(
        "shadow split too small to carve member and non-member halves");
  }
  std::vector<ShadowModel> shadows;
  shadows.reserve(count);
  const uint64_t base = DeriveSeed(config.seed, kStreamShadow);
  for (int s = 0; s < count; ++s) {
    const uint64_t shadow_seed = DeriveSeed(base, static_cast<uint64_t>(s));
    Rng rng(shadow_seed);
    std::vector<int> perm = RandomPermutation(shadow_split.size(), rng);
    const int half = shadow_split.size() / 2;
    std::vector<int> members(perm.begin(), perm.begin() + half);
    std::vector<int> non_members(perm.begin() + half, perm.end());
    std::sort(members.begin(), members.end());
    std::sort(non_members.begin(), non_members.end());

    TrainConfig shadow_config = config;
    shadow_config.seed = shadow_seed;
    ASSIGN_OR_RETURN(Network net, Network::Create(layer_dims, shadow_seed));
    const Dataset train = shadow_split.Subset(members);
    ASSIGN_OR_RETURN(TrainResult trained,
                     Train(std::move(net), train.features, train.labels,
                           shadow_config));
    shadows.push_back(ShadowModel{std::move(trained.network), std::move(members),
                                  std::move(non_members)});
  }
  return shadows;
}

absl::StatusOr<AttackModel> TrainAttackOnFeatures(
    const Eigen::Ref<const Matrix>& features, const std::vector<bool>& membership,
    AttackFeatureKind kind, const AttackTrainConfig& config) {
  if (features.cols() != static_cast<Eigen::Index>(membership.size())) {
    return absl::InvalidArgumentError("feature/membership count mismatch");
  }
  RETURN_IF_ERROR(CheckBothClasses(membership));
  ASSIGN_OR_RETURN(Network net,
                   Network::Create({static_cast<int>(features.rows()), 64, 32, 2},
                                   DeriveSeed(config.seed, kStreamAttack)));
  const std::vector<int> labels = AttackLabels(membership);
  ASSIGN_OR_RETURN(Network trained,
                   FitAttackNetwork(std::move(net), features, labels, config));
  return AttackModel{std::move(trained), kind};
}

absl::StatusOr<AttackModel> NnAttackTrain(std::span<const ShadowModel> shadows,
                                          const Dataset& shadow_split,
                                          const AttackTrainConfig& config) {
  if (shadows.empty()) return absl::FailedPreconditionError("no shadow models");
  std::vector<Matrix> blocks;
  std::vector<bool> membership;
  Eigen::Index total = 0;
  for (const ShadowModel& shadow : shadows) {
    const size_t per_side =
        std::min(shadow.members.size(), shadow.non_members.size());
    std::vector<int> picked(shadow.members.begin(),
                            shadow.members.begin() + per_side);
    picked.insert(picked.end(), shadow.non_members.begin(),
                  shadow.non_members.begin() + per_side);
    Matrix xs;
    GatherColumns(shadow_split.features, picked, xs);
    ASSIGN_OR_RETURN(const Matrix posteriors, ForwardBatch(shadow.network, xs));
    ASSIGN_OR_RETURN(Matrix top, TopKFeaturesBatch(posteriors, kTopK));
    total += top.cols();
    blocks.push_back(std::move(top));
    membership.insert(membership.end(), per_side, true);
    membership.insert(membership.end(), per_side, false);
  }
  Matrix features(kTopK, total);
  Eigen::Index at = 0;
  for (const Matrix& block : blocks) {
    features.middleCols(at, block.cols()) = block;
    at += block.cols();
  }
  return TrainAttackOnFeatures(features, membership,
                               AttackFeatureKind::kTopKPosteriors, config);
}

MembershipVerdict VerdictFromAttackPosterior(
    const Eigen::Ref<const Vector>& posterior) {
  const double p = posterior(kMemberClass);
  MembershipVerdict verdict;
  verdict.is_member = p > 0.5;
  verdict.confidence = verdict.is_member ? p : 1.0 - p;
  verdict.raw_score = p;
  return verdict;
}

absl::StatusOr<std::vector<MembershipVerdict>> NnAttackInferPosteriors(
    const AttackModel& attack, const Eigen::Ref<const Matrix>& posteriors) {
  if (attack.feature_kind != AttackFeatureKind::kTopKPosteriors) {
    return absl::InvalidArgumentError("attack model does not take posteriors");
  }
  ASSIGN_OR_RETURN(const Matrix top,
                   TopKFeaturesBatch(posteriors, attack.network.input_dim()));
  ASSIGN_OR_RETURN(const Matrix out, ForwardBatch(attack.network, top));
  std::vector<MembershipVerdict> verdicts(out.cols());
  for (Eigen::Index j = 0; j < out.cols(); ++j) {
    verdicts[j] = VerdictFromAttackPosterior(out.col(j));
  }
  return verdicts;
}

absl::StatusOr<std::vector<MembershipVerdict>> NnAttackInfer(
    const AttackModel& attack, const Network& target,
    const Eigen::Ref<const Matrix>& xs) {
  ASSIGN_OR_RETURN(const Matrix posteriors, ForwardBatch(target, xs));
  return NnAttackInferPosteriors(attack, posteriors);
}

absl::StatusOr<ThresholdChoice> SelectThreshold(
    std::span<const double> keys, const std::vector<bool>& membership) {
  const int n = static_cast<int>(keys.size());
  if (n == 0) return absl::InvalidArgumentError("no samples for threshold selection");
  if (membership.size() != keys.size()) {
    return absl::InvalidArgumentError("key/membership count mismatch");
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&keys](int a, int b) { return keys[a] > keys[b]; });
  int members = 0;
  for (const bool m : membership) members += m ? 1 : 0;
  // Start at +infinity: everything is a non-member.
  int correct = n - members;
  int best_correct = correct;
  double best_threshold = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n;) {
    const double value = keys[order[i]];
    while (i < n && keys[order[i]] == value) {
      correct += membership[order[i]] ? 1 : -1;
      ++i;
    }
    if (correct >= best_correct) {
      best_correct = correct;
      best_threshold = value;
    }
  }
  return ThresholdChoice{best_threshold, static_cast<double>(best_correct) / n};
}

std::string MetricModeName(MetricMode mode) {
  switch (mode) {
    case MetricMode::kCorr:
      return "corr";
    case MetricMode::kConf:
      return "conf";
    case MetricMode::kEnt:
      return "ent";
    case MetricMode::kMent:
      return "ment";
  }
  return "unknown";
}

absl::StatusOr<MetricMode> ParseMetricMode(const std::string& name) {
  for (const MetricMode mode : {MetricMode::kCorr, MetricMode::kConf,
                                MetricMode::kEnt, MetricMode::kMent}) {
    if (MetricModeName(mode) == name) return mode;
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown metric attack '", name, "'"));
}

absl::StatusOr<double> MetricValue(MetricMode mode,
                                   const Eigen::Ref<const Vector>& posterior,
                                   int label) {
  if (label < 0 || label >= posterior.size()) {
    return absl::InvalidArgumentError(absl::StrCat("label ", label, " out of range"));
  }
  switch (mode) {
    case MetricMode::kCorr: {
      Eigen::Index arg = 0;
      posterior.maxCoeff(&arg);
      return arg == label ? 1.0 : 0.0;
    }
    case MetricMode::kConf:
      return posterior(label);
    case MetricMode::kEnt: {
      double h = 0.0;
      for (Eigen::Index i = 0; i < posterior.size(); ++i) {
        if (posterior(i) > 0.0) h -= posterior(i) * SafeLog(posterior(i));
      }
      return h;
    }
    case MetricMode::kMent: {
      const double py = posterior(label);
      double m = -(1.0 - py) * SafeLog(py);
      for (Eigen::Index i = 0; i < posterior.size(); ++i) {
        if (i == label || posterior(i) <= 0.0) continue;
        m -= posterior(i) * SafeLog(1.0 - posterior(i));
      }
      return m;
    }
  }
  return absl::InvalidArgumentError("unknown metric mode");
}

double MetricAttack::NaturalThreshold(int y) const {
  const double key = class_fitted[y] ? class_thresholds[y] : global_threshold;
  return (mode == MetricMode::kEnt || mode == MetricMode::kMent) ? -key : key;
}

absl::StatusOr<MetricAttack> FitMetricAttack(
    MetricMode mode, const Eigen::Ref<const Matrix>& shadow_posteriors,
    std::span<const int> shadow_labels, const std::vector<bool>& membership,
    int class_count) {
  MetricAttack attack;
  attack.mode = mode;
  attack.class_thresholds.assign(class_count, 0.0);
  attack.class_fitted.assign(class_count, false);
  if (mode == MetricMode::kCorr) return attack;
  const int n = static_cast<int>(shadow_labels.size());
  if (shadow_posteriors.cols() != n || static_cast<int>(membership.size()) != n) {
    return absl::InvalidArgumentError("shadow posterior/label/membership mismatch");
  }
  std::vector<double> keys(n);
  std::vector<std::vector<int>> by_class(class_count);
  for (int j = 0; j < n; ++j) {
    if (shadow_labels[j] < 0 || shadow_labels[j] >= class_count) {
      return absl::InvalidArgumentError(
          absl::StrCat("shadow label ", shadow_labels[j], " out of range"));
    }
    ASSIGN_OR_RETURN(const double value,
                     MetricValue(mode, shadow_posteriors.col(j), shadow_labels[j]));
    keys[j] = KeyFromValue(mode, value);
    by_class[shadow_labels[j]].push_back(j);
  }
  ASSIGN_OR_RETURN(const ThresholdChoice global, SelectThreshold(keys, membership));
  attack.global_threshold = global.threshold;
  for (int c = 0; c < class_count; ++c) {
    if (by_class[c].empty()) continue;
    std::vector<double> class_keys;
    std::vector<bool> class_membership;
    for (const int j : by_class[c]) {
      class_keys.push_back(keys[j]);
      class_membership.push_back(membership[j]);
    }
    ASSIGN_OR_RETURN(const ThresholdChoice choice,
                     SelectThreshold(class_keys, class_membership));
    attack.class_thresholds[c] = choice.threshold;
    attack.class_fitted[c] = true;
  }
  return attack;
}

absl::StatusOr<std::vector<MembershipVerdict>> MetricAttackInfer(
    const MetricAttack& attack, const Eigen::Ref<const Matrix>& posteriors,
    std::span<const int> labels) {
  if (posteriors.cols() != static_cast<Eigen::Index>(labels.size())) {
    return absl::InvalidArgumentError("posterior/label count mismatch");
  }
  const int class_count = static_cast<int>(attack.class_thresholds.size());
  std::vector<MembershipVerdict> verdicts(labels.size());
  for (size_t j = 0; j < labels.size(); ++j) {
    const int y = labels[j];
    if (y < 0 || y >= class_count || y >= posteriors.rows()) {
      return absl::InvalidArgumentError(absl::StrCat("label ", y, " out of range"));
    }
    ASSIGN_OR_RETURN(const double value, MetricValue(attack.mode, posteriors.col(j), y));
    MembershipVerdict& v = verdicts[j];
    v.confidence = posteriors(y, j);
    if (attack.mode == MetricMode::kCorr) {
      v.is_member = value == 1.0;
      v.raw_score = value;
      continue;
    }
    const double key = KeyFromValue(attack.mode, value);
    const double threshold =
        attack.class_fitted[y] ? attack.class_thresholds[y] : attack.global_threshold;
    v.is_member = key >= threshold;
    v.raw_score = key;
  }
  return verdicts;
}

absl::Status LabelOnlyConfig::Validate() const {
  if (noise_grid.empty()) return absl::FailedPreconditionError("empty noise grid");
  if (trials_per_level < 1) {
    return absl::FailedPreconditionError("trials_per_level must be >= 1");
  }
  for (const double level : noise_grid) {
    if (!(level >= 0.0) || !std::isfinite(level)) {
      return absl::FailedPreconditionError("noise levels must be finite and >= 0");
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<double>> RobustnessScores(
    const Network& net, const Eigen::Ref<const Matrix>& xs,
    std::span<const int> sample_ids, const LabelOnlyConfig& config) {
  RETURN_IF_ERROR(config.Validate());
  if (xs.cols() != static_cast<Eigen::Index>(sample_ids.size())) {
    return absl::InvalidArgumentError("query/sample id count mismatch");
  }
  ASSIGN_OR_RETURN(const std::vector<int> clean, PredictLabels(net, xs));
  const bool binary = IsBinary(xs);
  const uint64_t base = DeriveSeed(config.seed, kStreamLabelOnly);
  const int trials = config.trials_per_level;
  std::vector<double> scores(sample_ids.size(), 0.0);
  Matrix copies(xs.rows(), trials);
  for (size_t j = 0; j < sample_ids.size(); ++j) {
    Rng rng(DeriveSeed(base, static_cast<uint64_t>(sample_ids[j])));
    GaussianSampler gauss;
    double kept_sum = 0.0;
    for (const double level : config.noise_grid) {
      for (int t = 0; t < trials; ++t) {
        copies.col(t) = xs.col(j);
        for (Eigen::Index r = 0; r < xs.rows(); ++r) {
          if (binary) {
            if (UniformUnit(rng) < level) copies(r, t) = 1.0 - copies(r, t);
          } else {
            copies(r, t) += level * gauss.Next(rng);
          }
        }
      }
      ASSIGN_OR_RETURN(const std::vector<int> predicted, PredictLabels(net, copies));
      const auto kept = std::count(predicted.begin(), predicted.end(), clean[j]);
      kept_sum += static_cast<double>(kept) / trials;
    }
    scores[j] = kept_sum / static_cast<double>(config.noise_grid.size());
  }
  return scores;
}

absl::StatusOr<LabelOnlyAttack> FitLabelOnlyAttack(
    const Network& shadow, const Eigen::Ref<const Matrix>& shadow_xs,
    std::span<const int> shadow_ids, const std::vector<bool>& membership,
    const LabelOnlyConfig& config) {
  ASSIGN_OR_RETURN(const std::vector<double> scores,
                   RobustnessScores(shadow, shadow_xs, shadow_ids, config));
  ASSIGN_OR_RETURN(const ThresholdChoice choice, SelectThreshold(scores, membership));
  return LabelOnlyAttack{config, choice.threshold};
}

absl::StatusOr<std::vector<MembershipVerdict>> LabelOnlyAttackInfer(
    const LabelOnlyAttack& attack, const Network& target,
    const Eigen::Ref<const Matrix>& xs, std::span<const int> sample_ids) {
  ASSIGN_OR_RETURN(const std::vector<double> scores,
                   RobustnessScores(target, xs, sample_ids, attack.config));
  std::vector<MembershipVerdict> verdicts(scores.size());
  for (size_t j = 0; j < scores.size(); ++j) {
    verdicts[j].is_member = scores[j] >= attack.threshold;
    verdicts[j].confidence = scores[j];
    verdicts[j].raw_score = scores[j];
  }
  return verdicts;
}

double CalibratedScoreFromLosses(double target_loss,
                                 std::span<const double> reference_losses) {
  double mean = 0.0;
  for (const double loss : reference_losses) mean += loss;
  mean /= static_cast<double>(reference_losses.size());
  return -target_loss + mean;
}

absl::StatusOr<Vector> MeanReferenceLoss(std::span<const Network> references,
                                         const Eigen::Ref<const Matrix>& xs,
                                         std::span<const int> labels) {
  if (references.empty()) {
    return absl::FailedPreconditionError("need at least one reference model");
  }
  Vector mean = Vector::Zero(xs.cols());
  for (const Network& ref : references) {
    ASSIGN_OR_RETURN(const Vector losses, PerSampleLoss(ref, xs, labels));
    mean += losses;
  }
  mean /= static_cast<double>(references.size());
  return mean;
}

absl::StatusOr<Vector> CalibratedScores(const Network& target,
                                        std::span<const Network> references,
                                        const Eigen::Ref<const Matrix>& xs,
                                        std::span<const int> labels) {
  ASSIGN_OR_RETURN(const Vector reference_loss, MeanReferenceLoss(references, xs, labels));
  ASSIGN_OR_RETURN(const Vector target_loss, PerSampleLoss(target, xs, labels));
  return Vector(reference_loss - target_loss);
}

absl::StatusOr<double> DifficultyThreshold(int rank, int d_size, double theta0) {
  if (d_size < 1 || rank < 1 || rank > d_size) {
    return absl::InvalidArgumentError(
        absl::StrCat("rank ", rank, " outside 1..", d_size));
  }
  if (!(theta0 >= kThetaFloor && theta0 <= kThetaMax)) {
    return absl::InvalidArgumentError(
        absl::StrCat("theta0 ", theta0, " outside [", kThetaFloor, ", ", kThetaMax, "]"));
  }
  if (d_size == 1) return theta0;
  return static_cast<double>(d_size - rank) * (theta0 - kThetaFloor) /
             static_cast<double>(d_size - 1) +
         kThetaFloor;
}

std::vector<double> Theta0Grid() {
  const int steps = static_cast<int>(std::lround(kThetaMax / kThetaStep));
  std::vector<double> grid(steps + 1);
  for (int i = 0; i <= steps; ++i) grid[i] = i * kThetaStep;
  return grid;
}

int DiffCaliState::EstimateRank(double score) const {
  const auto below = std::lower_bound(sorted_scores.begin(), sorted_scores.end(), score) -
                     sorted_scores.begin();
  return std::min(static_cast<int>(below) + 1, d_size());
}

namespace {

absl::StatusOr<Vector> MemberPosteriors(const Network& attack,
                                        const Eigen::Ref<const Vector>& s_cal) {
  ASSIGN_OR_RETURN(const Matrix out, ForwardBatch(attack, s_cal.transpose()));
  return Vector(out.row(kMemberClass).transpose());
}

absl::Status CheckRanks(std::span<const int> ranks, int d_size) {
  for (const int r : ranks) {
    if (r < 1 || r > d_size) {
      return absl::InvalidArgumentError(absl::StrCat("rank ", r, " outside 1..", d_size));
    }
  }
  return absl::OkStatus();
}

double EffectiveTheta0(double candidate) { return std::max(candidate, kThetaFloor); }

}  // namespace

namespace {

absl::StatusOr<double> AccuracyFromPosteriors(const Vector& p,
                                              std::span<const int> ranks, int d_size,
                                              const std::vector<bool>& membership,
                                              double theta0) {
  int correct = 0;
  for (size_t j = 0; j < ranks.size(); ++j) {
    ASSIGN_OR_RETURN(const double g, DifficultyThreshold(ranks[j], d_size, theta0));
    correct += ((p(j) >= g) == membership[j]) ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(ranks.size());
}

absl::Status CheckThetaInputs(const Eigen::Ref<const Vector>& s_cal,
                              std::span<const int> ranks, int d_size,
                              const std::vector<bool>& membership) {
  const size_t n = static_cast<size_t>(s_cal.size());
  if (n == 0 || ranks.size() != n || membership.size() != n) {
    return absl::InvalidArgumentError("score/rank/membership mismatch");
  }
  return CheckRanks(ranks, d_size);
}

}  // namespace

absl::StatusOr<double> ThresholdedAccuracy(const Network& attack,
                                           const Eigen::Ref<const Vector>& s_cal,
                                           std::span<const int> ranks, int d_size,
                                           const std::vector<bool>& membership,
                                           double theta0) {
  RETURN_IF_ERROR(CheckThetaInputs(s_cal, ranks, d_size, membership));
  ASSIGN_OR_RETURN(const Vector p, MemberPosteriors(attack, s_cal));
  return AccuracyFromPosteriors(p, ranks, d_size, membership, theta0);
}

absl::StatusOr<double> SearchTheta0(const Network& attack,
                                    const Eigen::Ref<const Vector>& s_cal,
                                    std::span<const int> ranks, int d_size,
                                    const std::vector<bool>& membership) {
  RETURN_IF_ERROR(CheckThetaInputs(s_cal, ranks, d_size, membership));
  ASSIGN_OR_RETURN(const Vector p, MemberPosteriors(attack, s_cal));
  double best_theta = EffectiveTheta0(0.0);
  double best_accuracy = -1.0;
  for (const double candidate : Theta0Grid()) {
    const double theta0 = EffectiveTheta0(candidate);
    ASSIGN_OR_RETURN(const double accuracy,
                     AccuracyFromPosteriors(p, ranks, d_size, membership, theta0));
    if (accuracy > best_accuracy) {
      best_accuracy = accuracy;
      best_theta = theta0;
    }
  }
  return best_theta;
}

absl::StatusOr<DiffCaliModel> DiffCaliTrain(const Eigen::Ref<const Vector>& s_cal,
                                            const std::vector<bool>& membership,
                                            const Curriculum& curriculum,
                                            const AttackTrainConfig& config) {
  RETURN_IF_ERROR(config.Validate());
  const int n = static_cast<int>(s_cal.size());
  if (curriculum.size() != n || static_cast<int>(membership.size()) != n) {
    return absl::FailedPreconditionError(
        absl::StrCat("attacker curriculum ranks ", curriculum.size(),
                     " samples but D has ", n));
  }
  RETURN_IF_ERROR(CheckBothClasses(membership));
  const std::vector<int>& ranks = curriculum.ranks();
  const std::vector<int> labels = AttackLabels(membership);
  ASSIGN_OR_RETURN(Network net,
                   Network::Create({1, 64, 32, 2}, DeriveSeed(config.seed, kStreamAttack)));
  double theta0 = kThetaFloor;
  AttackFitHooks hooks;
  hooks.before_epoch = [&](int, const Network& current) -> absl::Status {
    ASSIGN_OR_RETURN(theta0, SearchTheta0(current, s_cal, ranks, n, membership));
    return absl::OkStatus();
  };
  // Shifting the member logit by -logit(g) moves the 0.5 decision boundary of
  // the loss to p_member = g.
  hooks.offsets = [&](std::span<const int> batch, Matrix& offsets) -> absl::Status {
    for (size_t b = 0; b < batch.size(); ++b) {
      ASSIGN_OR_RETURN(const double g, DifficultyThreshold(ranks[batch[b]], n, theta0));
      offsets(kMemberClass, static_cast<Eigen::Index>(b)) = -std::log(g / (1.0 - g));
    }
    return absl::OkStatus();
  };
  ASSIGN_OR_RETURN(Network trained,
                   FitAttackNetwork(std::move(net), s_cal.transpose(), labels, config, hooks));
  std::vector<double> sorted = curriculum.scores();
  std::sort(sorted.begin(), sorted.end());
  return DiffCaliModel{AttackModel{std::move(trained), AttackFeatureKind::kCalibratedScore},
                       DiffCaliState{theta0, kThetaFloor, curriculum, std::move(sorted)}};
}

absl::StatusOr<std::vector<MembershipVerdict>> DiffCaliInfer(
    const DiffCaliModel& model, const Eigen::Ref<const Vector>& s_cal,
    std::span<const int> ranks) {
  if (static_cast<size_t>(s_cal.size()) != ranks.size()) {
    return absl::InvalidArgumentError("score/rank count mismatch");
  }
  const int d_size = model.state.d_size();
  RETURN_IF_ERROR(CheckRanks(ranks, d_size));
  ASSIGN_OR_RETURN(const Vector p, MemberPosteriors(model.attack.network, s_cal));
  std::vector<MembershipVerdict> verdicts(ranks.size());
  for (size_t j = 0; j < ranks.size(); ++j) {
    ASSIGN_OR_RETURN(const double g,
                     DifficultyThreshold(ranks[j], d_size, model.state.theta0));
    MembershipVerdict& v = verdicts[j];
    v.is_member = p(j) >= g;
    v.confidence = v.is_member ? p(j) : 1.0 - p(j);
    v.raw_score = p(j) - g;
  }
  return verdicts;
}

}  // namespace clpriv
