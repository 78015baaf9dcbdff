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

#include "clpriv/nn.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <utility>

#include "absl/strings/str_cat.h"
#include "clpriv/status_macros.h"

namespace clpriv {
namespace {

const double kMaxLoss = -std::log(kProbabilityFloor);

// Columns evaluated per chunk in inference-only passes.
constexpr int kInferenceChunk = 1024;

absl::Status CheckInput(const Network& net, Eigen::Index rows) {
  if (rows != net.input_dim()) {
    return absl::InvalidArgumentError(
        absl::StrCat("input has ", rows, " features, network expects ",
                     net.input_dim()));
  }
  return absl::OkStatus();
}

absl::Status CheckLabels(const Network& net, Eigen::Index cols,
                         std::span<const int> labels) {
  if (cols == 0) return absl::InvalidArgumentError("empty batch");
  if (static_cast<Eigen::Index>(labels.size()) != cols) {
    return absl::InvalidArgumentError(absl::StrCat(
        "batch has ", cols, " samples but ", labels.size(), " labels"));
  }
  for (const int label : labels) {
    if (label < 0 || label >= net.output_dim()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "label ", label, " outside [0, ", net.output_dim(), ")"));
    }
  }
  return absl::OkStatus();
}

absl::Status CheckShapes(const Network& net, const Gradients& grads) {
  if (grads.size() != net.layers().size()) {
    return absl::InvalidArgumentError("gradient layer count mismatch");
  }
  for (size_t l = 0; l < grads.size(); ++l) {
    const DenseLayer& p = net.layers()[l];
    if (grads[l].weights.rows() != p.weights.rows() ||
        grads[l].weights.cols() != p.weights.cols() ||
        grads[l].biases.size() != p.biases.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("gradient shape mismatch in layer ", l));
    }
  }
  return absl::OkStatus();
}

// Forward pass that keeps every layer's post-activation output.
// activations[0] is the input; activations[L] holds the raw output logits.
void ForwardKeep(const Network& net, const Eigen::Ref<const Matrix>& xs,
                 std::vector<Matrix>& activations) {
  const auto& layers = net.layers();
  activations.resize(layers.size() + 1);
  activations[0] = xs;
  for (size_t l = 0; l < layers.size(); ++l) {
    Matrix z = layers[l].weights * activations[l];
    z.colwise() += layers[l].biases;
    if (l + 1 < layers.size()) z = z.cwiseMax(0.0);
    activations[l + 1] = std::move(z);
  }
}

Matrix HiddenChunk(const Network& net, const Eigen::Ref<const Matrix>& xs,
                   int stop_layer) {
  Matrix a = xs;
  for (int l = 0; l < stop_layer; ++l) {
    Matrix z = net.layers()[l].weights * a;
    z.colwise() += net.layers()[l].biases;
    if (l + 1 < net.num_layers()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

// In-place column softmax; returns per-column log-sum-exp.
Vector SoftmaxColumns(Matrix& logits) {
  Vector lse(logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    auto col = logits.col(c);
    const double m = col.maxCoeff();
    col.array() = (col.array() - m).exp();
    const double sum = col.sum();
    col /= sum;
    lse(c) = m + std::log(sum);
  }
  return lse;
}

// Output-layer error (posterior minus one-hot) before batch averaging, plus
// loss and hit statistics.
struct OutputError {
  Matrix delta;
  double loss_sum = 0.0;
  int correct = 0;
};

OutputError ComputeOutputError(const Matrix& logits_in,
                               std::span<const int> labels,
                               const Matrix* logit_offsets) {
  OutputError out;
  Matrix logits = logits_in;
  if (logit_offsets != nullptr) logits += *logit_offsets;
  const Matrix raw = logits;
  const Vector lse = SoftmaxColumns(logits);
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const int y = labels[c];
    out.loss_sum += std::min(lse(c) - raw(y, c), kMaxLoss);
    Eigen::Index arg = 0;
    logits.col(c).maxCoeff(&arg);
    if (arg == y) ++out.correct;
    logits(y, c) -= 1.0;
  }
  out.delta = std::move(logits);
  return out;
}

// Backpropagates unscaled per-sample errors. deltas[l] is the error at the
// pre-activation of weight layer l.
std::vector<Matrix> BackpropDeltas(const Network& net,
                                   const std::vector<Matrix>& activations,
                                   Matrix output_delta) {
  const int num_layers = net.num_layers();
  std::vector<Matrix> deltas(num_layers);
  deltas[num_layers - 1] = std::move(output_delta);
  for (int l = num_layers - 1; l > 0; --l) {
    Matrix back = net.layers()[l].weights.transpose() * deltas[l];
    back.array() *= (activations[l].array() > 0.0).cast<double>();
    deltas[l - 1] = std::move(back);
  }
  return deltas;
}

// Squared per-sample gradient norm. Each sample's weight gradient is the
// outer product delta * activation^T, whose Frobenius norm factorizes.
Vector PerSampleSquaredNorms(const std::vector<Matrix>& activations,
                             const std::vector<Matrix>& deltas) {
  Vector sq = Vector::Zero(deltas.front().cols());
  for (size_t l = 0; l < deltas.size(); ++l) {
    const Vector d2 = deltas[l].colwise().squaredNorm().transpose();
    const Vector a2 = activations[l].colwise().squaredNorm().transpose();
    sq.array() += d2.array() * (a2.array() + 1.0);
  }
  return sq;
}

}  // namespace

absl::Status ValidateLayerDims(std::span<const int> layer_dims) {
  if (layer_dims.size() < 2) {
    return absl::InvalidArgumentError(
        "a network needs at least an input and an output width");
  }
  for (const int d : layer_dims) {
    if (d <= 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("layer widths must be positive, got ", d));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<Network> Network::Create(std::vector<int> layer_dims,
                                        uint64_t seed) {
  RETURN_IF_ERROR(ValidateLayerDims(layer_dims));
  Rng rng(DeriveSeed(seed, kStreamInit));
  std::vector<DenseLayer> layers(layer_dims.size() - 1);
  for (size_t l = 0; l < layers.size(); ++l) {
    const int fan_in = layer_dims[l];
    const int fan_out = layer_dims[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    layers[l].weights.resize(fan_out, fan_in);
    layers[l].biases.resize(fan_out);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) {
        layers[l].weights(r, c) = (2.0 * UniformUnit(rng) - 1.0) * bound;
      }
    }
    for (int r = 0; r < fan_out; ++r) {
      layers[l].biases(r) = (2.0 * UniformUnit(rng) - 1.0) * bound;
    }
  }
  return Network(std::move(layer_dims), std::move(layers));
}

absl::StatusOr<Network> Network::Zeros(std::vector<int> layer_dims) {
  RETURN_IF_ERROR(ValidateLayerDims(layer_dims));
  std::vector<DenseLayer> layers(layer_dims.size() - 1);
  for (size_t l = 0; l < layers.size(); ++l) {
    layers[l].weights = Matrix::Zero(layer_dims[l + 1], layer_dims[l]);
    layers[l].biases = Vector::Zero(layer_dims[l + 1]);
  }
  return Network(std::move(layer_dims), std::move(layers));
}

absl::StatusOr<Network> Network::FromLayers(std::vector<DenseLayer> layers) {
  if (layers.empty()) return absl::InvalidArgumentError("no layers");
  std::vector<int> dims = {static_cast<int>(layers[0].weights.cols())};
  for (size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& layer = layers[l];
    if (layer.weights.cols() != dims.back() ||
        layer.biases.size() != layer.weights.rows()) {
      return absl::InvalidArgumentError(
          absl::StrCat("layer ", l, " does not chain with its predecessor"));
    }
    if (!layer.weights.allFinite() || !layer.biases.allFinite()) {
      return absl::InvalidArgumentError(
          absl::StrCat("layer ", l, " has non-finite parameters"));
    }
    dims.push_back(static_cast<int>(layer.weights.rows()));
  }
  RETURN_IF_ERROR(ValidateLayerDims(dims));
  return Network(std::move(dims), std::move(layers));
}

int64_t Network::parameter_count() const {
  int64_t count = 0;
  for (const DenseLayer& layer : layers_) {
    count += layer.weights.size() + layer.biases.size();
  }
  return count;
}

bool Network::AllFinite() const {
  return std::all_of(layers_.begin(), layers_.end(), [](const DenseLayer& l) {
    return l.weights.allFinite() && l.biases.allFinite();
  });
}

bool Network::BitwiseEquals(const Network& other) const {
  if (dims_ != other.dims_) return false;
  for (size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& a = layers_[l];
    const DenseLayer& b = other.layers_[l];
    if (std::memcmp(a.weights.data(), b.weights.data(),
                    sizeof(double) * a.weights.size()) != 0 ||
        std::memcmp(a.biases.data(), b.biases.data(),
                    sizeof(double) * a.biases.size()) != 0) {
      return false;
    }
  }
  return true;
}

absl::StatusOr<Vector> Forward(const Network& net,
                               const Eigen::Ref<const Vector>& x) {
  ASSIGN_OR_RETURN(Matrix out, ForwardBatch(net, x));
  return Vector(out.col(0));
}

absl::StatusOr<Matrix> ForwardBatch(const Network& net,
                                    const Eigen::Ref<const Matrix>& xs) {
  RETURN_IF_ERROR(CheckInput(net, xs.rows()));
  Matrix out(net.output_dim(), xs.cols());
  for (Eigen::Index start = 0; start < xs.cols(); start += kInferenceChunk) {
    const Eigen::Index width =
        std::min<Eigen::Index>(kInferenceChunk, xs.cols() - start);
    Matrix logits =
        HiddenChunk(net, xs.middleCols(start, width), net.num_layers());
    SoftmaxColumns(logits);
    out.middleCols(start, width) = logits;
  }
  return out;
}

absl::StatusOr<Vector> Embed(const Network& net,
                             const Eigen::Ref<const Vector>& x) {
  ASSIGN_OR_RETURN(Matrix out, EmbedBatch(net, x));
  return Vector(out.col(0));
}

absl::StatusOr<Matrix> EmbedBatch(const Network& net,
                                  const Eigen::Ref<const Matrix>& xs) {
  if (net.num_layers() < 2) {
    return absl::UnimplementedError(
        "embedding requires at least one hidden layer");
  }
  RETURN_IF_ERROR(CheckInput(net, xs.rows()));
  const int width_out = net.layer_dims()[net.num_layers() - 1];
  Matrix out(width_out, xs.cols());
  for (Eigen::Index start = 0; start < xs.cols(); start += kInferenceChunk) {
    const Eigen::Index width =
        std::min<Eigen::Index>(kInferenceChunk, xs.cols() - start);
    out.middleCols(start, width) =
        HiddenChunk(net, xs.middleCols(start, width), net.num_layers() - 1);
  }
  return out;
}

absl::StatusOr<Vector> PerSampleLoss(const Network& net,
                                     const Eigen::Ref<const Matrix>& xs,
                                     std::span<const int> labels) {
  RETURN_IF_ERROR(CheckInput(net, xs.rows()));
  if (static_cast<Eigen::Index>(labels.size()) != xs.cols()) {
    return absl::InvalidArgumentError("sample/label count mismatch");
  }
  RETURN_IF_ERROR(CheckLabels(net, xs.cols(), labels));
  Vector losses(xs.cols());
  for (Eigen::Index start = 0; start < xs.cols(); start += kInferenceChunk) {
    const Eigen::Index width =
        std::min<Eigen::Index>(kInferenceChunk, xs.cols() - start);
    Matrix logits =
        HiddenChunk(net, xs.middleCols(start, width), net.num_layers());
    const Matrix raw = logits;
    const Vector lse = SoftmaxColumns(logits);
    for (Eigen::Index c = 0; c < width; ++c) {
      losses(start + c) =
          std::min(lse(c) - raw(labels[start + c], c), kMaxLoss);
    }
  }
  return losses;
}

absl::StatusOr<std::vector<int>> PredictLabels(
    const Network& net, const Eigen::Ref<const Matrix>& xs) {
  ASSIGN_OR_RETURN(const Matrix posteriors, ForwardBatch(net, xs));
  std::vector<int> predictions(posteriors.cols());
  for (Eigen::Index c = 0; c < posteriors.cols(); ++c) {
    Eigen::Index arg = 0;
    posteriors.col(c).maxCoeff(&arg);
    predictions[c] = static_cast<int>(arg);
  }
  return predictions;
}

absl::StatusOr<double> Accuracy(const Network& net,
                                const Eigen::Ref<const Matrix>& xs,
                                std::span<const int> labels) {
  if (xs.cols() == 0) return absl::InvalidArgumentError("empty sample set");
  if (static_cast<Eigen::Index>(labels.size()) != xs.cols()) {
    return absl::InvalidArgumentError("sample/label count mismatch");
  }
  ASSIGN_OR_RETURN(const std::vector<int> predictions, PredictLabels(net, xs));
  int hits = 0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i] == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

absl::StatusOr<LossAndGradient> LossAndGrad(const Network& net,
                                            const Eigen::Ref<const Matrix>& xs,
                                            std::span<const int> labels,
                                            const Matrix* logit_offsets) {
  RETURN_IF_ERROR(CheckInput(net, xs.rows()));
  RETURN_IF_ERROR(CheckLabels(net, xs.cols(), labels));
  if (logit_offsets != nullptr &&
      (logit_offsets->rows() != net.output_dim() ||
       logit_offsets->cols() != xs.cols())) {
    return absl::InvalidArgumentError("logit offset shape mismatch");
  }
  std::vector<Matrix> activations;
  ForwardKeep(net, xs, activations);
  OutputError error =
      ComputeOutputError(activations.back(), labels, logit_offsets);
  const double inv_batch = 1.0 / static_cast<double>(xs.cols());
  const std::vector<Matrix> deltas =
      BackpropDeltas(net, activations, std::move(error.delta));

  // Averaging after backprop keeps this bit-identical to an unclipped,
  // noiseless ClippedMeanGradient.
  LossAndGradient result;
  result.loss = error.loss_sum * inv_batch;
  result.correct = error.correct;
  result.gradients.resize(deltas.size());
  for (size_t l = 0; l < deltas.size(); ++l) {
    const Matrix scaled = deltas[l] * inv_batch;
    result.gradients[l].weights = scaled * activations[l].transpose();
    result.gradients[l].biases = scaled.rowwise().sum();
  }
  return result;
}

absl::Status ApplySgdUpdate(Network& net, const Gradients& grads,
                            double learning_rate) {
  RETURN_IF_ERROR(CheckShapes(net, grads));
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    return absl::InvalidArgumentError("learning rate must be finite and >= 0");
  }
  auto& layers = net.mutable_layers();
  for (size_t l = 0; l < layers.size(); ++l) {
    layers[l].weights -= learning_rate * grads[l].weights;
    layers[l].biases -= learning_rate * grads[l].biases;
  }
  return absl::OkStatus();
}

absl::StatusOr<Network> SgdStep(const Network& net, const Gradients& grads,
                                double learning_rate) {
  Network next = net;
  RETURN_IF_ERROR(ApplySgdUpdate(next, grads, learning_rate));
  return next;
}

absl::StatusOr<std::vector<double>> PerSampleGradientNorms(
    const Network& net, const Eigen::Ref<const Matrix>& xs,
    std::span<const int> labels) {
  RETURN_IF_ERROR(CheckInput(net, xs.rows()));
  RETURN_IF_ERROR(CheckLabels(net, xs.cols(), labels));
  std::vector<Matrix> activations;
  ForwardKeep(net, xs, activations);
  OutputError error = ComputeOutputError(activations.back(), labels, nullptr);
  const std::vector<Matrix> deltas =
      BackpropDeltas(net, activations, std::move(error.delta));
  const Vector sq = PerSampleSquaredNorms(activations, deltas);
  std::vector<double> norms(sq.size());
  for (Eigen::Index i = 0; i < sq.size(); ++i) norms[i] = std::sqrt(sq(i));
  return norms;
}

absl::StatusOr<LossAndGradient> ClippedMeanGradient(
    const Network& net, const Eigen::Ref<const Matrix>& xs,
    std::span<const int> labels, double clip) {
  if (!(clip > 0.0) || !std::isfinite(clip)) {
    return absl::FailedPreconditionError(
        absl::StrCat("DP clipping bound must be positive, got ", clip));
  }
  RETURN_IF_ERROR(CheckInput(net, xs.rows()));
  RETURN_IF_ERROR(CheckLabels(net, xs.cols(), labels));
  std::vector<Matrix> activations;
  ForwardKeep(net, xs, activations);
  OutputError error = ComputeOutputError(activations.back(), labels, nullptr);
  const std::vector<Matrix> deltas =
      BackpropDeltas(net, activations, std::move(error.delta));
  const Vector sq = PerSampleSquaredNorms(activations, deltas);

  const Eigen::Index batch = xs.cols();
  const double inv_batch = 1.0 / static_cast<double>(batch);
  Vector scale(batch);
  for (Eigen::Index i = 0; i < batch; ++i) {
    const double norm = std::sqrt(sq(i));
    const double factor = norm > clip ? clip / norm : 1.0;
    if (factor * norm > clip * (1.0 + 1e-9)) {
      return absl::InternalError("clipped per-sample gradient exceeds bound");
    }
    scale(i) = factor * inv_batch;
  }

  LossAndGradient result;
  result.loss = error.loss_sum * inv_batch;
  result.correct = error.correct;
  result.gradients.resize(deltas.size());
  for (size_t l = 0; l < deltas.size(); ++l) {
    const Matrix scaled = deltas[l] * scale.asDiagonal();
    result.gradients[l].weights = scaled * activations[l].transpose();
    result.gradients[l].biases = scaled.rowwise().sum();
  }
  return result;
}

namespace {

absl::StatusOr<LossAndGradient> NoisyClippedGradient(
    const Network& net, const Eigen::Ref<const Matrix>& xs,
    std::span<const int> labels, double clip, double noise, Rng& rng) {
  if (!(noise >= 0.0) || !std::isfinite(noise)) {
    return absl::FailedPreconditionError(
        absl::StrCat("DP noise multiplier must be >= 0, got ", noise));
  }
  ASSIGN_OR_RETURN(LossAndGradient step,
                   ClippedMeanGradient(net, xs, labels, clip));
  if (noise > 0.0) {
    const double stddev = noise * clip / static_cast<double>(xs.cols());
    GaussianSampler gauss;
    for (DenseLayer& g : step.gradients) {
      for (Eigen::Index i = 0; i < g.weights.size(); ++i) {
        g.weights.data()[i] += stddev * gauss.Next(rng);
      }
      for (Eigen::Index i = 0; i < g.biases.size(); ++i) {
        g.biases(i) += stddev * gauss.Next(rng);
      }
    }
  }
  return step;
}

}  // namespace

absl::StatusOr<Network> DpSgdStep(const Network& net,
                                  const Eigen::Ref<const Matrix>& xs,
                                  std::span<const int> labels,
                                  double learning_rate, double clip,
                                  double noise, Rng& rng) {
  ASSIGN_OR_RETURN(const LossAndGradient step,
                   NoisyClippedGradient(net, xs, labels, clip, noise, rng));
  return SgdStep(net, step.gradients, learning_rate);
}

absl::StatusOr<Optimizer> ParseOptimizer(const std::string& name) {
  if (name == "sgd") return Optimizer::kSgd;
  if (name == "dp_sgd") return Optimizer::kDpSgd;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown optimizer '", name, "'"));
}

std::string OptimizerName(Optimizer optimizer) {
  return optimizer == Optimizer::kSgd ? "sgd" : "dp_sgd";
}

absl::Status TrainConfig::Validate() const {
  if (epochs < 0) {
    return absl::FailedPreconditionError("epochs must be >= 0");
  }
  if (batch_size < 1) {
    return absl::FailedPreconditionError("batch_size must be >= 1");
  }
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    return absl::FailedPreconditionError("learning_rate must be positive");
  }
  const bool has_dp = dp_clip.has_value() || dp_noise.has_value();
  if (optimizer == Optimizer::kDpSgd) {
    if (!dp_clip.has_value() || !dp_noise.has_value()) {
      return absl::FailedPreconditionError(
          "dp_sgd requires both dp_clip and dp_noise");
    }
    if (!(*dp_clip > 0.0)) {
      return absl::FailedPreconditionError("dp_clip must be positive");
    }
    if (!(*dp_noise >= 0.0)) {
      return absl::FailedPreconditionError("dp_noise must be >= 0");
    }
  } else if (has_dp) {
    return absl::FailedPreconditionError(
        "dp_clip/dp_noise are only valid with the dp_sgd optimizer");
  }
  return absl::OkStatus();
}

absl::StatusOr<LossAndGradient> ApplyTrainingStep(
    Network& net, const Eigen::Ref<const Matrix>& batch_x,
    std::span<const int> batch_labels, const TrainConfig& config,
    Rng& noise_rng) {
  if (config.optimizer == Optimizer::kSgd) {
    ASSIGN_OR_RETURN(LossAndGradient step,
                     LossAndGrad(net, batch_x, batch_labels));
    RETURN_IF_ERROR(
        ApplySgdUpdate(net, step.gradients, config.learning_rate));
    return step;
  }
  ASSIGN_OR_RETURN(
      LossAndGradient step,
      NoisyClippedGradient(net, batch_x, batch_labels, *config.dp_clip,
                           *config.dp_noise, noise_rng));
  RETURN_IF_ERROR(ApplySgdUpdate(net, step.gradients, config.learning_rate));
  return step;
}

void GatherColumns(const Eigen::Ref<const Matrix>& source,
                   std::span<const int> columns, Matrix& out) {
  out.resize(source.rows(), static_cast<Eigen::Index>(columns.size()));
  for (size_t i = 0; i < columns.size(); ++i) {
    out.col(static_cast<Eigen::Index>(i)) = source.col(columns[i]);
  }
}

absl::StatusOr<TrainResult> Train(Network net,
                                  const Eigen::Ref<const Matrix>& features,
                                  std::span<const int> labels,
                                  const TrainConfig& config,
                                  const BatchObserver& observer) {
  RETURN_IF_ERROR(config.Validate());
  RETURN_IF_ERROR(CheckInput(net, features.rows()));
  RETURN_IF_ERROR(CheckLabels(net, features.cols(), labels));

  const int n = static_cast<int>(features.cols());
  Rng batch_rng(DeriveSeed(config.seed, kStreamBatches));
  Rng noise_rng(DeriveSeed(config.seed, kStreamDpNoise));
  TrainResult result{std::move(net), {}};
  result.history.reserve(config.epochs);

  Matrix batch_x;
  std::vector<int> batch_labels;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const std::vector<int> order = RandomPermutation(n, batch_rng);
    double loss_sum = 0.0;
    int correct = 0;
    int iteration = 0;
    for (int start = 0; start < n; start += config.batch_size, ++iteration) {
      const int width = std::min(config.batch_size, n - start);
      const std::span<const int> batch(order.data() + start, width);
      if (observer) observer(epoch, iteration, batch);
      GatherColumns(features, batch, batch_x);
      batch_labels.resize(width);
      for (int i = 0; i < width; ++i) batch_labels[i] = labels[batch[i]];
      ASSIGN_OR_RETURN(const LossAndGradient step,
                       ApplyTrainingStep(result.network, batch_x,
                                         batch_labels, config, noise_rng));
      loss_sum += step.loss * width;
      correct += step.correct;
    }
    result.history.push_back(
        {loss_sum / n, static_cast<double>(correct) / n});
  }
  return result;
}

}  // namespace clpriv
