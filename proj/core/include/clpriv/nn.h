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

// Dense fully-connected classifiers: ReLU hidden layers, softmax output,
// mean cross-entropy loss, hand-written backpropagation, SGD and DP-SGD.
//
// Batches are column-major: every column of a feature matrix is one sample.

#ifndef CLPRIV_NN_H_
#define CLPRIV_NN_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "clpriv/random.h"

namespace clpriv {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Probabilities are clamped at this value before taking logs.
inline constexpr double kProbabilityFloor = 1e-12;

struct DenseLayer {
  Matrix weights;  // fan_out x fan_in
  Vector biases;   // fan_out
};

// Same shape as Network::layers().
using Gradients = std::vector<DenseLayer>;

class Network {
 public:
  // Weights and biases drawn uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  // `layer_dims` lists the input width, hidden widths, then the class count.
  static absl::StatusOr<Network> Create(std::vector<int> layer_dims,
                                        uint64_t seed);
  static absl::StatusOr<Network> Zeros(std::vector<int> layer_dims);
  // Validates that layer shapes chain and all parameters are finite.
  static absl::StatusOr<Network> FromLayers(std::vector<DenseLayer> layers);

  const std::vector<int>& layer_dims() const { return dims_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  int num_layers() const { return static_cast<int>(layers_.size()); }
  int64_t parameter_count() const;

  const std::vector<DenseLayer>& layers() const { return layers_; }
  // Callers must not change any matrix shape.
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

  bool AllFinite() const;
  bool BitwiseEquals(const Network& other) const;

 private:
  Network(std::vector<int> dims, std::vector<DenseLayer> layers)
      : dims_(std::move(dims)), layers_(std::move(layers)) {}

  std::vector<int> dims_;
  std::vector<DenseLayer> layers_;
};

absl::Status ValidateLayerDims(std::span<const int> layer_dims);

// Softmax posterior for a single sample.
absl::StatusOr<Vector> Forward(const Network& net,
                               const Eigen::Ref<const Vector>& x);
// Posteriors for every column of `xs`; result is output_dim x cols.
absl::StatusOr<Matrix> ForwardBatch(const Network& net,
                                    const Eigen::Ref<const Matrix>& xs);

// Penultimate-layer activations (after ReLU). Networks with a single weight
// layer have no hidden representation and are rejected.
absl::StatusOr<Vector> Embed(const Network& net,
                             const Eigen::Ref<const Vector>& x);
absl::StatusOr<Matrix> EmbedBatch(const Network& net,
                                  const Eigen::Ref<const Matrix>& xs);

// Cross-entropy loss of every column against its label.
absl::StatusOr<Vector> PerSampleLoss(const Network& net,
                                     const Eigen::Ref<const Matrix>& xs,
                                     std::span<const int> labels);

absl::StatusOr<std::vector<int>> PredictLabels(
    const Network& net, const Eigen::Ref<const Matrix>& xs);
absl::StatusOr<double> Accuracy(const Network& net,
                                const Eigen::Ref<const Matrix>& xs,
                                std::span<const int> labels);

struct LossAndGradient {
  double loss = 0.0;  // mean over the batch
  int correct = 0;    // argmax hits, for running accuracy
  Gradients gradients;
};

// Mean cross-entropy over the batch and its exact gradient. When given,
// `logit_offsets` (output_dim x batch) is added to the final logits before the
// softmax; this shifts each sample's decision boundary without changing the
// parameterization.
absl::StatusOr<LossAndGradient> LossAndGrad(
    const Network& net, const Eigen::Ref<const Matrix>& xs,
    std::span<const int> labels, const Matrix* logit_offsets = nullptr);

// p <- p - lr * g for every parameter.
absl::StatusOr<Network> SgdStep(const Network& net, const Gradients& grads,
                                double learning_rate);
absl::Status ApplySgdUpdate(Network& net, const Gradients& grads,
                            double learning_rate);

// L2 norm of each sample's own loss gradient (all parameters flattened).
absl::StatusOr<std::vector<double>> PerSampleGradientNorms(
    const Network& net, const Eigen::Ref<const Matrix>& xs,
    std::span<const int> labels);

// Mean of per-sample gradients after scaling each one to L2 norm <= clip.
absl::StatusOr<LossAndGradient> ClippedMeanGradient(
    const Network& net, const Eigen::Ref<const Matrix>& xs,
    std::span<const int> labels, double clip);

// One DP-SGD step: per-sample clipping to `clip`, averaging, Gaussian noise
// with standard deviation noise * clip / batch_size on every coordinate, then
// an SGD update.
absl::StatusOr<Network> DpSgdStep(const Network& net,
                                  const Eigen::Ref<const Matrix>& xs,
                                  std::span<const int> labels,
                                  double learning_rate, double clip,
                                  double noise, Rng& rng);

enum class Optimizer { kSgd, kDpSgd };

absl::StatusOr<Optimizer> ParseOptimizer(const std::string& name);
std::string OptimizerName(Optimizer optimizer);

struct TrainConfig {
  int epochs = 200;
  int batch_size = 128;
  double learning_rate = 0.1;
  Optimizer optimizer = Optimizer::kSgd;
  std::optional<double> dp_clip;   // required iff optimizer == kDpSgd
  std::optional<double> dp_noise;  // required iff optimizer == kDpSgd
  uint64_t seed = 0;

  absl::Status Validate() const;
};

// Applies one optimizer step (SGD or DP-SGD per `config`) to `net` in place.
absl::StatusOr<LossAndGradient> ApplyTrainingStep(
    Network& net, const Eigen::Ref<const Matrix>& batch_x,
    std::span<const int> batch_labels, const TrainConfig& config,
    Rng& noise_rng);

struct EpochStats {
  double loss = 0.0;      // sample-weighted mean of batch losses
  double accuracy = 0.0;  // running accuracy of the pre-update predictions
};

struct TrainResult {
  Network network;
  std::vector<EpochStats> history;
};

// Called with the sample indices of each batch before the step is applied.
using BatchObserver =
    std::function<void(int epoch, int iteration, std::span<const int> batch)>;

// Normal training: a fresh random order every epoch, sequential mini-batches,
// last partial batch kept.
absl::StatusOr<TrainResult> Train(Network net,
                                  const Eigen::Ref<const Matrix>& features,
                                  std::span<const int> labels,
                                  const TrainConfig& config,
                                  const BatchObserver& observer = {});

// Copies the selected columns of `source` into `out` (resized as needed).
void GatherColumns(const Eigen::Ref<const Matrix>& source,
                   std::span<const int> columns, Matrix& out);

}  // namespace clpriv

#endif  // CLPRIV_NN_H_
