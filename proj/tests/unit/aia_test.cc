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

#include <vector>

#include "gtest/gtest.h"
#include "test_util.h"

namespace clpriv {
namespace {

using ::clpriv::testing::CodeOf;

TrainConfig AiaConfig() {
  TrainConfig c;
  c.epochs = 100;
  c.batch_size = 32;
  c.learning_rate = 0.01;
  c.seed = 4;
  return c;
}

TEST(AiaTest, DefaultTrainingSchedule) {
  TrainConfig base;
  base.batch_size = 7;
  const TrainConfig c = DefaultAiaTrainConfig(base, 42);
  EXPECT_EQ(c.epochs, 100);
  EXPECT_DOUBLE_EQ(c.learning_rate, 0.01);
  EXPECT_EQ(c.batch_size, 7);
  EXPECT_EQ(c.seed, 42u);
}

TEST(AiaTest, OneHotPosteriorPicksThatAttribute) {
  std::vector<DenseLayer> layers(2);
  layers[0] = {Matrix::Identity(2, 2), Vector::Zero(2)};
  layers[1] = {Matrix::Zero(3, 2), Vector::Zero(3)};
  layers[1].biases(2) = 50.0;
  const AiaAttackModel attack{Network::FromLayers(layers).value()};
  ASSERT_OK_AND_ASSIGN(const auto predictions, AiaInferEmbeddings(attack, Matrix::Ones(2, 4)));
  for (const AiaPrediction& p : predictions) {
    EXPECT_EQ(p.attribute, 2);
    EXPECT_NEAR(p.posterior(2), 1.0, 1e-12);
  }
}

TEST(AiaTest, ConstantAttributeIsAlwaysRecovered) {
  const Matrix embeddings = Matrix::Random(6, 50);
  const std::vector<int> sensitive(50, 1);
  ASSERT_OK_AND_ASSIGN(const AiaAttackModel attack,
                       AiaTrainOnEmbeddings(embeddings, sensitive, 3, AiaConfig()));
  EXPECT_EQ(attack.network.layer_dims(), (std::vector<int>{6, 128, 128, 3}));
  const Matrix fresh = Matrix::Random(6, 40);
  ASSERT_OK_AND_ASSIGN(const auto predictions, AiaInferEmbeddings(attack, fresh));
  EXPECT_EQ(PredictionAccuracy(predictions, std::vector<int>(40, 1)), 1.0);
}

TEST(AiaTest, LinearlyEncodedAttributeIsLearned) {
  Rng rng(8);
  const int n = 400;
  Matrix embeddings(4, n);
  std::vector<int> sensitive(n);
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < 4; ++r) embeddings(r, i) = 2.0 * UniformUnit(rng) - 1.0;
    sensitive[i] = embeddings(0, i) + 0.5 * embeddings(1, i) > 0.0 ? 1 : 0;
  }
  TrainConfig c = AiaConfig();
  c.learning_rate = 0.1;
  ASSERT_OK_AND_ASSIGN(const AiaAttackModel attack,
                       AiaTrainOnEmbeddings(embeddings, sensitive, 2, c));
  ASSERT_OK_AND_ASSIGN(const auto predictions, AiaInferEmbeddings(attack, embeddings));
  EXPECT_GE(PredictionAccuracy(predictions, sensitive), 0.95);
  for (const AiaPrediction& p : predictions) EXPECT_NEAR(p.posterior.sum(), 1.0, 1e-9);
}

TEST(AiaTest, MissingSensitiveLabelsIsAConfigError) {
  SynthParams p;
  p.n = 30;
  p.dim = 8;
  p.class_count = 2;
  ASSERT_OK_AND_ASSIGN(const Dataset d, SynthTabular(p));
  ASSERT_FALSE(d.has_sensitive());
  ASSERT_OK_AND_ASSIGN(const Network target, Network::Create({8, 5, 2}, 1));
  EXPECT_EQ(CodeOf(AiaTrain(target, d, AiaConfig())), absl::StatusCode::kFailedPrecondition);
}

TEST(AiaTest, OutOfRangeAttributeIsAnInputError) {
  EXPECT_EQ(CodeOf(AiaTrainOnEmbeddings(Matrix::Zero(2, 2), std::vector<int>{0, 3}, 2,
                                        AiaConfig())),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(CodeOf(AiaTrainOnEmbeddings(Matrix::Zero(2, 3), std::vector<int>{0, 1}, 2,
                                        AiaConfig())),
            absl::StatusCode::kInvalidArgument);
}

TEST(AiaTest, EndToEndOnSyntheticSensitiveBlock) {
  SynthParams p;
  p.n = 600;
  p.dim = 40;
  p.class_count = 4;
  p.sensitive_count = 2;
  p.sensitive_block = 10;
  p.seed = 3;
  ASSERT_OK_AND_ASSIGN(const Dataset d, SynthTabular(p));
  ASSERT_TRUE(d.has_sensitive());
  std::vector<int> aux_ids, eval_ids;
  for (int i = 0; i < d.size(); ++i) (i % 2 == 0 ? aux_ids : eval_ids).push_back(i);
  const Dataset aux = d.Subset(aux_ids);
  const Dataset eval = d.Subset(eval_ids);
  ASSERT_OK_AND_ASSIGN(Network target, Network::Create({40, 32, 4}, 2));
  TrainConfig tc;
  tc.epochs = 20;
  tc.batch_size = 32;
  ASSERT_OK_AND_ASSIGN(const TrainResult trained,
                       Train(std::move(target), aux.features, aux.labels, tc));
  ASSERT_OK_AND_ASSIGN(const AiaAttackModel attack, AiaTrain(trained.network, aux, AiaConfig()));
  ASSERT_OK_AND_ASSIGN(const auto predictions,
                       AiaInfer(attack, trained.network, eval.features));
  const double accuracy = PredictionAccuracy(predictions, *eval.sensitive);
  EXPECT_GE(accuracy, 0.0);
  EXPECT_LE(accuracy, 1.0);
  ASSERT_OK_AND_ASSIGN(const double baseline,
                       MajorityBaselineAccuracy(*aux.sensitive, *eval.sensitive));
  EXPECT_GT(baseline, 0.0);
}

TEST(MajorityBaselineTest, PicksMostFrequentReferenceValue) {
  EXPECT_DOUBLE_EQ(MajorityBaselineAccuracy(std::vector<int>{2, 2, 0},
                                            std::vector<int>{2, 0, 0, 2})
                       .value(),
                   0.5);
  // Ties go to the smallest value.
  EXPECT_DOUBLE_EQ(MajorityBaselineAccuracy(std::vector<int>{1, 0}, std::vector<int>{0, 1, 1})
                       .value(),
                   1.0 / 3.0);
  EXPECT_EQ(CodeOf(MajorityBaselineAccuracy(std::vector<int>{}, std::vector<int>{1})),
            absl::StatusCode::kInvalidArgument);
}

TEST(PredictionAccuracyTest, SizeMismatchScoresZero) {
  std::vector<AiaPrediction> predictions(2);
  EXPECT_EQ(PredictionAccuracy(predictions, std::vector<int>{0}), 0.0);
  EXPECT_EQ(PredictionAccuracy(predictions, std::vector<int>{0, 1}), 0.5);
}

}  // namespace
}  // namespace clpriv
