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

#include "clpriv/analysis.h"

#include <algorithm>
#include <numeric>
#include <vector>

#include "gtest/gtest.h"
#include "oracles.h"
#include "test_util.h"

namespace clpriv {
namespace {

using ::clpriv::testing::CodeOf;

TEST(QuartilesTest, LinearInterpolation) {
  ASSERT_OK_AND_ASSIGN(const Quartiles q, ComputeQuartiles({4, 1, 3, 2, 5}));
  EXPECT_DOUBLE_EQ(q.q1, 2.0);
  EXPECT_DOUBLE_EQ(q.median, 3.0);
  EXPECT_DOUBLE_EQ(q.q3, 4.0);
  ASSERT_OK_AND_ASSIGN(const Quartiles even, ComputeQuartiles({0, 1, 2, 3}));
  EXPECT_DOUBLE_EQ(even.q1, 0.75);
  EXPECT_DOUBLE_EQ(even.median, 1.5);
  EXPECT_DOUBLE_EQ(even.q3, 2.25);
  ASSERT_OK_AND_ASSIGN(const Quartiles single, ComputeQuartiles({7}));
  EXPECT_EQ(single.q1, 7.0);
  EXPECT_EQ(single.q3, 7.0);
  EXPECT_EQ(CodeOf(ComputeQuartiles({})), absl::StatusCode::kInvalidArgument);
}

TEST(ScenarioTest, NamesRoundTrip) {
  for (const MemorizationScenario s : kAllScenarios) {
    ASSERT_OK_AND_ASSIGN(const MemorizationScenario parsed, ParseScenario(ScenarioName(s)));
    EXPECT_EQ(parsed, s);
  }
  EXPECT_EQ(CodeOf(ParseScenario("sometimes_seen")), absl::StatusCode::kInvalidArgument);
}

TEST(ScenarioOrderTest, PlacesHoldoutAsDescribed) {
  const std::vector<int> order = {3, 0, 4, 1, 5, 2};
  const std::vector<int> holdout = {5, 2};
  EXPECT_EQ(ScenarioOrder(MemorizationScenario::kNotSeen, order, holdout, 1).value(),
            (std::vector<int>{3, 0, 4, 1}));
  EXPECT_EQ(ScenarioOrder(MemorizationScenario::kFirstSeen, order, holdout, 1).value(),
            (std::vector<int>{5, 2, 3, 0, 4, 1}));
  EXPECT_EQ(ScenarioOrder(MemorizationScenario::kLastSeen, order, holdout, 1).value(),
            (std::vector<int>{3, 0, 4, 1, 5, 2}));
}

TEST(ScenarioOrderTest, SeenScenariosPresentTheSameMultiset) {
  std::vector<int> order(50);
  std::iota(order.begin(), order.end(), 0);
  std::reverse(order.begin(), order.end());
  const std::vector<int> holdout = {7, 19, 33};
  for (const uint64_t seed : {1u, 2u, 3u}) {
    for (const MemorizationScenario s : {MemorizationScenario::kFirstSeen,
                                         MemorizationScenario::kLastSeen,
                                         MemorizationScenario::kRandom}) {
      std::vector<int> got = ScenarioOrder(s, order, holdout, seed).value();
      std::sort(got.begin(), got.end());
      std::vector<int> expected(50);
      std::iota(expected.begin(), expected.end(), 0);
      EXPECT_EQ(got, expected);
    }
    const std::vector<int> random =
        ScenarioOrder(MemorizationScenario::kRandom, order, holdout, seed).value();
    // Non-holdout samples keep their curriculum order.
    std::vector<int> rest;
    for (const int i : random) {
      if (std::find(holdout.begin(), holdout.end(), i) == holdout.end()) rest.push_back(i);
    }
    EXPECT_TRUE(std::is_sorted(rest.rbegin(), rest.rend()));
  }
  EXPECT_EQ(ScenarioOrder(MemorizationScenario::kRandom, order, holdout, 9).value(),
            ScenarioOrder(MemorizationScenario::kRandom, order, holdout, 9).value());
}

TEST(ScenarioOrderTest, RejectsBadHoldout) {
  const std::vector<int> order = {0, 1, 2};
  EXPECT_EQ(CodeOf(ScenarioOrder(MemorizationScenario::kNotSeen, order, std::vector<int>{}, 1)),
            absl::StatusCode::kFailedPrecondition);
  EXPECT_EQ(CodeOf(ScenarioOrder(MemorizationScenario::kNotSeen, order,
                                 std::vector<int>{1, 1}, 1)),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(CodeOf(ScenarioOrder(MemorizationScenario::kNotSeen, order,
                                 std::vector<int>{3}, 1)),
            absl::StatusCode::kInvalidArgument);
}

TEST(MemorizationTest, SmallExperimentProducesProbabilities) {
  const Dataset d = testing::SeparableBlobs(100, 4);
  std::vector<double> scores(d.size());
  for (int i = 0; i < d.size(); ++i) scores[i] = std::abs(d.features(0, i));
  ASSERT_OK_AND_ASSIGN(const Curriculum c,
                       BuildCurriculum(scores, CurriculumMode::kBootstrap, 1));
  MemorizationConfig config;
  config.holdout_fraction = 0.1;
  config.layer_dims = {2, 8, 2};
  config.train.epochs = 5;
  config.train.batch_size = 10;
  config.train.seed = 3;
  ASSERT_OK_AND_ASSIGN(const auto results, MemorizationExperiment(d, c, config));
  ASSERT_EQ(results.size(), 4u);
  for (const MemorizationResult& r : results) {
    ASSERT_EQ(r.holdout.size(), 10u);
    EXPECT_EQ(r.holdout, results[0].holdout);
    for (const int i : r.holdout) EXPECT_GT(c.ranks()[i], 90);
    for (const double p : r.true_class_probability) {
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
    }
    EXPECT_LE(r.quartiles.q1, r.quartiles.median);
    EXPECT_LE(r.quartiles.median, r.quartiles.q3);
  }
  config.holdout_fraction = 1.0;
  EXPECT_EQ(CodeOf(MemorizationExperiment(d, c, config)), absl::StatusCode::kFailedPrecondition);
}

// One-dimensional training points so distances are easy to read.
Matrix Points(const std::vector<double>& xs) {
  Matrix m(1, xs.size());
  for (size_t i = 0; i < xs.size(); ++i) m(0, i) = xs[i];
  return m;
}

TEST(KnnShapleyTest, HandComputedK1) {
  // Sorted by distance to 0: labels match, mismatch, match.
  ASSERT_OK_AND_ASSIGN(const std::vector<double> v,
                       KnnShapleyPoint(Points({1, 2, 3}), std::vector<int>{0, 1, 0},
                                       Vector::Zero(1), 0, 1));
  // s3 = 1/3, s2 = s3 + (0 - 1) / 2 = -1/6, s1 = s2 + (1 - 0) / 1 = 5/6.
  EXPECT_NEAR(v[2], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(v[1], -1.0 / 6.0, 1e-15);
  EXPECT_NEAR(v[0], 5.0 / 6.0, 1e-15);
}

TEST(KnnShapleyTest, AllMatchingLabelsShareValueEqually) {
  for (const int k : {1, 3, 5}) {
    ASSERT_OK_AND_ASSIGN(const std::vector<double> v,
                         KnnShapleyPoint(Points({0.5, 2, 3, 7, 1}), std::vector<int>(5, 4),
                                         Vector::Zero(1), 4, k));
    for (const double x : v) EXPECT_NEAR(x, 0.2, 1e-15);
  }
}

TEST(KnnShapleyTest, TwoPointsNearestMatches) {
  ASSERT_OK_AND_ASSIGN(const std::vector<double> v,
                       KnnShapleyPoint(Points({1, 2}), std::vector<int>{0, 1}, Vector::Zero(1), 0, 1));
  EXPECT_DOUBLE_EQ(v[0], 1.0);
  EXPECT_DOUBLE_EQ(v[1], 0.0);
}

TEST(KnnShapleyTest, MatchesSubsetEnumeration) {
  Rng rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + static_cast<int>(UniformIndex(9, rng));
    const int k = 1 + static_cast<int>(UniformIndex(n, rng));
    std::vector<double> xs(n);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
      xs[i] = UniformUnit(rng) * 10.0;
      labels[i] = static_cast<int>(UniformIndex(3, rng));
    }
    const int y = static_cast<int>(UniformIndex(3, rng));
    ASSERT_OK_AND_ASSIGN(const std::vector<double> v,
                         KnnShapleyPoint(Points(xs), labels, Vector::Zero(1), y, k));
    std::vector<double> dist(n);
    for (int i = 0; i < n; ++i) dist[i] = xs[i] * xs[i];
    const std::vector<double> expected = oracle::BruteForceShapley(dist, labels, y, k);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(v[i], expected[i], 1e-12) << "trial " << trial;
  }
}

TEST(KnnShapleyTest, ValuesSumToFullSetUtility) {
  Rng rng(5);
  const int n = 60;
  std::vector<double> xs(n);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = UniformUnit(rng);
    labels[i] = i % 4;
  }
  std::vector<int> by_distance(n);
  std::iota(by_distance.begin(), by_distance.end(), 0);
  std::stable_sort(by_distance.begin(), by_distance.end(),
                   [&xs](int a, int b) { return xs[a] < xs[b]; });
  for (const int k : {1, 5, 60}) {
    ASSERT_OK_AND_ASSIGN(const std::vector<double> v,
                         KnnShapleyPoint(Points(xs), labels, Vector::Zero(1), 2, k));
    double full = 0.0;
    for (int j = 0; j < k; ++j) full += labels[by_distance[j]] == 2 ? 1.0 : 0.0;
    EXPECT_NEAR(std::accumulate(v.begin(), v.end(), 0.0), full / k, 1e-12);
  }
}

TEST(KnnShapleyTest, RejectsBadK) {
  EXPECT_EQ(CodeOf(KnnShapleyPoint(Points({1, 2}), std::vector<int>{0, 1}, Vector::Zero(1), 0, 3)),
            absl::StatusCode::kFailedPrecondition);
  EXPECT_EQ(CodeOf(KnnShapleyPoint(Points({1, 2}), std::vector<int>{0, 1}, Vector::Zero(1), 0, 0)),
            absl::StatusCode::kFailedPrecondition);
  EXPECT_EQ(CodeOf(KnnShapleyPoint(Points({1, 2}), std::vector<int>{0, 1}, Vector::Zero(2), 0, 1)),
            absl::StatusCode::kInvalidArgument);
}

TEST(KnnShapleyTest, AveragesOverValidationSet) {
  Dataset train;
  train.features = Points({1, 2, 3});
  train.labels = {0, 1, 0};
  train.class_count = 2;
  Dataset validation;
  validation.features = Points({0, 0});
  validation.labels = {0, 1};
  validation.class_count = 2;
  ASSERT_OK_AND_ASSIGN(const std::vector<double> v, KnnShapley(train, validation, 1));
  const std::vector<double> a =
      KnnShapleyPoint(train.features, train.labels, Vector::Zero(1), 0, 1).value();
  const std::vector<double> b =
      KnnShapleyPoint(train.features, train.labels, Vector::Zero(1), 1, 1).value();
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(v[i], (a[i] + b[i]) / 2.0, 1e-15);
}

TEST(RocTest, PerfectAndInvertedScores) {
  const std::vector<bool> truth = {true, true, false, false};
  ASSERT_OK_AND_ASSIGN(const RocCurve perfect,
                       ComputeRoc(std::vector<double>{0.9, 0.8, 0.2, 0.1}, truth));
  EXPECT_DOUBLE_EQ(perfect.auc, 1.0);
  ASSERT_OK_AND_ASSIGN(const RocCurve inverted,
                       ComputeRoc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, truth));
  EXPECT_DOUBLE_EQ(inverted.auc, 0.0);
  ASSERT_OK_AND_ASSIGN(const RocCurve constant,
                       ComputeRoc(std::vector<double>{0.5, 0.5, 0.5, 0.5}, truth));
  EXPECT_DOUBLE_EQ(constant.auc, 0.5);
}

TEST(RocTest, SeparatedScoresHaveFullTprAtAnyPositiveFpr) {
  std::vector<double> scores;
  std::vector<bool> truth;
  for (int i = 0; i < 20; ++i) {
    scores.push_back(i < 10 ? 1.0 + i : -1.0 - i);
    truth.push_back(i < 10);
  }
  ASSERT_OK_AND_ASSIGN(const RocCurve roc, ComputeRoc(scores, truth));
  for (const TprAtFpr& row : TprAtFprTable(roc, DefaultFprGrid())) EXPECT_EQ(row.tpr, 1.0);
}

TEST(RocTest, TenPointHandFixture) {
  const std::vector<double> scores = {0.9, 0.8, 0.8, 0.7, 0.6, 0.55, 0.5, 0.4, 0.4, 0.1};
  const std::vector<bool> truth = {true, true, false, true, false, true, false, true, false, false};
  ASSERT_OK_AND_ASSIGN(const RocCurve roc, ComputeRoc(scores, truth));
  // 25 member/non-member pairs: 17 ordered correctly, 2 ties.
  EXPECT_NEAR(roc.auc, 18.0 / 25.0, 1e-15);
  EXPECT_NEAR(roc.auc, oracle::PairwiseAuc(scores, truth), 1e-15);
}

TEST(RocTest, PropertiesAndPairwiseAuc) {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(UniformIndex(80, rng));
    std::vector<double> scores(n);
    std::vector<bool> truth(n);
    for (int i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(UniformIndex(10, rng));
      truth[i] = i < 1 || (i > 1 && UniformUnit(rng) < 0.5);
    }
    ASSERT_OK_AND_ASSIGN(const RocCurve roc, ComputeRoc(scores, truth));
    EXPECT_EQ(roc.points.front().fpr, 0.0);
    EXPECT_EQ(roc.points.front().tpr, 0.0);
    EXPECT_DOUBLE_EQ(roc.points.back().fpr, 1.0);
    EXPECT_DOUBLE_EQ(roc.points.back().tpr, 1.0);
    for (size_t i = 1; i < roc.points.size(); ++i) {
      EXPECT_GE(roc.points[i].fpr, roc.points[i - 1].fpr);
      EXPECT_GE(roc.points[i].tpr, roc.points[i - 1].tpr);
      EXPECT_LT(roc.points[i].threshold, roc.points[i - 1].threshold);
    }
    EXPECT_GE(roc.auc, 0.0);
    EXPECT_LE(roc.auc, 1.0);
    EXPECT_NEAR(roc.auc, oracle::PairwiseAuc(scores, truth), 1e-12) << "trial " << trial;
  }
}

TEST(RocTest, RejectsDegenerateInputs) {
  EXPECT_EQ(CodeOf(ComputeRoc(std::vector<double>{1, 2}, {true, true})),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(CodeOf(ComputeRoc(std::vector<double>{1}, {true, false})),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(CodeOf(ComputeRoc(std::vector<double>{NAN, 1}, {true, false})),
            absl::StatusCode::kInvalidArgument);
}

TEST(TprAtFprTest, TakesBestPointWithinBudget) {
  ASSERT_OK_AND_ASSIGN(
      const RocCurve roc,
      ComputeRoc(std::vector<double>{0.9, 0.8, 0.7, 0.6, 0.5, 0.4},
                 {true, false, true, true, false, false}));
  const std::vector<TprAtFpr> table = TprAtFprTable(roc, std::vector<double>{0.0, 0.34, 0.5, 1.0});
  ASSERT_EQ(table.size(), 4u);
  EXPECT_DOUBLE_EQ(table[0].tpr, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(table[0].fpr, 0.0);
  EXPECT_DOUBLE_EQ(table[1].tpr, 1.0);
  EXPECT_DOUBLE_EQ(table[1].fpr, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(table[2].tpr, 1.0);
  EXPECT_DOUBLE_EQ(table[3].tpr, 1.0);
  for (const TprAtFpr& row : table) EXPECT_LE(row.fpr, row.fpr_target);
  EXPECT_EQ(DefaultFprGrid().size(), 9u);
}

TEST(NormalizeTest, MinMax) {
  EXPECT_EQ(NormalizeMinMax(std::vector<double>{2, 4, 3}), (std::vector<double>{0, 1, 0.5}));
  EXPECT_EQ(NormalizeMinMax(std::vector<double>{5, 5}), (std::vector<double>{0, 0}));
  EXPECT_TRUE(NormalizeMinMax(std::vector<double>{}).empty());
}

MembershipVerdict Says(bool member) { return MembershipVerdict{member, 1.0, 1.0}; }

TEST(BucketReportTest, PerLevelAccuracyIncludesThePool) {
  BucketInputs in;
  in.member_verdicts = {Says(true), Says(false), Says(true)};
  in.member_levels = {0, 0, 2};
  in.member_likelihood = {0.9, 0.3, 0.8};
  in.member_loss = {0.0, 1.0, 0.5};
  in.pool_verdicts = {Says(false), Says(true)};
  in.pool_likelihood = {0.2, 0.6};
  in.pool_loss = {2.0, 1.5};
  ASSERT_OK_AND_ASSIGN(const BucketReport r, ComputeBucketReport(in, 3, 4));
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.rows[0].member_count, 2);
  EXPECT_DOUBLE_EQ(*r.rows[0].accuracy, 2.0 / 4.0);
  EXPECT_DOUBLE_EQ(*r.rows[0].member_likelihood, 0.6);
  EXPECT_FALSE(r.rows[1].accuracy.has_value());
  EXPECT_FALSE(r.rows[1].member_likelihood.has_value());
  EXPECT_DOUBLE_EQ(*r.rows[2].accuracy, 2.0 / 3.0);
  for (const BucketRow& row : r.rows) EXPECT_DOUBLE_EQ(row.pool_likelihood, 0.4);
  EXPECT_EQ(r.member_loss.min, 0.0);
  EXPECT_EQ(r.member_loss.max, 2.0);
  EXPECT_EQ(r.member_loss.counts, (std::vector<int>{1, 1, 1, 0}));
  EXPECT_EQ(r.non_member_loss.counts, (std::vector<int>{0, 0, 0, 2}));
}

TEST(BucketReportTest, AllCorrectGivesFullAccuracyEverywhere) {
  BucketInputs in;
  for (int level = 0; level < 10; ++level) {
    in.member_verdicts.push_back(Says(true));
    in.member_levels.push_back(level);
    in.member_likelihood.push_back(0.9);
    in.member_loss.push_back(0.1 * level);
  }
  in.pool_verdicts.assign(4, Says(false));
  in.pool_likelihood.assign(4, 0.1);
  in.pool_loss.assign(4, 2.0);
  ASSERT_OK_AND_ASSIGN(const BucketReport r, ComputeBucketReport(in));
  for (const BucketRow& row : r.rows) EXPECT_EQ(*row.accuracy, 1.0);
}

TEST(BucketReportTest, MissedMembersLeaveOnlyThePool) {
  BucketInputs in;
  in.member_verdicts = {Says(false), Says(false), Says(false)};
  in.member_levels = {4, 4, 4};
  in.member_likelihood = {0.2, 0.2, 0.2};
  in.member_loss = {1, 1, 1};
  in.pool_verdicts.assign(5, Says(false));
  in.pool_likelihood.assign(5, 0.1);
  in.pool_loss.assign(5, 2.0);
  ASSERT_OK_AND_ASSIGN(const BucketReport r, ComputeBucketReport(in));
  EXPECT_DOUBLE_EQ(*r.rows[4].accuracy, 5.0 / 8.0);
}

TEST(BucketReportTest, RejectsInconsistentInputs) {
  BucketInputs in;
  in.member_verdicts = {Says(true)};
  in.member_levels = {10};
  in.member_likelihood = {0.5};
  in.member_loss = {0.5};
  in.pool_verdicts = {Says(false)};
  in.pool_likelihood = {0.5};
  in.pool_loss = {0.5};
  EXPECT_EQ(CodeOf(ComputeBucketReport(in)), absl::StatusCode::kInvalidArgument);
  in.member_levels = {9};
  EXPECT_OK(ComputeBucketReport(in).status());
  in.pool_loss.clear();
  EXPECT_EQ(CodeOf(ComputeBucketReport(in)), absl::StatusCode::kInvalidArgument);
}

}  // namespace
}  // namespace clpriv
