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

#include "clpriv/data.h"

#include <algorithm>
#include <set>
#include <vector>

#include "gtest/gtest.h"
#include "test_util.h"

namespace clpriv {
namespace {

using ::clpriv::testing::CodeOf;

TEST(CsvLoadTest, InfersClassCount) {
  ASSERT_OK_AND_ASSIGN(const Dataset d,
                       ParseCsv("f0,f1,label\n1,0,0\n0,1,1\n1,1,0\n", {"label", {}}));
  EXPECT_EQ(d.size(), 3);
  EXPECT_EQ(d.dim(), 2);
  EXPECT_EQ(d.class_count, 2);
  EXPECT_EQ(d.labels, (std::vector<int>{0, 1, 0}));
  EXPECT_EQ(d.features(1, 1), 1.0);
  EXPECT_FALSE(d.has_sensitive());
}

TEST(CsvLoadTest, ReadsSensitiveColumn) {
  ASSERT_OK_AND_ASSIGN(const Dataset d,
                       ParseCsv("s,f0,y\n2,0.5,1\n0,0.25,0\n", {"y", std::string("s")}));
  ASSERT_TRUE(d.has_sensitive());
  EXPECT_EQ(*d.sensitive, (std::vector<int>{2, 0}));
  EXPECT_EQ(d.sensitive_count, 3);
  EXPECT_EQ(d.dim(), 1);
  EXPECT_EQ(d.features(0, 0), 0.5);
}

TEST(CsvLoadTest, PurchaseShapedTable) {
  std::string csv;
  for (int c = 0; c < 600; ++c) csv += "f" + std::to_string(c) + ",";
  csv += "label\n";
  for (int r = 0; r < 100; ++r) {
    for (int c = 0; c < 600; ++c) csv += ((r + c) % 2 ? "1," : "0,");
    csv += std::to_string(r) + "\n";
  }
  ASSERT_OK_AND_ASSIGN(const Dataset d, ParseCsv(csv, {"label", {}}));
  EXPECT_EQ(d.dim(), 600);
  EXPECT_EQ(d.class_count, 100);
}

TEST(CsvLoadTest, ErrorsNameTheProblem) {
  const auto missing = ParseCsv("a,b\n1,2\n", {"label", {}});
  EXPECT_EQ(CodeOf(missing), absl::StatusCode::kInvalidArgument);
  EXPECT_NE(missing.status().message().find("label"), std::string::npos);
  const auto bad_cell = ParseCsv("a,label\n1,0\nx,1\n", {"label", {}});
  EXPECT_EQ(CodeOf(bad_cell), absl::StatusCode::kInvalidArgument);
  EXPECT_NE(bad_cell.status().message().find("row 2"), std::string::npos);
  EXPECT_EQ(CodeOf(ParseCsv("", {"label", {}})), absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(CodeOf(ParseCsv("a,label\n", {"label", {}})), absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(CodeOf(ParseCsv("a,label\n1,-1\n", {"label", {}})),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(CodeOf(LoadCsv("/nonexistent/file.csv", {"label", {}})),
            absl::StatusCode::kNotFound);
}

TEST(SplitTest, EqualThirdsOnNine) {
  ASSERT_OK_AND_ASSIGN(const Splits s, SplitIndices(9, SplitPlan::EqualThirds(1)));
  for (const SplitName name :
       {SplitName::kTargetTrain, SplitName::kShadowTrain, SplitName::kTest}) {
    EXPECT_EQ(s.at(name).size(), 3u);
  }
}

TEST(SplitTest, RemainderGoesToEarliestSplits) {
  ASSERT_OK_AND_ASSIGN(const Splits s, SplitIndices(11, SplitPlan::EqualThirds(1)));
  EXPECT_EQ(s.at(SplitName::kTargetTrain).size(), 4u);
  EXPECT_EQ(s.at(SplitName::kShadowTrain).size(), 4u);
  EXPECT_EQ(s.at(SplitName::kTest).size(), 3u);
}

TEST(SplitTest, FiveWayOnSixtyThousand) {
  ASSERT_OK_AND_ASSIGN(const Splits s, SplitIndices(60000, SplitPlan::EqualFifths(3)));
  for (const SplitName name : kAllSplitNames) EXPECT_EQ(s.at(name).size(), 12000u);
}

TEST(SplitTest, DisjointCoveringAndSeeded) {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const int n = 97 + static_cast<int>(seed);
    ASSERT_OK_AND_ASSIGN(const Splits a, SplitIndices(n, SplitPlan::EqualFifths(seed)));
    ASSERT_OK_AND_ASSIGN(const Splits b, SplitIndices(n, SplitPlan::EqualFifths(seed)));
    std::vector<int> all;
    for (const auto& [name, rows] : a.indices) {
      EXPECT_EQ(rows, b.at(name));
      all.insert(all.end(), rows.begin(), rows.end());
    }
    std::sort(all.begin(), all.end());
    ASSERT_EQ(static_cast<int>(all.size()), n);
    for (int i = 0; i < n; ++i) EXPECT_EQ(all[i], i);
  }
  ASSERT_OK_AND_ASSIGN(const Splits c, SplitIndices(30, SplitPlan::EqualThirds(1)));
  ASSERT_OK_AND_ASSIGN(const Splits d, SplitIndices(30, SplitPlan::EqualThirds(2)));
  EXPECT_NE(c.at(SplitName::kTest), d.at(SplitName::kTest));
}

TEST(SplitTest, RejectsBadPlans) {
  SplitPlan plan{{{SplitName::kTargetTrain, 0.5}, {SplitName::kTest, 0.4}}, 1};
  EXPECT_EQ(CodeOf(SplitIndices(10, plan)), absl::StatusCode::kFailedPrecondition);
  EXPECT_EQ(CodeOf(SplitIndices(2, SplitPlan::EqualThirds(1))),
            absl::StatusCode::kFailedPrecondition);
  plan = {{{SplitName::kTest, 0.5}, {SplitName::kTest, 0.5}}, 1};
  EXPECT_EQ(CodeOf(SplitIndices(10, plan)), absl::StatusCode::kFailedPrecondition);
}

TEST(SplitTest, ManifestListsEverySample) {
  ASSERT_OK_AND_ASSIGN(const Splits s, SplitIndices(6, SplitPlan::EqualThirds(1)));
  const std::string manifest = SplitManifestCsv(s);
  EXPECT_EQ(manifest.rfind("split_name,sample_index\n", 0), 0u);
  EXPECT_EQ(std::count(manifest.begin(), manifest.end(), '\n'), 7);
}

SynthParams SmallSynth() {
  SynthParams p;
  p.n = 300;
  p.dim = 40;
  p.class_count = 6;
  p.seed = 4;
  return p;
}

TEST(SynthTest, NoNoiseReproducesPrototypes) {
  SynthParams p = SmallSynth();
  p.flip_noise = 0.0;
  p.cluster_spread = 0.0;
  ASSERT_OK_AND_ASSIGN(const Dataset d, SynthTabular(p));
  for (int c = 0; c < p.class_count; ++c) {
    int first = -1;
    for (int i = 0; i < d.size(); ++i) {
      if (d.labels[i] != c) continue;
      if (first < 0) {
        first = i;
        continue;
      }
      EXPECT_EQ(d.features.col(i), d.features.col(first));
    }
  }
  ASSERT_OK_AND_ASSIGN(Network net, Network::Create({40, 16, 6}, 1));
  TrainConfig c;
  c.epochs = 30;
  c.batch_size = 16;
  ASSERT_OK_AND_ASSIGN(const TrainResult r, Train(std::move(net), d.features, d.labels, c));
  EXPECT_EQ(Accuracy(r.network, d.features, d.labels).value(), 1.0);
}

TEST(SynthTest, BinaryFeaturesAndValidLabels) {
  ASSERT_OK_AND_ASSIGN(const Dataset d, SynthTabular(SmallSynth()));
  EXPECT_OK(d.Validate());
  EXPECT_TRUE(((d.features.array() == 0.0) || (d.features.array() == 1.0)).all());
  std::set<int> classes(d.labels.begin(), d.labels.end());
  EXPECT_EQ(classes.size(), 6u);
}

TEST(SynthTest, SameSeedSameDataset) {
  ASSERT_OK_AND_ASSIGN(const Dataset a, SynthTabular(SmallSynth()));
  ASSERT_OK_AND_ASSIGN(const Dataset b, SynthTabular(SmallSynth()));
  SynthParams other = SmallSynth();
  other.seed = 5;
  ASSERT_OK_AND_ASSIGN(const Dataset c, SynthTabular(other));
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(a.features, c.features);
}

TEST(SynthTest, SensitiveBlockCarriesTheAttribute) {
  SynthParams p = SmallSynth();
  p.sensitive_count = 3;
  p.sensitive_block = 10;
  ASSERT_OK_AND_ASSIGN(const Dataset d, SynthTabular(p));
  ASSERT_TRUE(d.has_sensitive());
  EXPECT_EQ(d.sensitive_count, 3);
  // Nearest centroid on the sensitive block alone recovers the attribute.
  Matrix centroid = Matrix::Zero(10, 3);
  std::vector<int> count(3, 0);
  for (int i = 0; i < d.size(); ++i) {
    centroid.col((*d.sensitive)[i]) += d.features.col(i).tail(10);
    ++count[(*d.sensitive)[i]];
  }
  for (int s = 0; s < 3; ++s) centroid.col(s) /= std::max(1, count[s]);
  int hits = 0;
  for (int i = 0; i < d.size(); ++i) {
    Eigen::Index best = 0;
    (centroid.colwise() - d.features.col(i).tail(10)).colwise().squaredNorm().minCoeff(&best);
    hits += best == (*d.sensitive)[i] ? 1 : 0;
  }
  EXPECT_GT(hits, 0.8 * d.size());
}

TEST(SynthTest, RejectsInvalidParams) {
  SynthParams p = SmallSynth();
  p.class_count = p.n + 1;
  EXPECT_EQ(CodeOf(SynthTabular(p)), absl::StatusCode::kFailedPrecondition);
  p = SmallSynth();
  p.flip_noise = 1.5;
  EXPECT_EQ(CodeOf(SynthTabular(p)), absl::StatusCode::kFailedPrecondition);
  p = SmallSynth();
  p.sensitive_count = 2;
  p.sensitive_block = 0;
  EXPECT_EQ(CodeOf(SynthTabular(p)), absl::StatusCode::kFailedPrecondition);
}

std::vector<int> IdentityRanks(int n) {
  std::vector<int> r(n);
  for (int i = 0; i < n; ++i) r[i] = i + 1;
  return r;
}

TEST(BucketizeTest, TenLevelsOnHundred) {
  ASSERT_OK_AND_ASSIGN(const std::vector<int> levels, Bucketize(IdentityRanks(100)));
  for (int i = 0; i < 10; ++i) EXPECT_EQ(levels[i], 0);
  EXPECT_EQ(levels[99], 9);
}

TEST(BucketizeTest, UnevenBandsDifferByAtMostOne) {
  ASSERT_OK_AND_ASSIGN(const std::vector<int> levels, Bucketize(IdentityRanks(25)));
  std::vector<int> sizes(10, 0);
  for (const int l : levels) ++sizes[l];
  EXPECT_EQ(sizes, (std::vector<int>{3, 3, 3, 3, 3, 2, 2, 2, 2, 2}));
}

TEST(BucketizeTest, FollowsRanksNotIndices) {
  ASSERT_OK_AND_ASSIGN(const std::vector<int> levels, Bucketize(std::vector<int>{4, 1, 3, 2}, 2));
  EXPECT_EQ(levels, (std::vector<int>{1, 0, 1, 0}));
}

TEST(BucketizeTest, RejectsTooManyLevelsAndBadRanks) {
  EXPECT_EQ(CodeOf(Bucketize(IdentityRanks(5), 10)), absl::StatusCode::kFailedPrecondition);
  EXPECT_EQ(CodeOf(Bucketize(std::vector<int>{1, 1, 2}, 2)), absl::StatusCode::kInvalidArgument);
}

TEST(MostDifficultTest, TakesTopFractionByRank) {
  const std::vector<int> ranks = {5, 1, 4, 2, 3, 6, 8, 7, 10, 9};
  ASSERT_OK_AND_ASSIGN(const std::vector<int> hard, MostDifficultByRank(ranks, 0.2));
  std::vector<int> sorted = hard;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<int>{8, 9}));
  ASSERT_OK_AND_ASSIGN(const std::vector<int> four, MostDifficultByRank(IdentityRanks(20000), 0.04));
  EXPECT_EQ(four.size(), 800u);
}

}  // namespace
}  // namespace clpriv
