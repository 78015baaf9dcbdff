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

#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "clpriv/checkpoint.h"
#include "clpriv/csv.h"
#include "clpriv/random.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace clpriv {
namespace {

using ::clpriv::testing::CodeOf;

TEST(CsvTest, TableLayout) {
  CsvTable t({"a", "b"});
  t.AddRow({"1", "x"});
  t.AddRow({"2", ""});
  EXPECT_EQ(t.ToString(), "a,b\n1,x\n2,\n");
  EXPECT_EQ(CsvTable({"only"}).ToString(), "only\n");
}

TEST(CsvTest, SplitTrimsCells) {
  EXPECT_EQ(SplitCsvLine(" 1, two ,\t3\r"), (std::vector<std::string>{"1", "two", "3"}));
  EXPECT_EQ(SplitCsvLine(",,"), (std::vector<std::string>{"", "", ""}));
  EXPECT_EQ(SplitCsvLine(""), (std::vector<std::string>{""}));
}

TEST(CsvTest, FormatDoubleRoundTrips) {
  for (const double v : {0.0, 0.1, 1.0 / 3.0, -2.5e-300, 12345678.9}) {
    EXPECT_EQ(std::stod(FormatDouble(v)), v);
  }
  EXPECT_EQ(FormatDouble(0.5), "0.5");
  EXPECT_EQ(FormatDouble(3.0), "3");
}

TEST(FileTest, AtomicWriteThenRead) {
  const std::string path = ::testing::TempDir() + "/clpriv_io_test.txt";
  ASSERT_OK(WriteFileAtomically(path, "first"));
  ASSERT_OK(WriteFileAtomically(path, "second"));
  ASSERT_OK_AND_ASSIGN(const std::string back, ReadFile(path));
  EXPECT_EQ(back, "second");
  EXPECT_FALSE(std::filesystem::exists(path + ".tmp"));
  std::filesystem::remove(path);
  EXPECT_EQ(CodeOf(ReadFile(path)), absl::StatusCode::kNotFound);
  EXPECT_EQ(CodeOf(WriteFileAtomically("/nonexistent-dir/x.txt", "y")),
            absl::StatusCode::kPermissionDenied);
}

TEST(CheckpointTest, BitExactRoundTrip) {
  ASSERT_OK_AND_ASSIGN(const Network net, Network::Create({5, 7, 4, 3}, 12));
  const std::string bytes = SerializeNetwork(net);
  ASSERT_OK_AND_ASSIGN(const Network back, DeserializeNetwork(bytes));
  EXPECT_TRUE(back.BitwiseEquals(net));
  EXPECT_EQ(SerializeNetwork(back), bytes);

  const std::string path = ::testing::TempDir() + "/clpriv_ckpt_test.clpnn";
  ASSERT_OK(SaveNetwork(net, path));
  ASSERT_OK_AND_ASSIGN(const Network loaded, LoadNetwork(path));
  EXPECT_TRUE(loaded.BitwiseEquals(net));
  std::filesystem::remove(path);
  EXPECT_EQ(CodeOf(LoadNetwork(path)), absl::StatusCode::kNotFound);
}

TEST(CheckpointTest, CorruptInputsAreRejected) {
  ASSERT_OK_AND_ASSIGN(const Network net, Network::Create({2, 3, 2}, 1));
  const std::string bytes = SerializeNetwork(net);
  EXPECT_EQ(CodeOf(DeserializeNetwork("not a checkpoint")), absl::StatusCode::kDataLoss);
  EXPECT_EQ(CodeOf(DeserializeNetwork(bytes.substr(0, bytes.size() - 1))),
            absl::StatusCode::kDataLoss);
  EXPECT_EQ(CodeOf(DeserializeNetwork(bytes + "x")), absl::StatusCode::kDataLoss);
  std::string future = bytes;
  future[8] = static_cast<char>(kCheckpointVersion + 1);
  EXPECT_EQ(CodeOf(DeserializeNetwork(future)), absl::StatusCode::kUnimplemented);
}

TEST(RandomTest, DeriveSeedSeparatesStreams) {
  std::set<uint64_t> seen;
  for (uint64_t base = 0; base < 20; ++base) {
    for (uint64_t stream = kStreamData; stream <= kStreamTarget; ++stream) {
      EXPECT_TRUE(seen.insert(DeriveSeed(base, stream)).second);
    }
  }
  EXPECT_EQ(DeriveSeed(7, kStreamInit), DeriveSeed(7, kStreamInit));
}

TEST(RandomTest, PermutationIsAPermutation) {
  Rng rng(3);
  std::vector<int> p = RandomPermutation(100, rng);
  std::sort(p.begin(), p.end());
  for (int i = 0; i < 100; ++i) EXPECT_EQ(p[i], i);
  EXPECT_TRUE(RandomPermutation(0, rng).empty());
}

TEST(RandomTest, UniformDrawsStayInRangeAndLookUniform) {
  Rng rng(4);
  std::vector<int> counts(7, 0);
  const int draws = 70000;
  for (int i = 0; i < draws; ++i) {
    const uint64_t v = UniformIndex(7, rng);
    ASSERT_LT(v, 7u);
    ++counts[v];
    const double u = UniformUnit(rng);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
  for (const int c : counts) EXPECT_NEAR(c, draws / 7, 500);
}

TEST(RandomTest, GaussianMoments) {
  Rng rng(5);
  GaussianSampler g;
  const int n = 200000;
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = g.Next(rng);
    sum += x;
    sq += x * x;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

}  // namespace
}  // namespace clpriv
