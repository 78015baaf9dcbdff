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

// Tabular datasets: CSV ingestion, synthetic generation, seeded disjoint
// splits and rank-based difficulty bands.

#ifndef CLPRIV_DATA_H_
#define CLPRIV_DATA_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "clpriv/nn.h"

namespace clpriv {

struct Dataset {
  Matrix features;  // dim x N: one column per sample
  std::vector<int> labels;
  std::optional<std::vector<int>> sensitive;
  int class_count = 0;
  int sensitive_count = 0;

  int size() const { return static_cast<int>(labels.size()); }
  int dim() const { return static_cast<int>(features.rows()); }
  bool has_sensitive() const { return sensitive.has_value(); }

  absl::Status Validate() const;
  // Rows in the order given; class counts are kept from the parent.
  Dataset Subset(std::span<const int> indices) const;
};

struct CsvSchema {
  std::string label_column;
  std::optional<std::string> sensitive_column;
};

// Every non-label, non-sensitive column becomes a feature. Class counts are
// inferred as max id + 1.
absl::StatusOr<Dataset> ParseCsv(const std::string& contents,
                                 const CsvSchema& schema);
absl::StatusOr<Dataset> LoadCsv(const std::string& path,
                                const CsvSchema& schema);

enum class SplitName { kTargetTrain, kShadowTrain, kTest, kReference1, kReference2 };

inline constexpr std::array<SplitName, 5> kAllSplitNames = {
    SplitName::kTargetTrain, SplitName::kShadowTrain, SplitName::kTest,
    SplitName::kReference1, SplitName::kReference2};

std::string SplitNameString(SplitName name);
absl::StatusOr<SplitName> ParseSplitName(const std::string& name);

struct SplitPlan {
  // Partition order follows this list; names with fraction 0 are omitted.
  std::vector<std::pair<SplitName, double>> fractions;
  uint64_t seed = 0;

  absl::Status Validate() const;

  // target_train / shadow_train / test in equal thirds.
  static SplitPlan EqualThirds(uint64_t seed);
  // All five named splits in equal fifths.
  static SplitPlan EqualFifths(uint64_t seed);
};

struct Splits {
  std::map<SplitName, std::vector<int>> indices;

  bool contains(SplitName name) const { return indices.count(name) > 0; }
  const std::vector<int>& at(SplitName name) const { return indices.at(name); }
};

// Seeded shuffle followed by a contiguous partition. Each split gets
// floor(fraction * n) rows; leftover rows go one each to the earliest splits.
absl::StatusOr<Splits> SplitIndices(int n, const SplitPlan& plan);
absl::StatusOr<Splits> Split(const Dataset& dataset, const SplitPlan& plan);

// CSV with columns split_name,sample_index.
std::string SplitManifestCsv(const Splits& splits);

struct SynthParams {
  int n = 1000;
  int dim = 600;
  int class_count = 100;
  // Class prototypes are uniform random bit vectors. Each sample also draws
  // one other "confuser" class, and every feature is copied from the
  // confuser's prototype with this probability instead of its own class's.
  // Values near 0.5 make classes overlap heavily.
  double cluster_spread = 0.48;
  // Per-sample independent bit-flip rate applied to the prototype.
  double flip_noise = 0.1;
  // When sensitive_count > 0, the last `sensitive_block` features carry a
  // sensitive attribute instead of class information.
  int sensitive_count = 0;
  int sensitive_block = 0;
  uint64_t seed = 0;

  absl::Status Validate() const;
};

// Binary tabular data: each class has a random binary prototype; each sample
// is its prototype with independent bit flips. Labels cycle 0..K-1.
absl::StatusOr<Dataset> SynthTabular(const SynthParams& params);

// Maps 1-based ranks to difficulty levels 0..n_levels-1 using equal
// contiguous rank bands (earliest bands take the remainder). `ranks[i]` is the
// rank of sample i and must be a permutation of 1..N.
absl::StatusOr<std::vector<int>> Bucketize(std::span<const int> ranks,
                                           int n_levels = 10);

// Indices of the floor(fraction * N) samples with the largest ranks, ordered
// from least to most difficult.
absl::StatusOr<std::vector<int>> MostDifficultByRank(std::span<const int> ranks,
                                                     double fraction);

}  // namespace clpriv

#endif  // CLPRIV_DATA_H_
