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
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "absl/strings/str_cat.h"
#include "clpriv/csv.h"
#include "clpriv/random.h"
#include "clpriv/status_macros.h"

namespace clpriv {
namespace {

absl::StatusOr<double> ParseCell(const std::string& cell, int row,
                                 const std::string& column) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  const auto result = std::from_chars(begin, end, value);
  if (cell.empty() || result.ec != std::errc() || result.ptr != end ||
      !std::isfinite(value)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "row ", row, ", column '", column, "': non-numeric cell '", cell, "'"));
  }
  return value;
}

absl::StatusOr<int> ParseId(const std::string& cell, int row,
                            const std::string& column) {
  ASSIGN_OR_RETURN(const double value, ParseCell(cell, row, column));
  if (value < 0 || value != std::floor(value) || value > 1e9) {
    return absl::InvalidArgumentError(
        absl::StrCat("row ", row, ", column '", column,
                     "': expected a non-negative integer id, got '", cell, "'"));
  }
  return static_cast<int>(value);
}

}  // namespace

absl::Status Dataset::Validate() const {
  if (labels.empty()) return absl::InvalidArgumentError("dataset is empty");
  if (features.cols() != static_cast<Eigen::Index>(labels.size())) {
    return absl::InvalidArgumentError("feature/label count mismatch");
  }
  if (!features.allFinite()) {
    return absl::InvalidArgumentError("features contain NaN or infinity");
  }
  for (const int y : labels) {
    if (y < 0 || y >= class_count) {
      return absl::InvalidArgumentError(
          absl::StrCat("label ", y, " outside [0, ", class_count, ")"));
    }
  }
  if (sensitive.has_value()) {
    if (sensitive->size() != labels.size()) {
      return absl::InvalidArgumentError("sensitive attribute count mismatch");
    }
    for (const int s : *sensitive) {
      if (s < 0 || s >= sensitive_count) {
        return absl::InvalidArgumentError(absl::StrCat(
            "sensitive id ", s, " outside [0, ", sensitive_count, ")"));
      }
    }
  }
  return absl::OkStatus();
}

Dataset Dataset::Subset(std::span<const int> indices) const {
  Dataset out;
  GatherColumns(features, indices, out.features);
  out.labels.reserve(indices.size());
  for (const int i : indices) out.labels.push_back(labels[i]);
  if (sensitive.has_value()) {
    out.sensitive.emplace();
    out.sensitive->reserve(indices.size());
    for (const int i : indices) out.sensitive->push_back((*sensitive)[i]);
  }
  out.class_count = class_count;
  out.sensitive_count = sensitive_count;
  return out;
}

absl::StatusOr<Dataset> ParseCsv(const std::string& contents,
                                 const CsvSchema& schema) {
  std::istringstream in(contents);
  std::string line;
  if (!std::getline(in, line) || SplitCsvLine(line) == std::vector<std::string>{""}) {
    return absl::InvalidArgumentError("CSV is empty (missing header)");
  }
  const std::vector<std::string> header = SplitCsvLine(line);
  int label_col = -1;
  int sensitive_col = -1;
  for (size_t c = 0; c < header.size(); ++c) {
    if (header[c] == schema.label_column) label_col = static_cast<int>(c);
    if (schema.sensitive_column && header[c] == *schema.sensitive_column) {
      sensitive_col = static_cast<int>(c);
    }
  }
  if (label_col < 0) {
    return absl::InvalidArgumentError(
        absl::StrCat("missing label column '", schema.label_column, "'"));
  }
  if (schema.sensitive_column && sensitive_col < 0) {
    return absl::InvalidArgumentError(absl::StrCat(
        "missing sensitive column '", *schema.sensitive_column, "'"));
  }
  std::vector<int> feature_cols;
  for (int c = 0; c < static_cast<int>(header.size()); ++c) {
    if (c != label_col && c != sensitive_col) feature_cols.push_back(c);
  }

  std::vector<std::vector<double>> rows;
  Dataset out;
  if (sensitive_col >= 0) out.sensitive.emplace();
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> cells = SplitCsvLine(line);
    if (cells.size() != header.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("row ", row, ": expected ", header.size(),
                       " cells, found ", cells.size()));
    }
    ASSIGN_OR_RETURN(const int label,
                     ParseId(cells[label_col], row, header[label_col]));
    out.labels.push_back(label);
    if (sensitive_col >= 0) {
      ASSIGN_OR_RETURN(const int s, ParseId(cells[sensitive_col], row,
                                            header[sensitive_col]));
      out.sensitive->push_back(s);
    }
    std::vector<double> values;
    values.reserve(feature_cols.size());
    for (const int c : feature_cols) {
      ASSIGN_OR_RETURN(const double v, ParseCell(cells[c], row, header[c]));
      values.push_back(v);
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) return absl::InvalidArgumentError("CSV has no data rows");

  out.features.resize(static_cast<Eigen::Index>(feature_cols.size()),
                      static_cast<Eigen::Index>(rows.size()));
  for (size_t r = 0; r < rows.size(); ++r) {
    for (size_t c = 0; c < feature_cols.size(); ++c) {
      out.features(c, r) = rows[r][c];
    }
  }
  out.class_count = *std::max_element(out.labels.begin(), out.labels.end()) + 1;
  if (out.sensitive.has_value()) {
    out.sensitive_count =
        *std::max_element(out.sensitive->begin(), out.sensitive->end()) + 1;
  }
  RETURN_IF_ERROR(out.Validate());
  return out;
}

absl::StatusOr<Dataset> LoadCsv(const std::string& path,
                                const CsvSchema& schema) {
  ASSIGN_OR_RETURN(const std::string contents, ReadFile(path));
  return ParseCsv(contents, schema);
}

std::string SplitNameString(SplitName name) {
  switch (name) {
    case SplitName::kTargetTrain:
      return "target_train";
    case SplitName::kShadowTrain:
      return "shadow_train";
    case SplitName::kTest:
      return "test";
    case SplitName::kReference1:
      return "reference_1";
    case SplitName::kReference2:
      return "reference_2";
  }
  return "unknown";
}

absl::StatusOr<SplitName> ParseSplitName(const std::string& name) {
  for (const SplitName candidate : kAllSplitNames) {
    if (SplitNameString(candidate) == name) return candidate;
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown split '", name, "'"));
}

absl::Status SplitPlan::Validate() const {
  if (fractions.empty()) {
    return absl::FailedPreconditionError("split plan has no splits");
  }
  double total = 0.0;
  std::vector<SplitName> seen;
  for (const auto& [name, fraction] : fractions) {
    if (!(fraction >= 0.0) || fraction > 1.0) {
      return absl::FailedPreconditionError(absl::StrCat(
          "fraction for ", SplitNameString(name), " must be in [0, 1]"));
    }
    if (std::find(seen.begin(), seen.end(), name) != seen.end()) {
      return absl::FailedPreconditionError(
          absl::StrCat("split ", SplitNameString(name), " listed twice"));
    }
    seen.push_back(name);
    total += fraction;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    return absl::FailedPreconditionError(
        absl::StrCat("split fractions sum to ", total, ", expected 1"));
  }
  return absl::OkStatus();
}

SplitPlan SplitPlan::EqualThirds(uint64_t seed) {
  return SplitPlan{{{SplitName::kTargetTrain, 1.0 / 3},
                    {SplitName::kShadowTrain, 1.0 / 3},
                    {SplitName::kTest, 1.0 / 3}},
                   seed};
}

SplitPlan SplitPlan::EqualFifths(uint64_t seed) {
  SplitPlan plan{{}, seed};
  for (const SplitName name : kAllSplitNames) {
    plan.fractions.emplace_back(name, 0.2);
  }
  return plan;
}

absl::StatusOr<Splits> SplitIndices(int n, const SplitPlan& plan) {
  RETURN_IF_ERROR(plan.Validate());
  std::vector<std::pair<SplitName, double>> active;
  for (const auto& entry : plan.fractions) {
    if (entry.second > 0.0) active.push_back(entry);
  }
  std::vector<int> sizes;
  int assigned = 0;
  for (const auto& [name, fraction] : active) {
    const int size = static_cast<int>(std::floor(fraction * n + 1e-9));
    sizes.push_back(size);
    assigned += size;
  }
  for (size_t i = 0; assigned < n; i = (i + 1) % sizes.size()) {
    ++sizes[i];
    ++assigned;
  }
  for (size_t i = 0; i < active.size(); ++i) {
    if (sizes[i] == 0) {
      return absl::FailedPreconditionError(
          absl::StrCat("split ", SplitNameString(active[i].first),
                       " would be empty for n=", n));
    }
  }
  Rng rng(DeriveSeed(plan.seed, kStreamSplit));
  const std::vector<int> perm = RandomPermutation(n, rng);
  Splits splits;
  int offset = 0;
  for (size_t i = 0; i < active.size(); ++i) {
    splits.indices[active[i].first] =
        std::vector<int>(perm.begin() + offset, perm.begin() + offset + sizes[i]);
    offset += sizes[i];
  }
  return splits;
}

absl::StatusOr<Splits> Split(const Dataset& dataset, const SplitPlan& plan) {
  return SplitIndices(dataset.size(), plan);
}

std::string SplitManifestCsv(const Splits& splits) {
  CsvTable table({"split_name", "sample_index"});
  for (const SplitName name : kAllSplitNames) {
    if (!splits.contains(name)) continue;
    for (const int index : splits.at(name)) {
      table.AddRow({SplitNameString(name), absl::StrCat(index)});
    }
  }
  return table.ToString();
}

absl::Status SynthParams::Validate() const {
  if (n < 1 || dim < 1 || class_count < 1) {
    return absl::FailedPreconditionError("n, dim and class_count must be >= 1");
  }
  if (class_count > n) {
    return absl::FailedPreconditionError("class_count must not exceed n");
  }
  if (!(cluster_spread >= 0.0 && cluster_spread <= 1.0) ||
      !(flip_noise >= 0.0 && flip_noise <= 1.0)) {
    return absl::FailedPreconditionError(
        "cluster_spread and flip_noise must be in [0, 1]");
  }
  if (sensitive_count < 0 || sensitive_block < 0) {
    return absl::FailedPreconditionError("sensitive parameters must be >= 0");
  }
  if (sensitive_count > 0 && (sensitive_block < 1 || sensitive_block >= dim)) {
    return absl::FailedPreconditionError(
        "sensitive_block must be in [1, dim) when sensitive_count > 0");
  }
  if (sensitive_count == 0 && sensitive_block != 0) {
    return absl::FailedPreconditionError(
        "sensitive_block requires sensitive_count > 0");
  }
  return absl::OkStatus();
}

absl::StatusOr<Dataset> SynthTabular(const SynthParams& params) {
  RETURN_IF_ERROR(params.Validate());
  Rng rng(DeriveSeed(params.seed, kStreamData));
  auto bit = [&rng](double p) { return UniformUnit(rng) < p ? 1.0 : 0.0; };

  const int class_dims = params.dim - params.sensitive_block;
  Matrix prototypes(class_dims, params.class_count);
  for (int k = 0; k < params.class_count; ++k) {
    for (int j = 0; j < class_dims; ++j) prototypes(j, k) = bit(0.5);
  }
  Matrix sensitive_prototypes(params.sensitive_block, params.sensitive_count);
  for (int s = 0; s < params.sensitive_count; ++s) {
    for (int j = 0; j < params.sensitive_block; ++j) {
      sensitive_prototypes(j, s) = bit(0.5);
    }
  }

  Dataset out;
  out.class_count = params.class_count;
  out.features.resize(params.dim, params.n);
  out.labels.resize(params.n);
  if (params.sensitive_count > 0) {
    out.sensitive.emplace(params.n);
    out.sensitive_count = params.sensitive_count;
  }
  for (int i = 0; i < params.n; ++i) {
    const int label = i % params.class_count;
    out.labels[i] = label;
    int confuser = label;
    if (params.class_count > 1) {
      const auto offset = UniformIndex(static_cast<uint64_t>(params.class_count - 1), rng);
      confuser = (label + 1 + static_cast<int>(offset)) % params.class_count;
    }
    for (int j = 0; j < class_dims; ++j) {
      const int source = bit(params.cluster_spread) > 0 ? confuser : label;
      const double v = prototypes(j, source);
      out.features(j, i) = bit(params.flip_noise) > 0 ? 1.0 - v : v;
    }
    if (params.sensitive_count > 0) {
      const int s = static_cast<int>(
          UniformIndex(static_cast<uint64_t>(params.sensitive_count), rng));
      (*out.sensitive)[i] = s;
      for (int j = 0; j < params.sensitive_block; ++j) {
        const double v = sensitive_prototypes(j, s);
        out.features(class_dims + j, i) = bit(params.flip_noise) > 0 ? 1.0 - v : v;
      }
    }
  }
  return out;
}

absl::StatusOr<std::vector<int>> Bucketize(std::span<const int> ranks,
                                           int n_levels) {
  const int n = static_cast<int>(ranks.size());
  if (n_levels < 1) {
    return absl::FailedPreconditionError("n_levels must be >= 1");
  }
  if (n_levels > n) {
    return absl::FailedPreconditionError(absl::StrCat(
        "n_levels (", n_levels, ") exceeds sample count (", n, ")"));
  }
  // Band b covers ranks (start_b, start_b + size_b]; the first n % n_levels
  // bands hold one extra rank.
  const int base = n / n_levels;
  const int extra = n % n_levels;
  std::vector<int> level_of_rank(n + 1, -1);
  int rank = 1;
  for (int b = 0; b < n_levels; ++b) {
    const int size = base + (b < extra ? 1 : 0);
    for (int k = 0; k < size; ++k) level_of_rank[rank++] = b;
  }
  std::vector<int> levels(n);
  std::vector<bool> seen(n + 1, false);
  for (int i = 0; i < n; ++i) {
    const int r = ranks[i];
    if (r < 1 || r > n || seen[r]) {
      return absl::InvalidArgumentError("ranks must be a permutation of 1..N");
    }
    seen[r] = true;
    levels[i] = level_of_rank[r];
  }
  return levels;
}

absl::StatusOr<std::vector<int>> MostDifficultByRank(std::span<const int> ranks,
                                                     double fraction) {
  const int n = static_cast<int>(ranks.size());
  if (!(fraction > 0.0 && fraction < 1.0)) {
    return absl::FailedPreconditionError("holdout fraction must be in (0, 1)");
  }
  const int count = static_cast<int>(std::floor(fraction * n + 1e-9));
  if (count == 0) {
    return absl::FailedPreconditionError(
        absl::StrCat("holdout fraction ", fraction, " selects no samples of ", n));
  }
  std::vector<int> by_rank(n, -1);
  for (int i = 0; i < n; ++i) {
    if (ranks[i] < 1 || ranks[i] > n || by_rank[ranks[i] - 1] != -1) {
      return absl::InvalidArgumentError("ranks must be a permutation of 1..N");
    }
    by_rank[ranks[i] - 1] = i;
  }
  return std::vector<int>(by_rank.end() - count, by_rank.end());
}

}  // namespace clpriv
