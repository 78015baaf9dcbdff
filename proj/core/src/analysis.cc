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
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "absl/strings/str_cat.h"
#include "clpriv/random.h"
#include "clpriv/status_macros.h"

namespace clpriv {

std::string ScenarioName(MemorizationScenario scenario) {
  switch (scenario) {
    case MemorizationScenario::kNotSeen:
      return "not_seen";
    case MemorizationScenario::kFirstSeen:
      return "first_seen";
    case MemorizationScenario::kLastSeen:
      return "last_seen";
    case MemorizationScenario::kRandom:
      return "random";
  }
  return "unknown";
}

absl::StatusOr<MemorizationScenario> ParseScenario(const std::string& name) {
  for (const MemorizationScenario s : kAllScenarios) {
    if (ScenarioName(s) == name) return s;
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown scenario '", name, "'"));
}

absl::StatusOr<Quartiles> ComputeQuartiles(std::vector<double> values) {
  if (values.empty()) return absl::InvalidArgumentError("no values for quartiles");
  std::sort(values.begin(), values.end());
  auto at = [&values](double p) {
    const double h = p * static_cast<double>(values.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(h));
    const size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  return Quartiles{at(0.25), at(0.5), at(0.75)};
}

absl::StatusOr<std::vector<int>> ScenarioOrder(MemorizationScenario scenario,
                                               std::span<const int> curriculum_order,
                                               std::span<const int> holdout,
                                               uint64_t seed) {
  if (holdout.empty()) return absl::FailedPreconditionError("empty holdout");
  const int n = static_cast<int>(curriculum_order.size());
  std::vector<bool> held(n, false);
  for (const int i : holdout) {
    if (i < 0 || i >= n || held[i]) {
      return absl::InvalidArgumentError("holdout is not a set of split indices");
    }
    held[i] = true;
  }
  std::vector<int> rest;
  rest.reserve(n - holdout.size());
  for (const int i : curriculum_order) {
    if (i < 0 || i >= n) return absl::InvalidArgumentError("bad curriculum order");
    if (!held[i]) rest.push_back(i);
  }
  std::vector<int> order;
  order.reserve(n);
  switch (scenario) {
    case MemorizationScenario::kNotSeen:
      return rest;
    case MemorizationScenario::kFirstSeen:
      order.assign(holdout.begin(), holdout.end());
      order.insert(order.end(), rest.begin(), rest.end());
      return order;
    case MemorizationScenario::kLastSeen:
      order = rest;
      order.insert(order.end(), holdout.begin(), holdout.end());
      return order;
    case MemorizationScenario::kRandom: {
      Rng rng(DeriveSeed(seed, kStreamMemorization));
      std::vector<int> slots = RandomPermutation(n, rng);
      std::vector<bool> is_holdout_slot(n, false);
      for (size_t h = 0; h < holdout.size(); ++h) is_holdout_slot[slots[h]] = true;
      size_t next_holdout = 0;
      size_t next_rest = 0;
      for (int p = 0; p < n; ++p) {
        order.push_back(is_holdout_slot[p] ? holdout[next_holdout++] : rest[next_rest++]);
      }
      return order;
    }
  }
  return absl::InvalidArgumentError("unknown scenario");
}

absl::StatusOr<std::vector<MemorizationResult>> MemorizationExperiment(
    const Dataset& split, const Curriculum& curriculum,
    const MemorizationConfig& config) {
  if (curriculum.size() != split.size()) {
    return absl::FailedPreconditionError("curriculum does not cover the split");
  }
  if (!(config.holdout_fraction > 0.0 && config.holdout_fraction < 1.0)) {
    return absl::FailedPreconditionError("holdout fraction must be in (0, 1)");
  }
  if (config.seed_count < 1) return absl::FailedPreconditionError("seed_count must be >= 1");
  ASSIGN_OR_RETURN(const std::vector<int> holdout,
                   MostDifficultByRank(curriculum.ranks(), config.holdout_fraction));
  const Dataset held = split.Subset(holdout);

  std::vector<MemorizationResult> results;
  for (const MemorizationScenario scenario : config.scenarios) {
    ASSIGN_OR_RETURN(const std::vector<int> order,
                     ScenarioOrder(scenario, curriculum.order(), holdout,
                                   config.train.seed));
    std::vector<double> probability(holdout.size(), 0.0);
    for (int s = 0; s < config.seed_count; ++s) {
      TrainConfig train = config.train;
      if (s > 0) train.seed = DeriveSeed(config.train.seed, static_cast<uint64_t>(s));
      ASSIGN_OR_RETURN(Network net, Network::Create(config.layer_dims, train.seed));
      ASSIGN_OR_RETURN(TrainResult trained,
                       FixedOrderTrain(std::move(net), split, order, train));
      ASSIGN_OR_RETURN(const Matrix posteriors,
                       ForwardBatch(trained.network, held.features));
      for (size_t j = 0; j < holdout.size(); ++j) {
        probability[j] += posteriors(held.labels[j], static_cast<Eigen::Index>(j));
      }
    }
    for (double& p : probability) p /= config.seed_count;
    ASSIGN_OR_RETURN(const Quartiles quartiles, ComputeQuartiles(probability));
    results.push_back(MemorizationResult{scenario, holdout, std::move(probability),
                                         quartiles});
  }
  return results;
}

absl::StatusOr<std::vector<double>> KnnShapleyPoint(
    const Eigen::Ref<const Matrix>& train_x, std::span<const int> train_y,
    const Eigen::Ref<const Vector>& x, int y, int k) {
  const int n = static_cast<int>(train_y.size());
  if (n == 0) return absl::InvalidArgumentError("empty training split");
  if (train_x.cols() != n || train_x.rows() != x.size()) {
    return absl::InvalidArgumentError("training/validation shape mismatch");
  }
  if (k < 1 || k > n) {
    return absl::FailedPreconditionError(absl::StrCat("K=", k, " outside 1..", n));
  }
  const Vector dist = (train_x.colwise() - x).colwise().squaredNorm().transpose();
  std::vector<int> alpha(n);
  std::iota(alpha.begin(), alpha.end(), 0);
  std::stable_sort(alpha.begin(), alpha.end(),
                   [&dist](int a, int b) { return dist(a) < dist(b); });
  auto match = [&](int pos) { return train_y[alpha[pos]] == y ? 1.0 : 0.0; };
  std::vector<double> values(n, 0.0);
  double s = match(n - 1) / n;
  values[alpha[n - 1]] = s;
  for (int j = n - 1; j >= 1; --j) {
    // j is the 1-based position of alpha[j - 1].
    s += (match(j - 1) - match(j)) * std::min(k, j) / (static_cast<double>(k) * j);
    values[alpha[j - 1]] = s;
  }
  return values;
}

absl::StatusOr<std::vector<double>> KnnShapley(const Dataset& train,
                                               const Dataset& validation, int k) {
  if (validation.size() == 0) return absl::InvalidArgumentError("empty validation split");
  std::vector<double> total(train.size(), 0.0);
  for (int v = 0; v < validation.size(); ++v) {
    ASSIGN_OR_RETURN(const std::vector<double> values,
                     KnnShapleyPoint(train.features, train.labels,
                                     validation.features.col(v), validation.labels[v], k));
    for (int i = 0; i < train.size(); ++i) total[i] += values[i];
  }
  for (double& t : total) t /= validation.size();
  return total;
}

absl::StatusOr<RocCurve> ComputeRoc(std::span<const double> scores,
                                    const std::vector<bool>& truth) {
  const int n = static_cast<int>(scores.size());
  if (static_cast<int>(truth.size()) != n) {
    return absl::InvalidArgumentError("score/truth count mismatch");
  }
  const long positives = std::count(truth.begin(), truth.end(), true);
  const long negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    return absl::InvalidArgumentError("ROC needs both members and non-members");
  }
  for (const double s : scores) {
    if (std::isnan(s)) return absl::InvalidArgumentError("NaN score");
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&scores](int a, int b) { return scores[a] > scores[b]; });
  RocCurve roc;
  roc.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  long tp = 0;
  long fp = 0;
  for (int i = 0; i < n;) {
    const double value = scores[order[i]];
    while (i < n && scores[order[i]] == value) {
      (truth[order[i]] ? tp : fp) += 1;
      ++i;
    }
    const RocPoint& prev = roc.points.back();
    const RocPoint next{static_cast<double>(fp) / negatives,
                        static_cast<double>(tp) / positives, value};
    roc.auc += (next.fpr - prev.fpr) * (next.tpr + prev.tpr) / 2.0;
    roc.points.push_back(next);
  }
  return roc;
}

std::vector<TprAtFpr> TprAtFprTable(const RocCurve& roc,
                                    std::span<const double> fpr_grid) {
  std::vector<TprAtFpr> table;
  for (const double target : fpr_grid) {
    TprAtFpr row{target, 0.0, 0.0};
    for (const RocPoint& p : roc.points) {
      if (p.fpr > target) break;
      row.fpr = p.fpr;
      row.tpr = p.tpr;
    }
    table.push_back(row);
  }
  return table;
}

std::vector<double> DefaultFprGrid() {
  return {0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5};
}

std::vector<double> NormalizeMinMax(std::span<const double> values) {
  std::vector<double> out(values.size(), 0.0);
  if (values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double span = *hi - *lo;
  if (span <= 0.0) return out;
  for (size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - *lo) / span;
  return out;
}

namespace {

Histogram BuildHistogram(std::span<const double> normalized, double lo, double hi,
                         int bins) {
  Histogram h{lo, hi, std::vector<int>(bins, 0)};
  for (const double v : normalized) {
    const int b = std::clamp(static_cast<int>(std::floor(v * bins)), 0, bins - 1);
    ++h.counts[b];
  }
  return h;
}

}  // namespace

absl::StatusOr<BucketReport> ComputeBucketReport(const BucketInputs& in,
                                                 int n_levels, int bins) {
  const size_t m = in.member_verdicts.size();
  const size_t pool = in.pool_verdicts.size();
  if (in.member_levels.size() != m || in.member_likelihood.size() != m ||
      in.member_loss.size() != m) {
    return absl::InvalidArgumentError("member inputs have mismatched lengths");
  }
  if (in.pool_likelihood.size() != pool || in.pool_loss.size() != pool) {
    return absl::InvalidArgumentError("pool inputs have mismatched lengths");
  }
  if (pool == 0) return absl::InvalidArgumentError("empty non-member pool");
  if (n_levels < 1 || bins < 1) {
    return absl::InvalidArgumentError("levels and bins must be positive");
  }
  int pool_correct = 0;
  double pool_likelihood = 0.0;
  for (size_t j = 0; j < pool; ++j) {
    pool_correct += in.pool_verdicts[j].is_member ? 0 : 1;
    pool_likelihood += in.pool_likelihood[j];
  }
  pool_likelihood /= static_cast<double>(pool);

  std::vector<int> count(n_levels, 0);
  std::vector<int> correct(n_levels, 0);
  std::vector<double> likelihood(n_levels, 0.0);
  for (size_t j = 0; j < m; ++j) {
    const int level = in.member_levels[j];
    if (level < 0 || level >= n_levels) {
      return absl::InvalidArgumentError(absl::StrCat("difficulty level ", level,
                                                     " outside 0..", n_levels - 1));
    }
    ++count[level];
    correct[level] += in.member_verdicts[j].is_member ? 1 : 0;
    likelihood[level] += in.member_likelihood[j];
  }
  BucketReport report;
  for (int level = 0; level < n_levels; ++level) {
    BucketRow row;
    row.level = level;
    row.member_count = count[level];
    row.pool_likelihood = pool_likelihood;
    if (count[level] > 0) {
      row.accuracy = static_cast<double>(correct[level] + pool_correct) /
                     static_cast<double>(count[level] + pool);
      row.member_likelihood = likelihood[level] / count[level];
    }
    report.rows.push_back(row);
  }

  std::vector<double> all(in.member_loss);
  all.insert(all.end(), in.pool_loss.begin(), in.pool_loss.end());
  const std::vector<double> normalized = NormalizeMinMax(all);
  const auto [lo, hi] = std::minmax_element(all.begin(), all.end());
  report.member_loss = BuildHistogram(std::span(normalized).first(m), *lo, *hi, bins);
  report.non_member_loss = BuildHistogram(std::span(normalized).subspan(m), *lo, *hi, bins);
  return report;
}

}  // namespace clpriv
