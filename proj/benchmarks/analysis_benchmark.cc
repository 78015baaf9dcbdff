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

#include <vector>

#include "benchmark/benchmark.h"
#include "clpriv/analysis.h"
#include "clpriv/random.h"

namespace clpriv {
namespace {

Dataset RandomDataset(int n, int dim, uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  d.features.resize(dim, n);
  d.labels.resize(n);
  d.class_count = 10;
  for (int j = 0; j < n; ++j) {
    for (int r = 0; r < dim; ++r) d.features(r, j) = UniformUnit(rng);
    d.labels[j] = static_cast<int>(UniformIndex(10, rng));
  }
  return d;
}

void BM_KnnShapley(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const Dataset train = RandomDataset(n, 64, 1);
  const Dataset validation = RandomDataset(100, 64, 2);
  for (auto _ : state) benchmark::DoNotOptimize(KnnShapley(train, validation, 5).value());
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_KnnShapley)->Arg(1000)->Arg(10000);

void BM_ComputeRoc(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(3);
  std::vector<double> scores(n);
  std::vector<bool> truth(n);
  for (int i = 0; i < n; ++i) {
    truth[i] = i % 2 == 0;
    scores[i] = UniformUnit(rng) + (truth[i] ? 0.2 : 0.0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(ComputeRoc(scores, truth).value());
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_ComputeRoc)->Arg(20000);

}  // namespace
}  // namespace clpriv

BENCHMARK_MAIN();
