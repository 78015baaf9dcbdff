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
#include "clpriv/nn.h"
#include "clpriv/random.h"

namespace clpriv {
namespace {

struct Batch {
  Matrix xs;
  std::vector<int> labels;
};

Batch RandomBatch(int dim, int size, int classes) {
  Rng rng(1);
  Batch b{Matrix(dim, size), std::vector<int>(size)};
  for (int j = 0; j < size; ++j) {
    for (int r = 0; r < dim; ++r) b.xs(r, j) = UniformUnit(rng) < 0.5 ? 0.0 : 1.0;
    b.labels[j] = static_cast<int>(UniformIndex(classes, rng));
  }
  return b;
}

// One SGD step of the 600-256-100 target network on a batch of the given size.
void BM_SgdStep(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  Network net = Network::Create({600, 256, 100}, 1).value();
  const Batch b = RandomBatch(600, batch, 100);
  for (auto _ : state) {
    const LossAndGradient lg = LossAndGrad(net, b.xs, b.labels).value();
    benchmark::DoNotOptimize(ApplySgdUpdate(net, lg.gradients, 1e-6));
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_SgdStep)->Arg(32)->Arg(128);

void BM_DpSgdStep(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  Network net = Network::Create({600, 256, 100}, 1).value();
  const Batch b = RandomBatch(600, batch, 100);
  Rng rng(2);
  for (auto _ : state) {
    net = DpSgdStep(net, b.xs, b.labels, 1e-6, 1.0, 1.0, rng).value();
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_DpSgdStep)->Arg(32)->Arg(128);

void BM_ForwardBatch(benchmark::State& state) {
  const Network net = Network::Create({600, 256, 100}, 1).value();
  const Batch b = RandomBatch(600, 1024, 100);
  for (auto _ : state) benchmark::DoNotOptimize(ForwardBatch(net, b.xs).value());
  state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_ForwardBatch);

}  // namespace
}  // namespace clpriv

BENCHMARK_MAIN();
