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

#ifndef CLPRIV_RANDOM_H_
#define CLPRIV_RANDOM_H_

#include <cstdint>
#include <random>
#include <vector>

namespace clpriv {

// Every stochastic component draws from its own Mersenne Twister seeded via
// DeriveSeed, so results do not depend on the order in which components run.
using Rng = std::mt19937_64;

// Mixes a base seed with a stream identifier (SplitMix64 finalizer).
uint64_t DeriveSeed(uint64_t base, uint64_t stream);

// Well-known stream identifiers used by the pipeline.
enum SeedStream : uint64_t {
  kStreamData = 1,
  kStreamSplit = 2,
  kStreamInit = 3,
  kStreamBatches = 4,
  kStreamDpNoise = 5,
  kStreamCurriculum = 6,
  kStreamShadow = 7,
  kStreamReference = 8,
  kStreamAttack = 9,
  kStreamLabelOnly = 10,
  kStreamMemorization = 11,
  kStreamMeasurer = 12,
  kStreamAia = 13,
  kStreamTarget = 14,
};

// Uniform random permutation of 0..n-1 (Fisher-Yates).
std::vector<int> RandomPermutation(int n, Rng& rng);

// Uniform integer in [0, bound). `bound` must be positive.
uint64_t UniformIndex(uint64_t bound, Rng& rng);

// Uniform double in [0, 1) with 53 random bits.
double UniformUnit(Rng& rng);

// Standard normal deviates via the Box-Muller transform; the second value of
// each pair is cached. Defined here rather than with <random> distributions so
// the stream is identical across standard library implementations.
class GaussianSampler {
 public:
  double Next(Rng& rng);

 private:
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace clpriv

#endif  // CLPRIV_RANDOM_H_
