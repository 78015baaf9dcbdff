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

// Model checkpoints.
//
// Layout (all integers and doubles little-endian regardless of host):
//   bytes 0-7   magic "CLPRIVNN"
//   u32         format version (currently 1)
//   u32         number of layer widths W
//   u32 x W     layer widths (input, hidden..., output)
//   per weight layer: f64 weights in row-major order, then f64 biases

#ifndef CLPRIV_CHECKPOINT_H_
#define CLPRIV_CHECKPOINT_H_

#include <cstdint>
#include <string>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "clpriv/nn.h"

namespace clpriv {

inline constexpr uint32_t kCheckpointVersion = 1;

std::string SerializeNetwork(const Network& net);
absl::StatusOr<Network> DeserializeNetwork(const std::string& bytes);

// Writes via a temporary file and rename.
absl::Status SaveNetwork(const Network& net, const std::string& path);
absl::StatusOr<Network> LoadNetwork(const std::string& path);

}  // namespace clpriv

#endif  // CLPRIV_CHECKPOINT_H_
