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

#include "clpriv/checkpoint.h"

#include <bit>
#include <cstring>
#include <utility>
#include <vector>

#include "absl/strings/str_cat.h"
#include "clpriv/csv.h"
#include "clpriv/status_macros.h"

namespace clpriv {
namespace {

constexpr char kMagic[8] = {'C', 'L', 'P', 'R', 'I', 'V', 'N', 'N'};

void PutU32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void PutF64(std::string& out, double v) {
  const uint64_t bits = std::bit_cast<uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
  }
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  absl::StatusOr<uint32_t> U32() {
    RETURN_IF_ERROR(Need(4));
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  absl::StatusOr<double> F64() {
    RETURN_IF_ERROR(Need(8));
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
      bits |= static_cast<uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i]))
              << (8 * i);
    }
    pos_ += 8;
    return std::bit_cast<double>(bits);
  }

  absl::Status Skip(size_t n) {
    RETURN_IF_ERROR(Need(n));
    pos_ += n;
    return absl::OkStatus();
  }

  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  absl::Status Need(size_t n) const {
    if (pos_ + n > bytes_.size()) {
      return absl::DataLossError("checkpoint truncated");
    }
    return absl::OkStatus();
  }

  const std::string& bytes_;
  size_t pos_ = 0;
};

}  // namespace

std::string SerializeNetwork(const Network& net) {
  std::string out(kMagic, sizeof(kMagic));
  PutU32(out, kCheckpointVersion);
  PutU32(out, static_cast<uint32_t>(net.layer_dims().size()));
  for (const int d : net.layer_dims()) PutU32(out, static_cast<uint32_t>(d));
  for (const DenseLayer& layer : net.layers()) {
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        PutF64(out, layer.weights(r, c));
      }
    }
    for (Eigen::Index r = 0; r < layer.biases.size(); ++r) {
      PutF64(out, layer.biases(r));
    }
  }
  return out;
}

absl::StatusOr<Network> DeserializeNetwork(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    return absl::DataLossError("not a clpriv network checkpoint");
  }
  Reader reader(bytes);
  RETURN_IF_ERROR(reader.Skip(sizeof(kMagic)));
  ASSIGN_OR_RETURN(const uint32_t version, reader.U32());
  if (version != kCheckpointVersion) {
    return absl::UnimplementedError(
        absl::StrCat("unsupported checkpoint version ", version));
  }
  ASSIGN_OR_RETURN(const uint32_t count, reader.U32());
  if (count < 2 || count > 64) {
    return absl::DataLossError(absl::StrCat("bad layer count ", count));
  }
  std::vector<int> dims;
  for (uint32_t i = 0; i < count; ++i) {
    ASSIGN_OR_RETURN(const uint32_t d, reader.U32());
    if (d == 0 || d > (1u << 24)) {
      return absl::DataLossError(absl::StrCat("bad layer width ", d));
    }
    dims.push_back(static_cast<int>(d));
  }
  std::vector<DenseLayer> layers(count - 1);
  for (size_t l = 0; l < layers.size(); ++l) {
    layers[l].weights.resize(dims[l + 1], dims[l]);
    layers[l].biases.resize(dims[l + 1]);
    for (int r = 0; r < dims[l + 1]; ++r) {
      for (int c = 0; c < dims[l]; ++c) {
        ASSIGN_OR_RETURN(layers[l].weights(r, c), reader.F64());
      }
    }
    for (int r = 0; r < dims[l + 1]; ++r) {
      ASSIGN_OR_RETURN(layers[l].biases(r), reader.F64());
    }
  }
  if (!reader.AtEnd()) {
    return absl::DataLossError("trailing bytes after checkpoint payload");
  }
  return Network::FromLayers(std::move(layers));
}

absl::Status SaveNetwork(const Network& net, const std::string& path) {
  return WriteFileAtomically(path, SerializeNetwork(net));
}

absl::StatusOr<Network> LoadNetwork(const std::string& path) {
  ASSIGN_OR_RETURN(const std::string bytes, ReadFile(path));
  return DeserializeNetwork(bytes);
}

}  // namespace clpriv
