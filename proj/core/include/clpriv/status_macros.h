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

#ifndef CLPRIV_STATUS_MACROS_H_
#define CLPRIV_STATUS_MACROS_H_

#include <utility>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

#define CLPRIV_STATUS_CONCAT_INNER_(x, y) x##y
#define CLPRIV_STATUS_CONCAT_(x, y) CLPRIV_STATUS_CONCAT_INNER_(x, y)

// Returns early from the enclosing function if `expr` is not OK.
#define RETURN_IF_ERROR(expr)                    \
  do {                                           \
    const absl::Status clpriv_status_ = (expr);  \
    if (!clpriv_status_.ok()) {                  \
      return clpriv_status_;                     \
    }                                            \
  } while (false)

#define CLPRIV_ASSIGN_OR_RETURN_IMPL_(statusor, lhs, rexpr) \
  auto statusor = (rexpr);                                  \
  if (!statusor.ok()) {                                     \
    return std::move(statusor).status();                    \
  }                                                         \
  lhs = std::move(statusor).value()

// Evaluates `rexpr` (an absl::StatusOr<T>) and either assigns the value to
// `lhs` or returns the error status.
#define ASSIGN_OR_RETURN(lhs, rexpr) \
  CLPRIV_ASSIGN_OR_RETURN_IMPL_(     \
      CLPRIV_STATUS_CONCAT_(clpriv_statusor_, __LINE__), lhs, rexpr)

#endif  // CLPRIV_STATUS_MACROS_H_
