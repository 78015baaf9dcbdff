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

// Small file helpers shared by the CSV and JSON emitters.

#ifndef CLPRIV_CSV_H_
#define CLPRIV_CSV_H_

#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace clpriv {

absl::StatusOr<std::string> ReadFile(const std::string& path);

// Writes `contents` to `path.tmp` and renames it over `path`, so readers never
// observe a partially written file.
absl::Status WriteFileAtomically(const std::string& path,
                                 const std::string& contents);

// Shortest decimal form that parses back to the same double.
std::string FormatDouble(double value);

// Accumulates rows of a CSV table; cells must not contain commas or quotes.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void AddRow(std::vector<std::string> cells);
  std::string ToString() const;
  absl::Status Write(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Splits one CSV line on commas; surrounding whitespace is trimmed.
std::vector<std::string> SplitCsvLine(const std::string& line);

}  // namespace clpriv

#endif  // CLPRIV_CSV_H_
