// Copyright 2026 The choicegate Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CHOICEGATE_JSON_UTIL_H_
#define CHOICEGATE_JSON_UTIL_H_

#include <string>
#include "absl/strings/string_view.h"
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "json.hpp"

namespace choicegate {

using Json = nlohmann::json;

absl::StatusOr<std::string> ReadFile(const std::string& path);
absl::Status WriteFile(const std::string& path, absl::string_view contents);
absl::Status AppendFile(const std::string& path, absl::string_view contents);

// Parses JSON and rejects objects that repeat a key.
absl::StatusOr<Json> ParseJsonStrict(absl::string_view text);

// Reads a JSON-lines file. Blank lines are skipped; errors carry the 1-based
// line number.
absl::StatusOr<std::vector<Json>> ReadJsonLines(const std::string& path);

// Splits text into lines, dropping a trailing '\r' and a final empty line.
std::vector<std::string> SplitLines(absl::string_view text);

// Log-probabilities may be -inf, which JSON cannot carry; those travel as null.
Json LogprobToJson(double logprob);
double LogprobFromJson(const Json& value);

// Replaces each byte that does not start a well-formed UTF-8 sequence with
// U+FFFD. Valid input is returned unchanged.
std::string SanitizeUtf8(absl::string_view text);

// Stable 64-bit FNV-1a, rendered as 16 hex digits.
std::string Fnv1aHex(absl::string_view data);

}  // namespace choicegate

#endif  // CHOICEGATE_JSON_UTIL_H_
