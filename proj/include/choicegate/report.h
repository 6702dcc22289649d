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

#ifndef CHOICEGATE_REPORT_H_
#define CHOICEGATE_REPORT_H_

#include <string>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "choicegate/eval.h"
#include "choicegate/json_util.h"

namespace choicegate {

// A rendered table. Cells are preformatted strings; `values` mirrors them as
// JSON (numbers stay numbers, n/a becomes null).
struct Table {
  std::string title;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> cells;
  std::vector<std::vector<Json>> values;

  void AddRow(std::vector<Json> row);
};

// Two decimals; null renders as "n/a".
std::string FormatCell(const Json& value);

std::string RenderText(const std::vector<Table>& tables);
Json RenderJson(const std::vector<Table>& tables);
// Inverse of RenderJson.
absl::StatusOr<std::vector<Table>> TablesFromJson(const Json& doc);

Table AccuracyTable(const std::vector<std::pair<std::string, AccuracySummary>>& rows);
Table MapTable(const std::vector<std::pair<std::string, MapResult>>& rows,
               const ChoiceSet& choices);
Table GenusTable(const std::vector<std::pair<std::string, GenusResult>>& rows);
Table DiffStatsTable(const std::vector<std::pair<std::string, DiffStats>>& rows);
Table ExtractionTable(const std::vector<std::pair<std::string, ExtractionResult>>& rows);
Table SubsetTable(const std::vector<std::pair<std::string, SubsetResult>>& rows);

// One line per (comparison, prompt): comparison,prompt_id,delta.
std::string DiffStatsCsv(const std::vector<std::pair<std::string, DiffStats>>& rows);

}  // namespace choicegate

#endif  // CHOICEGATE_REPORT_H_
