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

// Metrics over run records and score matrices. Rates are percentages in
// [0, 100]; per-class AP values are fractions in [0, 1].

#ifndef CHOICEGATE_EVAL_H_
#define CHOICEGATE_EVAL_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/statusor.h"
#include "choicegate/choice_trie.h"
#include "choicegate/pipeline.h"
#include "choicegate/scoring.h"

namespace choicegate {

// example id -> ground truth choice id.
using TruthMap = std::map<std::string, ChoiceId>;

TruthMap TruthFromExamples(const std::vector<Example>& examples);

struct PromptAccuracy {
  std::string prompt_id;
  int64_t correct = 0;
  int64_t total = 0;
  double accuracy = 0.0;
};

struct AccuracySummary {
  std::vector<PromptAccuracy> per_prompt;  // sorted by prompt id
  double mean = 0.0;
  int64_t failed = 0;
};

// Groups classification records by prompt id. Failed records and records
// without a prediction count as incorrect. Every prompt must cover the same
// example set.
absl::StatusOr<AccuracySummary> AccuracyOverVariations(
    const std::vector<RunRecord>& records, const TruthMap& truth);

struct MapResult {
  double map = 0.0;                             // percent
  std::vector<std::optional<double>> per_class;  // AP fraction, nullopt if excluded
  std::vector<ChoiceId> excluded;                // classes without a positive
  int64_t examples = 0;
};

// One-vs-rest mAP: each class ranks every row by that class's score
// (descending, ties to the lower row index, NaN last).
absl::StatusOr<MapResult> MapOneVsRest(const ScoreMatrix& matrix, const TruthMap& truth,
                                       size_t num_classes,
                                       Execution exec = Execution::kParallel);

using GenusMap = std::vector<std::string>;  // indexed by choice id

// JSON object label -> genus, total over `choices`.
absl::StatusOr<GenusMap> LoadGenusMap(const std::string& path, const ChoiceSet& choices);

struct GenusResult {
  std::optional<double> genus_rate;  // nullopt when nothing is misclassified
  double pct_misclassified = 0.0;
  int64_t misclassified = 0;
  int64_t genus_matches = 0;
  int64_t total = 0;
};

// Pooled over all classification records.
absl::StatusOr<GenusResult> GenusAccuracy(const std::vector<RunRecord>& records,
                                          const TruthMap& truth, const GenusMap& genus);

enum class SigmaKind { kPopulation, kSample };

struct DiffStats {
  std::vector<std::string> prompt_ids;
  std::vector<double> deltas;  // B - A
  double mean = 0.0;
  double sigma = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  SigmaKind sigma_kind = SigmaKind::kPopulation;
};

// 95% interval by the normal approximation, mean +/- 1.96 sigma / sqrt(n).
absl::StatusOr<DiffStats> QuestionLevelDiffStats(const std::map<std::string, double>& a,
                                                 const std::map<std::string, double>& b,
                                                 SigmaKind kind = SigmaKind::kPopulation);

enum class Resolution { kAnswer, kSchemaFailure, kNoSpecies, kRefused, kNoInformation };

absl::string_view ResolutionName(Resolution r);

struct LabelRecord {
  std::string example_id;
  std::string nlg;
  // Code-point offsets [start, end) into nlg.
  std::optional<std::pair<int64_t, int64_t>> span;
  Resolution resolution = Resolution::kAnswer;
  std::optional<ChoiceId> answer;             // in-schema answer
  std::optional<std::string> answer_species;  // out-of-schema answer text
};

// JSON lines {"example_id", "nlg", "span": [start, end] | null, "resolution",
// "answer"}. "answer" is required for resolution "answer"; a label outside
// `choices` is an out-of-schema answer.
absl::StatusOr<std::vector<LabelRecord>> LoadLabels(const std::string& path,
                                                    const ChoiceSet& choices);

// Checks span bounds and that the span is the first occurrence of its text.
absl::Status ValidateLabel(const LabelRecord& label);

struct ExtractionResult {
  double agreement = 0.0;  // over in-schema answers
  int64_t agreed = 0;
  int64_t in_schema = 0;
  int64_t labels = 0;
  // Percent of all labels.
  double pct_in_schema = 0.0;
  double pct_out_of_schema = 0.0;  // schema failures plus out-of-schema answers
  double pct_answer_out_of_schema = 0.0;
  double pct_schema_failure = 0.0;
  double pct_no_species = 0.0;
  double pct_refused = 0.0;
  double pct_no_information = 0.0;
};

// `predictions` maps example id -> predicted choice (absent means failed).
absl::StatusOr<ExtractionResult> ExtractionAgreement(
    const std::map<std::string, std::optional<ChoiceId>>& predictions,
    const std::vector<LabelRecord>& labels);

struct SubsetResult {
  double accuracy = 0.0;
  int64_t correct = 0;
  int64_t total = 0;
};

// Accuracy of records produced with per-example choice subsets. Each subset
// must contain the ground truth and every prediction must lie in its subset.
absl::StatusOr<SubsetResult> SubsetChoiceEval(const std::vector<RunRecord>& records,
                                              const std::vector<Example>& examples);

}  // namespace choicegate

#endif  // CHOICEGATE_EVAL_H_
