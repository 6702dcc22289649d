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

#ifndef CHOICEGATE_PIPELINE_H_
#define CHOICEGATE_PIPELINE_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include "absl/strings/string_view.h"
#include <vector>

#include "absl/status/statusor.h"
#include "choicegate/choice_trie.h"
#include "choicegate/json_util.h"
#include "choicegate/lm_backend.h"
#include "choicegate/prompts.h"
#include "choicegate/scoring.h"

namespace choicegate {

enum class Method {
  kChoice,          // constrained decoding directly on the image prompt
  kNlg2Choice,      // free-form answer, then text-only constrained selection
  kNlg2ChoiceOpen,  // as above with the steering suffix removed
  kNlg2Nlg2Choice,  // extra rephrase round(s) before selection
  kYesNo,           // per-class Yes/No probability
  kRetrievalTrunc,  // truncated choice scores from the stage-2 prompt
};

absl::string_view MethodName(Method m);
std::optional<Method> ParseMethod(absl::string_view name);
bool IsClassification(Method m);
bool HasGenerationStage(Method m);

// How a classification picks its answer from the trie.
enum class Selector { kTruncatedArgmax, kGreedy };

absl::string_view SelectorName(Selector s);
std::optional<Selector> ParseSelector(absl::string_view name);

struct Example {
  std::string id;
  std::string image;
  ChoiceId ground_truth = 0;
  // Restricts the candidate labels for this example (e.g. 4-way subsets).
  std::optional<std::vector<ChoiceId>> choice_subset;
};

// Manifest: JSON lines {"id", "image", "label"}; label is a label string or a
// choice id. Duplicate ids are rejected.
absl::StatusOr<std::vector<Example>> LoadManifest(const std::string& path,
                                                  const ChoiceSet& choices);

// Subset file: JSON lines {"example_id", "choices": [label, ...]}. Every
// subset must contain its example's ground truth.
absl::Status AttachChoiceSubsets(const std::string& path, const ChoiceSet& choices,
                                 std::vector<Example>& examples);

inline constexpr absl::string_view kEmptyResponseMarker = "(no response)";

struct RunConfig {
  DatasetProfile profile;
  Method method = Method::kNlg2Choice;
  SteeringMode steering = SteeringMode::kTypeOnly;
  std::optional<std::string> cot;
  Normalization normalization = Normalization::kPerStepRenormalized;
  Selector selector = Selector::kTruncatedArgmax;
  int32_t max_new_tokens = 512;
  int32_t rounds = 2;  // nlg2nlg2choice only
  int32_t max_rounds = 8;
  std::string rephrase_template = std::string(kRephraseTemplate);
  std::string yes_no_template = std::string(kYesNoTemplate);
  std::optional<TokenId> yes_token;
  std::optional<TokenId> no_token;
  int32_t jobs = 1;
  bool record_timestamps = false;

  // Steering actually applied to stage 1 for this method.
  SteeringMode EffectiveSteering() const;
  absl::Status Validate() const;
  // Canonical JSON of every field that changes results.
  Json ToJson(absl::string_view backend_identity) const;
  std::string Hash(absl::string_view backend_identity) const;
};

enum class RecordStatus { kOk, kFailed };

struct RunRecord {
  std::string example_id;
  std::string prompt_id;
  Method method = Method::kNlg2Choice;
  RecordStatus status = RecordStatus::kOk;
  std::string error;
  std::vector<std::string> flags;  // e.g. "empty_stage1"
  std::optional<std::string> stage1_text;
  std::vector<std::string> rephrases;
  std::optional<ChoiceId> prediction;
  std::optional<ChoiceScores> scores;
  std::optional<std::vector<double>> yes_no;  // p_yes per choice
  int64_t passes_used = 0;
  std::optional<std::string> started_at;
  std::optional<std::string> finished_at;

  Json ToJson() const;
  static absl::StatusOr<RunRecord> FromJson(const Json& doc);
};

// Everything a run needs that is shared across examples.
class Pipeline {
 public:
  static absl::StatusOr<Pipeline> Create(RunConfig cfg, ChoiceSet choices,
                                         LMBackend& backend,
                                         const Vocabulary& vocab);

  const RunConfig& config() const { return cfg_; }
  const ChoiceSet& choices() const { return choices_; }
  const ChoiceTrie& trie() const { return trie_; }
  LMBackend& backend() const { return *backend_; }

  // Dispatches on cfg.method. Never throws: failures become failed records.
  RunRecord Run(const Example& example, const PromptTemplate& prompt) const;

  RunRecord ClassifyChoiceBaseline(const Example& example,
                                   const PromptTemplate& prompt) const;
  RunRecord ClassifyNlg2Choice(const Example& example,
                               const PromptTemplate& prompt) const;
  // rounds == 1 is plain nlg2choice; each extra round inserts one text-only
  // rephrase before selection.
  RunRecord ClassifyMultiRound(const Example& example, const PromptTemplate& prompt,
                               int32_t rounds) const;
  RunRecord RetrievalTruncated(const Example& example,
                               const PromptTemplate& prompt) const;
  // One Yes/No pass per choice; the prompt only supplies the record id.
  RunRecord YesNoRow(const Example& example, const PromptTemplate& prompt) const;

 private:
  Pipeline(RunConfig cfg, ChoiceSet choices, ChoiceTrie trie, LMBackend& backend,
           YesNoTokens yes_no, const Vocabulary& vocab)
      : cfg_(std::move(cfg)),
        choices_(std::move(choices)),
        trie_(std::move(trie)),
        backend_(&backend),
        yes_no_(yes_no),
        vocab_(&vocab) {}

  RunRecord NewRecord(const Example& example, absl::string_view prompt_id) const;
  // Stage 1 plus rounds - 1 rephrases; returns the text handed to stage 2.
  absl::StatusOr<std::string> GenerateResponse(const Example& example,
                                               const PromptTemplate& prompt,
                                               const ChoiceSet& choices,
                                               int32_t rounds, RunRecord& rec) const;
  // Picks a choice from `trie`; `global_ids` maps its choice ids back to the
  // run's choice set.
  absl::Status Select(const ScoringContext& ctx, const ChoiceTrie& trie,
                      const std::vector<ChoiceId>& global_ids, RunRecord& rec) const;
  RunRecord Guarded(const Example& example, absl::string_view prompt_id,
                    const std::function<absl::Status(RunRecord&)>& body) const;

  RunConfig cfg_;
  ChoiceSet choices_;
  ChoiceTrie trie_;
  LMBackend* backend_;
  YesNoTokens yes_no_;
  const Vocabulary* vocab_;
};

struct BatchOptions {
  std::string cache_path;
  bool resume = false;
  // Drop a malformed trailing line instead of refusing to resume.
  bool repair = false;
  // Stop after computing this many new records (simulates an interruption).
  std::optional<int64_t> stop_after;
};

struct BatchSummary {
  int64_t total = 0;
  int64_t cached = 0;
  int64_t computed = 0;
  int64_t failed = 0;
};

struct BatchResult {
  std::vector<RunRecord> records;  // ordered by (example id, prompt id)
  BatchSummary summary;
};

// Runs every (example, prompt) pair not already present in the cache. The
// cache is append-only JSON lines with a config-hash header; records are
// appended in (example id, prompt id) order so an interrupted run resumes to
// a byte-identical file.
absl::StatusOr<BatchResult> RunBatch(const Pipeline& pipeline,
                                     const std::vector<Example>& examples,
                                     const std::vector<PromptTemplate>& prompts,
                                     const BatchOptions& options);

// Per-example score rows derived from retrieval or yes/no records (failed
// records are omitted). JSON lines {"example_id", "scores": [...]}.
struct ScoreMatrix {
  std::vector<std::string> example_ids;
  std::vector<std::vector<double>> rows;
};

ScoreMatrix ScoreMatrixFromRecords(const std::vector<RunRecord>& records,
                                   absl::string_view prompt_id);
std::string ScoreMatrixToJsonLines(const ScoreMatrix& matrix);
absl::StatusOr<ScoreMatrix> LoadScoreMatrix(const std::string& path);

// Loads a cache file written by RunBatch (header checked, records returned).
absl::StatusOr<std::vector<RunRecord>> LoadRunCache(const std::string& path);

}  // namespace choicegate

#endif  // CHOICEGATE_PIPELINE_H_
