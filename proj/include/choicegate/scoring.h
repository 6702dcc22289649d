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

// Choice-probability computation over a ChoiceTrie.
//
// All arithmetic stays in log space. Two normalizations are offered:
//
//  * kRaw: each factor is the unmasked next-token probability,
//    logprob - logsumexp_all.
//  * kPerStepRenormalized: each factor is renormalized over the trie's allowed
//    tokens at that node, i.e. the probability constrained generation would
//    sample it with. Forced tokens (single allowed token) contribute exactly 0.
//
// Under per-step renormalization, truncating each choice's product at the
// first token that makes its prefix unique is exact: every later factor is a
// forced token. Truncated scoring therefore only queries nodes shared by at
// least two choices.

#ifndef CHOICEGATE_SCORING_H_
#define CHOICEGATE_SCORING_H_

#include <cstdint>
#include <optional>
#include <string>
#include "absl/strings/string_view.h"
#include <vector>

#include "absl/status/statusor.h"
#include "choicegate/choice_trie.h"
#include "choicegate/lm_backend.h"

namespace choicegate {

enum class Normalization { kRaw, kPerStepRenormalized };

absl::string_view NormalizationName(Normalization norm);
std::optional<Normalization> ParseNormalization(absl::string_view name);

enum class Execution { kSerial, kParallel };

// Prompt (and optional image) the choice tokens are conditioned on.
struct ScoringContext {
  std::string prompt;
  std::optional<std::string> image;
};

struct ChoiceScores {
  std::vector<double> log_scores;  // indexed by choice id
  Normalization normalization = Normalization::kPerStepRenormalized;
  int64_t passes_used = 0;
};

struct YesNoScore {
  double p_yes = 0.5;
};

struct GreedyResult {
  ChoiceId choice = 0;
  int64_t passes_used = 0;
};

// Restricts `dist` to `allowed` and rescales to unit mass (logsumexp_all = 0).
// If every allowed token has zero probability the result is uniform over them.
absl::StatusOr<NextTokenDistribution> MaskedRenormalize(
    const NextTokenDistribution& dist, const std::vector<TokenId>& allowed);

// Per-edge log factors at one node, aligned with `allowed` (ascending ids).
absl::StatusOr<std::vector<double>> StepLogprobs(
    const NextTokenDistribution& dist, const std::vector<TokenId>& allowed,
    Normalization norm);

// Query for the distribution at `node` under `ctx`.
LogprobQuery NodeQuery(const ScoringContext& ctx, const ChoiceTrie& trie,
                       NodeId node);

// Full-sequence log-probability of one choice. The eos factor is included
// only where the label is also a prefix of another label. `passes`, when
// given, receives the number of distributions fetched.
absl::StatusOr<double> FullChoiceLogprob(LMBackend& backend,
                                         const ScoringContext& ctx,
                                         const ChoiceTrie& trie, ChoiceId choice,
                                         Normalization norm,
                                         int64_t* passes = nullptr);

// Full-sequence scores for every choice, sharing one fetch per node that has
// a non-eos edge. passes_used == trie.ForwardPassCount(PassMode::kFull).
absl::StatusOr<ChoiceScores> FullChoiceLogprobs(
    LMBackend& backend, const ScoringContext& ctx, const ChoiceTrie& trie,
    Normalization norm, Execution exec = Execution::kParallel);

// Early-stopped scores: factors up to and including the first token after
// which the choice is unique. Fetches only nodes shared by >= 2 choices, so
// passes_used == trie.ForwardPassCount(PassMode::kTruncated).
absl::StatusOr<ChoiceScores> TruncatedChoiceLogprobs(
    LMBackend& backend, const ScoringContext& ctx, const ChoiceTrie& trie,
    Normalization norm, Execution exec = Execution::kParallel);

// Walks from the root taking the most probable allowed token (renormalized;
// ties to the lowest token id). Forced steps issue no query.
absl::StatusOr<GreedyResult> ConstrainedGreedyDecode(LMBackend& backend,
                                                     const ScoringContext& ctx,
                                                     const ChoiceTrie& trie);

// Number of queries ConstrainedGreedyDecode issues when it ends at `choice`.
int64_t GreedyPassCount(const ChoiceTrie& trie, ChoiceId choice);

// Two-way softmax over the Yes and No token log-probabilities: one pass.
absl::StatusOr<YesNoScore> ScoreYesNo(LMBackend& backend,
                                      const ScoringContext& ctx,
                                      TokenId yes_token, TokenId no_token);

struct YesNoTokens {
  TokenId yes = 0;
  TokenId no = 0;
};

// First tokens of "Yes" and "No", unless overridden.
absl::StatusOr<YesNoTokens> ResolveYesNoTokens(
    const Vocabulary& vocab, std::optional<TokenId> yes_override = std::nullopt,
    std::optional<TokenId> no_override = std::nullopt);

// Highest score; ties go to the lowest choice id.
ChoiceId ArgmaxChoice(const std::vector<double>& log_scores);

}  // namespace choicegate

#endif  // CHOICEGATE_SCORING_H_
