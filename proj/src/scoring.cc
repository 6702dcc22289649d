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

#include "choicegate/scoring.h"

#include <cmath>
#include <limits>
#include <unordered_map>

#include "absl/strings/str_cat.h"
#include "choicegate/kernels.h"

namespace choicegate {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Index of `token` among the node's children (ascending id order).
size_t ChildIndex(const TrieNode& node, TokenId token) {
  size_t idx = 0;
  for (const auto& [tok, child] : node.children) {
    if (tok == token) return idx;
    ++idx;
  }
  return idx;
}

absl::StatusOr<StepTable> Fetch(LMBackend& backend, const ScoringContext& ctx,
                                const ChoiceTrie& trie,
                                const std::vector<NodeId>& nodes,
                                Normalization norm, Execution exec) {
  return exec == Execution::kParallel
             ? parallel::FetchStepLogprobs(backend, ctx, trie, nodes, norm)
             : serial::FetchStepLogprobs(backend, ctx, trie, nodes, norm);
}

}  // namespace

absl::string_view NormalizationName(Normalization norm) {
  return norm == Normalization::kRaw ? "raw" : "renorm";
}

std::optional<Normalization> ParseNormalization(absl::string_view name) {
  if (name == "raw") return Normalization::kRaw;
  if (name == "renorm") return Normalization::kPerStepRenormalized;
  return std::nullopt;
}

absl::StatusOr<NextTokenDistribution> MaskedRenormalize(
    const NextTokenDistribution& dist, const std::vector<TokenId>& allowed) {
  if (allowed.empty()) return absl::InvalidArgumentError("allowed set is empty");
  std::vector<double> values;
  values.reserve(allowed.size());
  for (TokenId id : allowed) {
    auto it = dist.logprobs.find(id);
    if (it == dist.logprobs.end()) {
      return absl::InvalidArgumentError(
          absl::StrCat("allowed token ", id, " missing from distribution"));
    }
    values.push_back(it->second);
  }
  NextTokenDistribution out;
  out.logsumexp_all = 0.0;
  if (allowed.size() == 1) {
    out.logprobs[allowed[0]] = 0.0;
    return out;
  }
  const double lse = LogSumExp(values);
  for (size_t i = 0; i < allowed.size(); ++i) {
    out.logprobs[allowed[i]] =
        lse == kNegInf ? -std::log(static_cast<double>(allowed.size()))
                       : values[i] - lse;
  }
  return out;
}

absl::StatusOr<std::vector<double>> StepLogprobs(
    const NextTokenDistribution& dist, const std::vector<TokenId>& allowed,
    Normalization norm) {
  std::vector<double> out(allowed.size());
  if (norm == Normalization::kPerStepRenormalized) {
    auto renorm = MaskedRenormalize(dist, allowed);
    if (!renorm.ok()) return renorm.status();
    for (size_t i = 0; i < allowed.size(); ++i) out[i] = renorm->logprobs.at(allowed[i]);
    return out;
  }
  for (size_t i = 0; i < allowed.size(); ++i) {
    auto it = dist.logprobs.find(allowed[i]);
    if (it == dist.logprobs.end()) {
      return absl::InvalidArgumentError(
          absl::StrCat("allowed token ", allowed[i], " missing from distribution"));
    }
    out[i] = it->second == kNegInf ? kNegInf : it->second - dist.logsumexp_all;
  }
  return out;
}

LogprobQuery NodeQuery(const ScoringContext& ctx, const ChoiceTrie& trie,
                       NodeId node) {
  LogprobQuery q;
  q.prompt_text = ctx.prompt;
  q.image = ctx.image;
  q.prefix_tokens = trie.Prefix(node);
  for (const auto& [tok, child] : trie.node(node).children) q.candidates.push_back(tok);
  return q;
}

absl::StatusOr<double> FullChoiceLogprob(LMBackend& backend,
                                         const ScoringContext& ctx,
                                         const ChoiceTrie& trie, ChoiceId choice,
                                         Normalization norm, int64_t* passes) {
  if (choice < 0 || static_cast<size_t>(choice) >= trie.num_choices()) {
    return absl::OutOfRangeError(absl::StrCat("invalid choice id ", choice));
  }
  const TokenSequence& path = trie.path(choice);
  double total = 0.0;
  int64_t fetched = 0;
  NodeId cur = ChoiceTrie::kRoot;
  for (TokenId tok : path) {
    if (trie.HasNonEosChild(cur)) {
      auto steps = serial::FetchStepLogprobs(backend, ctx, trie, {cur}, norm);
      if (!steps.ok()) return steps.status();
      ++fetched;
      total += (*steps)[0][ChildIndex(trie.node(cur), tok)];
    }
    cur = trie.node(cur).children.at(tok);
  }
  if (passes != nullptr) *passes = fetched;
  return total;
}

absl::StatusOr<ChoiceScores> FullChoiceLogprobs(LMBackend& backend,
                                                const ScoringContext& ctx,
                                                const ChoiceTrie& trie,
                                                Normalization norm,
                                                Execution exec) {
  const std::vector<NodeId> nodes = trie.FullPassNodes();
  auto table = Fetch(backend, ctx, trie, nodes, norm, exec);
  if (!table.ok()) return table.status();
  std::unordered_map<NodeId, size_t> slot;
  for (size_t i = 0; i < nodes.size(); ++i) slot[nodes[i]] = i;

  ChoiceScores out;
  out.normalization = norm;
  out.passes_used = static_cast<int64_t>(nodes.size());
  out.log_scores.resize(trie.num_choices());
  for (size_t c = 0; c < trie.num_choices(); ++c) {
    double total = 0.0;
    NodeId cur = ChoiceTrie::kRoot;
    for (TokenId tok : trie.path(static_cast<ChoiceId>(c))) {
      if (auto it = slot.find(cur); it != slot.end()) {
        total += (*table)[it->second][ChildIndex(trie.node(cur), tok)];
      }
      cur = trie.node(cur).children.at(tok);
    }
    out.log_scores[c] = total;
  }
  return out;
}

absl::StatusOr<ChoiceScores> TruncatedChoiceLogprobs(LMBackend& backend,
                                                     const ScoringContext& ctx,
                                                     const ChoiceTrie& trie,
                                                     Normalization norm,
                                                     Execution exec) {
  const std::vector<NodeId> nodes = trie.TruncatedPassNodes();
  auto table = Fetch(backend, ctx, trie, nodes, norm, exec);
  if (!table.ok()) return table.status();
  std::unordered_map<NodeId, size_t> slot;
  for (size_t i = 0; i < nodes.size(); ++i) slot[nodes[i]] = i;

  ChoiceScores out;
  out.normalization = norm;
  out.passes_used = static_cast<int64_t>(nodes.size());
  out.log_scores.resize(trie.num_choices());
  for (size_t c = 0; c < trie.num_choices(); ++c) {
    const auto choice = static_cast<ChoiceId>(c);
    auto cut = trie.Truncation(choice);
    if (!cut.ok()) return cut.status();
    const TokenSequence& path = trie.path(choice);
    double total = 0.0;
    NodeId cur = ChoiceTrie::kRoot;
    for (int32_t i = 0; i < cut->included_len; ++i) {
      // Only the root of a single-choice trie is unshared here; its one
      // allowed token is forced.
      if (auto it = slot.find(cur); it != slot.end()) {
        total += (*table)[it->second][ChildIndex(trie.node(cur), path[i])];
      }
      cur = trie.node(cur).children.at(path[i]);
    }
    out.log_scores[c] = total;
  }
  return out;
}

absl::StatusOr<GreedyResult> ConstrainedGreedyDecode(LMBackend& backend,
                                                     const ScoringContext& ctx,
                                                     const ChoiceTrie& trie) {
  GreedyResult result;
  NodeId cur = ChoiceTrie::kRoot;
  while (!trie.node(cur).leaf_choice) {
    const TrieNode& node = trie.node(cur);
    if (node.children.size() == 1) {
      cur = node.children.begin()->second;
      continue;
    }
    auto steps = serial::FetchStepLogprobs(backend, ctx, trie, {cur},
                                           Normalization::kPerStepRenormalized);
    if (!steps.ok()) return steps.status();
    ++result.passes_used;
    const std::vector<double>& lp = (*steps)[0];
    size_t best = 0;
    for (size_t i = 1; i < lp.size(); ++i) {
      if (lp[i] > lp[best]) best = i;
    }
    cur = std::next(node.children.begin(), static_cast<std::ptrdiff_t>(best))->second;
  }
  result.choice = *trie.node(cur).leaf_choice;
  return result;
}

int64_t GreedyPassCount(const ChoiceTrie& trie, ChoiceId choice) {
  int64_t passes = 0;
  NodeId cur = ChoiceTrie::kRoot;
  for (TokenId tok : trie.path(choice)) {
    if (trie.node(cur).children.size() > 1) ++passes;
    cur = trie.node(cur).children.at(tok);
  }
  return passes;
}

absl::StatusOr<YesNoScore> ScoreYesNo(LMBackend& backend,
                                      const ScoringContext& ctx,
                                      TokenId yes_token, TokenId no_token) {
  if (yes_token == no_token) {
    return absl::InvalidArgumentError("Yes and No resolve to the same token");
  }
  LogprobQuery q;
  q.prompt_text = ctx.prompt;
  q.image = ctx.image;
  q.candidates = {yes_token, no_token};
  auto dist = backend.NextTokenLogprobs(q);
  if (!dist.ok()) return dist.status();
  const double ly = dist->logprobs.at(yes_token);
  const double ln = dist->logprobs.at(no_token);
  if (ly == kNegInf && ln == kNegInf) return YesNoScore{0.5};
  if (ln == kNegInf) return YesNoScore{1.0};
  return YesNoScore{1.0 / (1.0 + std::exp(ln - ly))};
}

absl::StatusOr<YesNoTokens> ResolveYesNoTokens(const Vocabulary& vocab,
                                               std::optional<TokenId> yes_override,
                                               std::optional<TokenId> no_override) {
  YesNoTokens out;
  for (auto [word, override_id, slot] :
       {std::tuple{"Yes", yes_override, &out.yes},
        std::tuple{"No", no_override, &out.no}}) {
    if (override_id) {
      if (!vocab.Contains(*override_id)) {
        return absl::NotFoundError(absl::StrCat("token id ", *override_id, " not in vocabulary"));
      }
      *slot = *override_id;
      continue;
    }
    auto tokens = Encode(vocab, word);
    if (!tokens.ok()) {
      return absl::NotFoundError(absl::StrCat("\"", word, "\" is not in the vocabulary"));
    }
    *slot = tokens->front();
  }
  if (out.yes == out.no) {
    return absl::InvalidArgumentError("Yes and No resolve to the same token");
  }
  return out;
}

ChoiceId ArgmaxChoice(const std::vector<double>& log_scores) {
  ChoiceId best = 0;
  for (size_t i = 1; i < log_scores.size(); ++i) {
    if (log_scores[i] > log_scores[best]) best = static_cast<ChoiceId>(i);
  }
  return best;
}

}  // namespace choicegate
