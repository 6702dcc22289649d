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

#ifndef CHOICEGATE_CHOICE_TRIE_H_
#define CHOICEGATE_CHOICE_TRIE_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include "absl/strings/string_view.h"
#include <unordered_map>
#include <vector>

#include "absl/status/statusor.h"
#include "choicegate/tokenizer.h"

namespace choicegate {

using ChoiceId = int32_t;
using NodeId = int32_t;

// Ordered, duplicate-free list of choice labels. The index of a label is its
// choice id.
class ChoiceSet {
 public:
  static absl::StatusOr<ChoiceSet> Create(std::vector<std::string> labels);

  size_t size() const { return labels_.size(); }
  const std::string& label(ChoiceId id) const { return labels_.at(id); }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<ChoiceId> Find(absl::string_view label) const;
  bool Contains(ChoiceId id) const {
    return id >= 0 && static_cast<size_t>(id) < labels_.size();
  }

  // Labels joined with '\n', the rendering used inside prompts.
  std::string Joined() const;

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, ChoiceId> index_;
};

// One label per line; blank lines are rejected with their line number.
absl::StatusOr<ChoiceSet> LoadChoiceList(const std::string& path);

struct TrieNode {
  // Sorted by token id. The eos edge, when present, is an ordinary child that
  // leads to a leaf.
  std::map<TokenId, NodeId> children;
  int32_t choice_count = 0;
  // Choice reachable through this node's eos edge.
  std::optional<ChoiceId> terminal_choice;
  // Set on leaves only.
  std::optional<ChoiceId> leaf_choice;
  NodeId parent = -1;
  TokenId token = -1;  // edge label from parent
  int32_t depth = 0;
};

struct TruncationPoint {
  ChoiceId choice = 0;
  // Number of leading path tokens whose probabilities are multiplied.
  int32_t included_len = 0;
};

enum class PassMode { kFull, kYesNo, kTruncated };

// Prefix tree over tokenized labels, each path terminated by eos so that the
// path set is prefix-free. Immutable after construction.
class ChoiceTrie {
 public:
  static absl::StatusOr<ChoiceTrie> Build(const ChoiceSet& choices,
                                          const Vocabulary& vocab);
  // Builds from pre-tokenized labels (e.g. from a backend tokenizer). Paths
  // must be non-empty, free of eos and pairwise distinct.
  static absl::StatusOr<ChoiceTrie> FromTokenPaths(
      std::vector<TokenSequence> label_tokens, TokenId eos_id);

  static constexpr NodeId kRoot = 0;

  size_t num_choices() const { return paths_.size(); }
  size_t num_nodes() const { return nodes_.size(); }
  TokenId eos_id() const { return eos_id_; }
  const TrieNode& node(NodeId id) const { return nodes_.at(id); }
  // Label tokens followed by eos.
  const TokenSequence& path(ChoiceId choice) const { return paths_.at(choice); }

  // Token prefix leading from the root to `node`.
  TokenSequence Prefix(NodeId node) const;
  // Node reached after the first `len` tokens of a choice path.
  NodeId NodeAt(ChoiceId choice, int32_t len) const;

  absl::StatusOr<TruncationPoint> Truncation(ChoiceId choice) const;
  absl::StatusOr<std::vector<TokenId>> AllowedTokens(NodeId node) const;

  bool HasNonEosChild(NodeId node) const;
  // Nodes that need a next-token distribution under each accounting mode, in
  // ascending node id.
  std::vector<NodeId> FullPassNodes() const;
  std::vector<NodeId> TruncatedPassNodes() const;

  int64_t ForwardPassCount(PassMode mode) const;

 private:
  TokenId eos_id_ = 0;
  std::vector<TrieNode> nodes_;
  std::vector<TokenSequence> paths_;
};

// Forward-pass accounting for one choice set.
struct PassReport {
  std::string name;
  int64_t full = 0;
  int64_t yes_no = 0;
  int64_t truncated = 0;
};

PassReport MakePassReport(std::string name, const ChoiceTrie& trie);
// Throughput gain of `mode_count` over the full count, in percent:
// (full - mode) / mode * 100. Empty when mode_count is zero.
std::optional<double> SpeedupPercent(int64_t full, int64_t mode_count);
std::string RenderPassTable(const std::vector<PassReport>& rows);

}  // namespace choicegate

#endif  // CHOICEGATE_CHOICE_TRIE_H_
