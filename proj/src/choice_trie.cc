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

#include "choicegate/choice_trie.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <utility>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "choicegate/json_util.h"

namespace choicegate {

absl::StatusOr<ChoiceSet> ChoiceSet::Create(std::vector<std::string> labels) {
  if (labels.empty()) return absl::InvalidArgumentError("choice set is empty");
  ChoiceSet set;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].empty()) {
      return absl::InvalidArgumentError(absl::StrCat("choice ", i, " is empty"));
    }
    if (SanitizeUtf8(labels[i]) != labels[i]) {
      return absl::InvalidArgumentError(absl::StrCat("choice ", i, " is not valid UTF-8"));
    }
    if (!set.index_.emplace(labels[i], static_cast<ChoiceId>(i)).second) {
      return absl::AlreadyExistsError(
          absl::StrCat("duplicate label \"", labels[i], "\""));
    }
  }
  set.labels_ = std::move(labels);
  return set;
}

std::optional<ChoiceId> ChoiceSet::Find(absl::string_view label) const {
  auto it = index_.find(std::string(label));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string ChoiceSet::Joined() const { return absl::StrJoin(labels_, "\n"); }

absl::StatusOr<ChoiceSet> LoadChoiceList(const std::string& path) {
  auto text = ReadFile(path);
  if (!text.ok()) return text.status();
  std::vector<std::string> labels = SplitLines(*text);
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat(path, ":", i + 1, ": empty label"));
    }
  }
  auto set = ChoiceSet::Create(std::move(labels));
  if (!set.ok()) {
    return absl::Status(set.status().code(),
                        absl::StrCat(path, ": ", set.status().message()));
  }
  return set;
}

absl::StatusOr<ChoiceTrie> ChoiceTrie::Build(const ChoiceSet& choices,
                                             const Vocabulary& vocab) {
  std::vector<TokenSequence> tokens;
  tokens.reserve(choices.size());
  for (const std::string& label : choices.labels()) {
    auto seq = Encode(vocab, label);
    if (!seq.ok()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "label \"", label, "\": ", seq.status().message()));
    }
    tokens.push_back(*std::move(seq));
  }
  return FromTokenPaths(std::move(tokens), vocab.eos_id());
}

absl::StatusOr<ChoiceTrie> ChoiceTrie::FromTokenPaths(
    std::vector<TokenSequence> label_tokens, TokenId eos_id) {
  if (label_tokens.empty()) {
    return absl::InvalidArgumentError("choice set is empty");
  }
  ChoiceTrie trie;
  trie.eos_id_ = eos_id;
  trie.nodes_.emplace_back();
  std::set<TokenSequence> seen;
  for (size_t c = 0; c < label_tokens.size(); ++c) {
    TokenSequence path = std::move(label_tokens[c]);
    if (path.empty()) {
      return absl::InvalidArgumentError(absl::StrCat("choice ", c, " has no tokens"));
    }
    if (std::find(path.begin(), path.end(), eos_id) != path.end()) {
      return absl::InvalidArgumentError(absl::StrCat("choice ", c, " contains eos"));
    }
    if (!seen.insert(path).second) {
      return absl::AlreadyExistsError(
          absl::StrCat("choice ", c, " duplicates an earlier token path"));
    }
    path.push_back(eos_id);

    const auto choice = static_cast<ChoiceId>(c);
    NodeId cur = kRoot;
    trie.nodes_[cur].choice_count++;
    for (TokenId tok : path) {
      auto it = trie.nodes_[cur].children.find(tok);
      NodeId next;
      if (it == trie.nodes_[cur].children.end()) {
        next = static_cast<NodeId>(trie.nodes_.size());
        TrieNode child;
        child.parent = cur;
        child.token = tok;
        child.depth = trie.nodes_[cur].depth + 1;
        trie.nodes_.push_back(std::move(child));
        trie.nodes_[cur].children.emplace(tok, next);
      } else {
        next = it->second;
      }
      if (tok == eos_id) trie.nodes_[cur].terminal_choice = choice;
      cur = next;
      trie.nodes_[cur].choice_count++;
    }
    trie.nodes_[cur].leaf_choice = choice;
    trie.paths_.push_back(std::move(path));
  }
  return trie;
}

TokenSequence ChoiceTrie::Prefix(NodeId node) const {
  TokenSequence out;
  for (NodeId cur = node; cur != kRoot; cur = nodes_.at(cur).parent) {
    out.push_back(nodes_[cur].token);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

NodeId ChoiceTrie::NodeAt(ChoiceId choice, int32_t len) const {
  const TokenSequence& p = paths_.at(choice);
  NodeId cur = kRoot;
  for (int32_t i = 0; i < len; ++i) cur = nodes_[cur].children.at(p[i]);
  return cur;
}

absl::StatusOr<TruncationPoint> ChoiceTrie::Truncation(ChoiceId choice) const {
  if (choice < 0 || static_cast<size_t>(choice) >= paths_.size()) {
    return absl::OutOfRangeError(absl::StrCat("invalid choice id ", choice));
  }
  const TokenSequence& p = paths_[choice];
  NodeId cur = kRoot;
  for (size_t i = 0; i < p.size(); ++i) {
    cur = nodes_[cur].children.at(p[i]);
    if (nodes_[cur].choice_count == 1) {
      return TruncationPoint{choice, static_cast<int32_t>(i + 1)};
    }
  }
  // Unreachable for prefix-free paths: every leaf has count 1.
  return TruncationPoint{choice, static_cast<int32_t>(p.size())};
}

absl::StatusOr<std::vector<TokenId>> ChoiceTrie::AllowedTokens(
    NodeId node) const {
  if (node < 0 || static_cast<size_t>(node) >= nodes_.size()) {
    return absl::OutOfRangeError(absl::StrCat("invalid node ", node));
  }
  std::vector<TokenId> out;
  out.reserve(nodes_[node].children.size());
  for (const auto& [tok, child] : nodes_[node].children) out.push_back(tok);
  return out;
}

bool ChoiceTrie::HasNonEosChild(NodeId node) const {
  const auto& children = nodes_.at(node).children;
  return children.size() > (children.contains(eos_id_) ? 1u : 0u);
}

std::vector<NodeId> ChoiceTrie::FullPassNodes() const {
  std::vector<NodeId> out;
  for (NodeId n = 0; n < static_cast<NodeId>(nodes_.size()); ++n) {
    if (HasNonEosChild(n)) out.push_back(n);
  }
  return out;
}

std::vector<NodeId> ChoiceTrie::TruncatedPassNodes() const {
  std::vector<NodeId> out;
  for (NodeId n = 0; n < static_cast<NodeId>(nodes_.size()); ++n) {
    if (nodes_[n].choice_count >= 2) out.push_back(n);
  }
  return out;
}

int64_t ChoiceTrie::ForwardPassCount(PassMode mode) const {
  switch (mode) {
    case PassMode::kYesNo:
      return static_cast<int64_t>(paths_.size());
    case PassMode::kFull:
      return static_cast<int64_t>(FullPassNodes().size());
    case PassMode::kTruncated:
      return static_cast<int64_t>(TruncatedPassNodes().size());
  }
  return 0;
}

PassReport MakePassReport(std::string name, const ChoiceTrie& trie) {
  return PassReport{std::move(name), trie.ForwardPassCount(PassMode::kFull),
                    trie.ForwardPassCount(PassMode::kYesNo),
                    trie.ForwardPassCount(PassMode::kTruncated)};
}

std::optional<double> SpeedupPercent(int64_t full, int64_t mode_count) {
  if (mode_count <= 0) return std::nullopt;
  return 100.0 * static_cast<double>(full - mode_count) /
         static_cast<double>(mode_count);
}

namespace {

std::string SpeedupCell(int64_t full, int64_t mode_count) {
  auto pct = SpeedupPercent(full, mode_count);
  if (!pct) return "(n/a)";
  return absl::StrFormat("(%+.0f%%)", std::round(*pct));
}

}  // namespace

std::string RenderPassTable(const std::vector<PassReport>& rows) {
  size_t name_width = 6;
  for (const PassReport& r : rows) name_width = std::max(name_width, r.name.size());
  const int w = static_cast<int>(name_width);
  std::string out = absl::StrFormat("%-*s  %12s  %12s  %14s\n", w, "Method",
                                    "Full Prob", "Yes/No", "Truncated Prob");
  for (const PassReport& r : rows) {
    out += absl::StrFormat("%-*s  %12d  %12d  %14d\n", w, r.name, r.full,
                           r.yes_no, r.truncated);
    out += absl::StrFormat("%-*s  %12s  %12s  %14s\n", w, "",
                           SpeedupCell(r.full, r.full),
                           SpeedupCell(r.full, r.yes_no),
                           SpeedupCell(r.full, r.truncated));
  }
  return out;
}

}  // namespace choicegate
