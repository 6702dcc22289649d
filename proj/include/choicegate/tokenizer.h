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

#ifndef CHOICEGATE_TOKENIZER_H_
#define CHOICEGATE_TOKENIZER_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include "absl/strings/string_view.h"
#include <unordered_map>
#include <vector>

#include "absl/status/statusor.h"

namespace choicegate {

using TokenId = int32_t;
using TokenSequence = std::vector<TokenId>;

// Immutable token string <-> id table with a reserved end-of-choice id.
//
// Token strings are matched as raw UTF-8 bytes; no normalization is applied.
class Vocabulary {
 public:
  // Validates and builds a vocabulary. Rejects empty token strings, negative
  // ids, repeated ids and an eos id that collides with an entry.
  static absl::StatusOr<Vocabulary> Create(
      std::map<std::string, TokenId> entries, TokenId eos_id);

  // Parses the JSON vocabulary body: {"tokens": {str: id}, "eos_id": id}.
  static absl::StatusOr<Vocabulary> Parse(absl::string_view json_text);

  size_t size() const { return by_string_.size(); }
  TokenId eos_id() const { return eos_id_; }
  size_t max_token_bytes() const { return max_token_bytes_; }

  std::optional<TokenId> Find(absl::string_view token) const;
  // Returns nullptr for unknown ids and for eos.
  const std::string* TokenString(TokenId id) const;
  bool Contains(TokenId id) const { return by_id_.contains(id); }

  const std::map<std::string, TokenId>& entries() const { return by_string_; }

  // Serializes back to the vocabulary file format.
  std::string ToJson() const;

 private:
  Vocabulary() = default;

  std::map<std::string, TokenId> by_string_;
  std::unordered_map<TokenId, std::string> by_id_;
  TokenId eos_id_ = 0;
  size_t max_token_bytes_ = 0;
};

absl::StatusOr<Vocabulary> LoadVocabulary(const std::string& path);

// Greedy longest-match segmentation. Fails with the byte offset of the first
// position that no entry covers.
absl::StatusOr<TokenSequence> Encode(const Vocabulary& vocab,
                                     absl::string_view text);

absl::StatusOr<std::string> Decode(const Vocabulary& vocab,
                                   const TokenSequence& seq);

}  // namespace choicegate

#endif  // CHOICEGATE_TOKENIZER_H_
