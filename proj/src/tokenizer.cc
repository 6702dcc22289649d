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

#include "choicegate/tokenizer.h"

#include <algorithm>
#include <utility>

#include "absl/strings/str_cat.h"
#include "choicegate/json_util.h"

namespace choicegate {

absl::StatusOr<Vocabulary> Vocabulary::Create(
    std::map<std::string, TokenId> entries, TokenId eos_id) {
  if (eos_id < 0) return absl::InvalidArgumentError("eos_id must be >= 0");
  Vocabulary vocab;
  vocab.eos_id_ = eos_id;
  for (const auto& [token, id] : entries) {
    if (token.empty()) return absl::InvalidArgumentError("empty token string");
    if (id < 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("negative id ", id, " for token \"", token, "\""));
    }
    if (id == eos_id) {
      return absl::InvalidArgumentError(
          absl::StrCat("token \"", token, "\" collides with eos_id ", id));
    }
    if (!vocab.by_id_.emplace(id, token).second) {
      return absl::AlreadyExistsError(absl::StrCat("duplicate id ", id));
    }
    vocab.max_token_bytes_ = std::max(vocab.max_token_bytes_, token.size());
  }
  vocab.by_string_ = std::move(entries);
  return vocab;
}

absl::StatusOr<Vocabulary> Vocabulary::Parse(absl::string_view json_text) {
  auto parsed = ParseJsonStrict(json_text);
  if (!parsed.ok()) {
    if (absl::IsAlreadyExists(parsed.status())) {
      return absl::AlreadyExistsError(
          absl::StrCat("duplicate token string: ", parsed.status().message()));
    }
    return parsed.status();
  }
  const Json& doc = *parsed;
  if (!doc.is_object() || !doc.contains("tokens") || !doc.contains("eos_id")) {
    return absl::InvalidArgumentError(
        "vocabulary must be an object with \"tokens\" and \"eos_id\"");
  }
  const Json& tokens = doc["tokens"];
  if (!tokens.is_object() || !doc["eos_id"].is_number_integer()) {
    return absl::InvalidArgumentError(
        "\"tokens\" must be an object and \"eos_id\" an integer");
  }
  std::map<std::string, TokenId> entries;
  for (const auto& [token, id] : tokens.items()) {
    if (!id.is_number_integer()) {
      return absl::InvalidArgumentError(
          absl::StrCat("id for token \"", token, "\" is not an integer"));
    }
    entries.emplace(token, id.get<TokenId>());
  }
  return Create(std::move(entries), doc["eos_id"].get<TokenId>());
}

std::optional<TokenId> Vocabulary::Find(absl::string_view token) const {
  auto it = by_string_.find(std::string(token));
  if (it == by_string_.end()) return std::nullopt;
  return it->second;
}

const std::string* Vocabulary::TokenString(TokenId id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &it->second;
}

std::string Vocabulary::ToJson() const {
  Json tokens = Json::object();
  for (const auto& [token, id] : by_string_) tokens[token] = id;
  Json doc = {{"tokens", std::move(tokens)}, {"eos_id", eos_id_}};
  return doc.dump();
}

absl::StatusOr<Vocabulary> LoadVocabulary(const std::string& path) {
  auto text = ReadFile(path);
  if (!text.ok()) return text.status();
  auto vocab = Vocabulary::Parse(*text);
  if (!vocab.ok()) {
    return absl::Status(vocab.status().code(),
                        absl::StrCat(path, ": ", vocab.status().message()));
  }
  return vocab;
}

absl::StatusOr<TokenSequence> Encode(const Vocabulary& vocab,
                                     absl::string_view text) {
  if (text.empty()) return absl::InvalidArgumentError("cannot encode empty text");
  TokenSequence out;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t len = std::min(vocab.max_token_bytes(), text.size() - pos);
    std::optional<TokenId> match;
    for (; len > 0; --len) {
      match = vocab.Find(text.substr(pos, len));
      if (match) break;
    }
    if (!match) {
      return absl::InvalidArgumentError(
          absl::StrCat("untokenizable text at position ", pos));
    }
    out.push_back(*match);
    pos += len;
  }
  return out;
}

absl::StatusOr<std::string> Decode(const Vocabulary& vocab,
                                   const TokenSequence& seq) {
  std::string out;
  for (TokenId id : seq) {
    if (id == vocab.eos_id()) {
      return absl::InvalidArgumentError("cannot decode eos_id");
    }
    const std::string* token = vocab.TokenString(id);
    if (token == nullptr) {
      return absl::NotFoundError(absl::StrCat("unknown token id ", id));
    }
    out += *token;
  }
  return out;
}

}  // namespace choicegate
