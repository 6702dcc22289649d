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

#ifndef CHOICEGATE_MOCK_BACKEND_H_
#define CHOICEGATE_MOCK_BACKEND_H_

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/statusor.h"
#include "choicegate/json_util.h"
#include "choicegate/lm_backend.h"
#include "choicegate/tokenizer.h"

namespace choicegate {

// Selects which table entries apply to a request. Unset fields match anything.
// When several entries match, the most specific wins (exact prompt, then
// prompt substring, then image); ties go to the earliest entry.
struct MockMatcher {
  std::optional<std::string> prompt;
  std::optional<std::string> prompt_contains;
  std::optional<std::string> image;

  bool Matches(const std::optional<std::string>& prompt_text,
               const std::optional<std::string>& image_ref) const;
  int Specificity() const;
};

struct MockDistribution {
  MockMatcher match;
  TokenSequence prefix;
  // Listed token probabilities. The remaining mass (1 - sum) is spread evenly
  // over every unlisted token, eos included.
  std::map<TokenId, double> probs;
};

struct MockGeneration {
  MockMatcher match;
  std::string text;
};

struct MockTable {
  std::optional<Vocabulary> vocab;
  bool uniform_fallback = false;
  std::vector<MockDistribution> distributions;
  std::vector<MockGeneration> generations;
  std::optional<std::string> default_text;

  static absl::StatusOr<MockTable> FromJson(const Json& doc);
  Json ToJson() const;
};

absl::StatusOr<MockTable> LoadMockTable(const std::string& path);

// Deterministic table-driven model. Pure and safe for concurrent use.
class MockBackend : public LMBackend {
 public:
  // `vocab` overrides the table's embedded vocabulary; one of the two must be
  // present.
  static absl::StatusOr<std::unique_ptr<MockBackend>> Create(
      MockTable table, std::optional<Vocabulary> vocab = std::nullopt);

  BackendCapabilities capabilities() const override {
    return {.generate = true, .logprobs = true, .encode = true, .concurrent = true};
  }
  std::string Identity() const override { return identity_; }
  absl::StatusOr<Vocabulary> FetchVocabulary() override { return vocab_; }

  const Vocabulary& vocab() const { return vocab_; }
  const MockTable& table() const { return table_; }

 protected:
  absl::StatusOr<std::string> DoGenerate(const GenerationRequest& req) override;
  absl::StatusOr<NextTokenDistribution> DoNextTokenLogprobs(
      const LogprobQuery& query) override;
  absl::StatusOr<TokenSequence> DoEncode(const std::string& text) override;

 private:
  MockBackend(MockTable table, Vocabulary vocab);

  MockTable table_;
  Vocabulary vocab_;
  std::string identity_;
  std::map<TokenSequence, std::vector<size_t>> by_prefix_;
};

}  // namespace choicegate

#endif  // CHOICEGATE_MOCK_BACKEND_H_
