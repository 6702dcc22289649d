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

#ifndef CHOICEGATE_LM_BACKEND_H_
#define CHOICEGATE_LM_BACKEND_H_

#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "choicegate/tokenizer.h"

namespace choicegate {

// Log-probabilities for a set of candidate tokens at one prefix context.
struct NextTokenDistribution {
  std::map<TokenId, double> logprobs;
  // Log of the total mass over the whole vocabulary; 0 for a normalized
  // distribution. Raw probabilities are exp(logprob - logsumexp_all).
  double logsumexp_all = 0.0;
};

struct GenerationRequest {
  std::string prompt;
  // Opaque image reference forwarded verbatim to the backend.
  std::optional<std::string> image;
  // Text forced at the start of the assistant turn; returned as part of the
  // generated text.
  std::optional<std::string> forced_prefix;
  int32_t max_new_tokens = 512;
};

// A next-token query. The context is `prompt_text` (if any) followed by
// `prefix_tokens`.
struct LogprobQuery {
  std::optional<std::string> prompt_text;
  std::optional<std::string> image;
  TokenSequence prefix_tokens;
  std::vector<TokenId> candidates;
};

struct BackendCapabilities {
  bool generate = false;
  bool logprobs = false;
  bool encode = false;
  // False means callers must not issue overlapping requests.
  bool concurrent = false;
};

// Uniform access to a language model. Public entry points validate inputs and
// outputs and count calls; implementations override the Do* hooks.
//
// Every successful or failed NextTokenLogprobs call counts as one forward
// pass, which is the accounting unit compared against ChoiceTrie counts.
class LMBackend {
 public:
  virtual ~LMBackend() = default;

  virtual BackendCapabilities capabilities() const = 0;
  // Short stable description used in cache config hashes.
  virtual std::string Identity() const = 0;

  absl::StatusOr<std::string> Generate(const GenerationRequest& req);
  absl::StatusOr<NextTokenDistribution> NextTokenLogprobs(
      const LogprobQuery& query);
  absl::StatusOr<TokenSequence> EncodeText(const std::string& text);
  virtual absl::StatusOr<Vocabulary> FetchVocabulary() = 0;

  int64_t forward_passes() const { return forward_passes_.load(); }
  int64_t generate_calls() const { return generate_calls_.load(); }
  void ResetCounters() {
    forward_passes_ = 0;
    generate_calls_ = 0;
  }

 protected:
  virtual absl::StatusOr<std::string> DoGenerate(
      const GenerationRequest& req) = 0;
  virtual absl::StatusOr<NextTokenDistribution> DoNextTokenLogprobs(
      const LogprobQuery& query) = 0;
  virtual absl::StatusOr<TokenSequence> DoEncode(const std::string& text);

 private:
  std::atomic<int64_t> forward_passes_{0};
  std::atomic<int64_t> generate_calls_{0};
};

// Checks the distribution covers exactly the candidates and that no logprob
// exceeds logsumexp_all (beyond 1e-9).
absl::Status ValidateDistribution(const NextTokenDistribution& dist,
                                  const std::vector<TokenId>& candidates);

// Numerically stable log(sum(exp(x))). Returns -inf for an empty or all -inf
// input.
double LogSumExp(const std::vector<double>& values);

}  // namespace choicegate

#endif  // CHOICEGATE_LM_BACKEND_H_
