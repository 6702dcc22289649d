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

#include "choicegate/lm_backend.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "absl/strings/str_cat.h"
#include "choicegate/json_util.h"

namespace choicegate {

absl::StatusOr<std::string> LMBackend::Generate(const GenerationRequest& req) {
  if (!capabilities().generate) {
    return absl::UnimplementedError("backend does not support generate");
  }
  if (req.max_new_tokens < 1) {
    return absl::InvalidArgumentError("max_new_tokens must be >= 1");
  }
  if (req.prompt.empty()) return absl::InvalidArgumentError("empty prompt");
  if (req.forced_prefix && req.forced_prefix->empty()) {
    return absl::InvalidArgumentError("forced_prefix must be non-empty");
  }
  ++generate_calls_;
  auto text = DoGenerate(req);
  if (!text.ok()) return text.status();
  if (req.forced_prefix && !text->starts_with(*req.forced_prefix)) {
    return absl::InternalError("backend output does not begin with forced_prefix");
  }
  // Model output is stored in JSON caches, which require valid UTF-8.
  return SanitizeUtf8(*text);
}

absl::StatusOr<NextTokenDistribution> LMBackend::NextTokenLogprobs(
    const LogprobQuery& query) {
  if (!capabilities().logprobs) {
    return absl::UnimplementedError("backend does not support logprobs");
  }
  if (query.candidates.empty()) {
    return absl::InvalidArgumentError("candidate set is empty");
  }
  ++forward_passes_;
  auto dist = DoNextTokenLogprobs(query);
  if (!dist.ok()) return dist.status();
  if (absl::Status s = ValidateDistribution(*dist, query.candidates); !s.ok()) {
    return s;
  }
  return dist;
}

absl::StatusOr<TokenSequence> LMBackend::EncodeText(const std::string& text) {
  if (!capabilities().encode) {
    return absl::UnimplementedError("backend does not offer a tokenizer");
  }
  return DoEncode(text);
}

absl::StatusOr<TokenSequence> LMBackend::DoEncode(const std::string&) {
  return absl::UnimplementedError("backend does not offer a tokenizer");
}

absl::Status ValidateDistribution(const NextTokenDistribution& dist,
                                  const std::vector<TokenId>& candidates) {
  if (std::isnan(dist.logsumexp_all)) {
    return absl::DataLossError("logsumexp_all is NaN");
  }
  for (TokenId id : candidates) {
    auto it = dist.logprobs.find(id);
    if (it == dist.logprobs.end()) {
      return absl::DataLossError(absl::StrCat("missing candidate ", id));
    }
    if (std::isnan(it->second) || it->second > dist.logsumexp_all + 1e-9) {
      return absl::DataLossError(
          absl::StrCat("logprob for ", id, " exceeds logsumexp_all"));
    }
  }
  if (dist.logprobs.size() != std::set<TokenId>(candidates.begin(), candidates.end()).size()) {
    return absl::DataLossError("distribution has entries beyond the candidates");
  }
  return absl::OkStatus();
}

double LogSumExp(const std::vector<double>& values) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  double max = kNegInf;
  for (double v : values) max = std::max(max, v);
  if (max == kNegInf) return kNegInf;
  if (std::isinf(max)) return max;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - max);
  return max + std::log(sum);
}

}  // namespace choicegate
