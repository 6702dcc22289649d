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

#ifndef CHOICEGATE_REMOTE_BACKEND_H_
#define CHOICEGATE_REMOTE_BACKEND_H_

#include <memory>
#include <mutex>
#include <string>

#include "absl/status/statusor.h"
#include "choicegate/json_util.h"
#include "choicegate/lm_backend.h"

namespace httplib {
class Client;
}

namespace choicegate {

// JSON bodies of the HTTP protocol spoken with model servers:
//
//   POST /v1/generate  {prompt, image, forced_prefix, max_new_tokens} -> {text}
//   POST /v1/logprobs  {prefix_tokens, prefix_text, candidates, image}
//                        -> {logprobs: {"<id>": float|null}, logsumexp_all}
//   POST /v1/encode    {text} -> {tokens}
//   GET  /v1/vocab     -> vocabulary file body
//
// Errors are {"error": message} with a non-2xx status. A null logprob is -inf.
// The logprobs context is prefix_text followed by prefix_tokens; "image" is
// optional and null for text-only queries.
namespace wire {

Json GenerateRequestToJson(const GenerationRequest& req);
absl::StatusOr<GenerationRequest> GenerateRequestFromJson(const Json& body);

Json LogprobQueryToJson(const LogprobQuery& query);
absl::StatusOr<LogprobQuery> LogprobQueryFromJson(const Json& body);

Json DistributionToJson(const NextTokenDistribution& dist);
absl::StatusOr<NextTokenDistribution> DistributionFromJson(const Json& body);

Json ErrorToJson(const absl::Status& status);
int HttpStatusFor(const absl::Status& status);
absl::Status StatusFromHttp(int http_status, const std::string& body);

}  // namespace wire

struct RemoteOptions {
  double connect_timeout_s = 10.0;
  double read_timeout_s = 600.0;
};

// HTTP client for a model server. Uses one keep-alive connection and
// serializes requests, so it reports concurrent == false.
class RemoteBackend : public LMBackend {
 public:
  // `base_url` is "http://host:port".
  static absl::StatusOr<std::unique_ptr<RemoteBackend>> Create(
      const std::string& base_url, RemoteOptions options = {});
  ~RemoteBackend() override;

  BackendCapabilities capabilities() const override {
    return {.generate = true, .logprobs = true, .encode = true, .concurrent = false};
  }
  std::string Identity() const override { return "remote:" + base_url_; }
  absl::StatusOr<Vocabulary> FetchVocabulary() override;

 protected:
  absl::StatusOr<std::string> DoGenerate(const GenerationRequest& req) override;
  absl::StatusOr<NextTokenDistribution> DoNextTokenLogprobs(
      const LogprobQuery& query) override;
  absl::StatusOr<TokenSequence> DoEncode(const std::string& text) override;

 private:
  RemoteBackend(std::string base_url, std::unique_ptr<httplib::Client> client);
  absl::StatusOr<Json> Post(const std::string& path, const Json& body);

  std::string base_url_;
  std::mutex mu_;
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace choicegate

#endif  // CHOICEGATE_REMOTE_BACKEND_H_
