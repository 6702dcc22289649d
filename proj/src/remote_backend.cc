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

#include "choicegate/remote_backend.h"

#include <charconv>
#include <utility>

#include "absl/strings/str_cat.h"
#include "httplib.h"

namespace choicegate {
namespace wire {
namespace {

Json OptionalString(const std::optional<std::string>& s) {
  return s ? Json(*s) : Json(nullptr);
}

absl::StatusOr<std::optional<std::string>> ReadOptionalString(const Json& body,
                                                              const char* key) {
  if (!body.contains(key) || body[key].is_null()) return std::nullopt;
  if (!body[key].is_string()) {
    return absl::InvalidArgumentError(absl::StrCat("\"", key, "\" must be a string or null"));
  }
  return body[key].get<std::string>();
}

}  // namespace

Json GenerateRequestToJson(const GenerationRequest& req) {
  return Json{{"prompt", req.prompt},
              {"image", OptionalString(req.image)},
              {"forced_prefix", OptionalString(req.forced_prefix)},
              {"max_new_tokens", req.max_new_tokens}};
}

absl::StatusOr<GenerationRequest> GenerateRequestFromJson(const Json& body) {
  if (!body.is_object() || !body.contains("prompt") || !body["prompt"].is_string()) {
    return absl::InvalidArgumentError("\"prompt\" must be a string");
  }
  GenerationRequest req;
  req.prompt = body["prompt"].get<std::string>();
  auto image = ReadOptionalString(body, "image");
  if (!image.ok()) return image.status();
  req.image = *image;
  auto prefix = ReadOptionalString(body, "forced_prefix");
  if (!prefix.ok()) return prefix.status();
  req.forced_prefix = *prefix;
  if (body.contains("max_new_tokens")) {
    if (!body["max_new_tokens"].is_number_integer()) {
      return absl::InvalidArgumentError("\"max_new_tokens\" must be an integer");
    }
    req.max_new_tokens = body["max_new_tokens"].get<int32_t>();
  }
  return req;
}

Json LogprobQueryToJson(const LogprobQuery& query) {
  return Json{{"prefix_tokens", query.prefix_tokens},
              {"prefix_text", OptionalString(query.prompt_text)},
              {"candidates", query.candidates},
              {"image", OptionalString(query.image)}};
}

absl::StatusOr<LogprobQuery> LogprobQueryFromJson(const Json& body) {
  if (!body.is_object()) return absl::InvalidArgumentError("body must be an object");
  LogprobQuery q;
  try {
    if (body.contains("prefix_tokens") && !body["prefix_tokens"].is_null()) {
      q.prefix_tokens = body["prefix_tokens"].get<TokenSequence>();
    }
    q.candidates = body.at("candidates").get<std::vector<TokenId>>();
  } catch (const Json::exception& e) {
    return absl::InvalidArgumentError(e.what());
  }
  auto text = ReadOptionalString(body, "prefix_text");
  if (!text.ok()) return text.status();
  q.prompt_text = *text;
  auto image = ReadOptionalString(body, "image");
  if (!image.ok()) return image.status();
  q.image = *image;
  return q;
}

Json DistributionToJson(const NextTokenDistribution& dist) {
  Json logprobs = Json::object();
  for (const auto& [id, lp] : dist.logprobs) {
    logprobs[std::to_string(id)] = LogprobToJson(lp);
  }
  return Json{{"logprobs", std::move(logprobs)},
              {"logsumexp_all", LogprobToJson(dist.logsumexp_all)}};
}

absl::StatusOr<NextTokenDistribution> DistributionFromJson(const Json& body) {
  if (!body.is_object() || !body.contains("logprobs") ||
      !body["logprobs"].is_object() || !body.contains("logsumexp_all")) {
    return absl::DataLossError("malformed logprobs response");
  }
  NextTokenDistribution dist;
  try {
    dist.logsumexp_all = LogprobFromJson(body["logsumexp_all"]);
    for (const auto& [key, value] : body["logprobs"].items()) {
      TokenId id = 0;
      auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), id);
      if (ec != std::errc() || ptr != key.data() + key.size()) {
        return absl::DataLossError(absl::StrCat("bad token key \"", key, "\""));
      }
      dist.logprobs[id] = LogprobFromJson(value);
    }
  } catch (const Json::exception& e) {
    return absl::DataLossError(e.what());
  }
  return dist;
}

Json ErrorToJson(const absl::Status& status) {
  return Json{{"error", std::string(status.message())}};
}

int HttpStatusFor(const absl::Status& status) {
  switch (status.code()) {
    case absl::StatusCode::kOk:
      return 200;
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kOutOfRange:
      return 400;
    case absl::StatusCode::kNotFound:
      return 404;
    case absl::StatusCode::kUnimplemented:
      return 501;
    case absl::StatusCode::kUnavailable:
      return 503;
    default:
      return 500;
  }
}

absl::Status StatusFromHttp(int http_status, const std::string& body) {
  if (http_status >= 200 && http_status < 300) return absl::OkStatus();
  std::string message = absl::StrCat("HTTP ", http_status);
  Json doc = Json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_object() && doc.contains("error") && doc["error"].is_string()) {
    absl::StrAppend(&message, ": ", doc["error"].get<std::string>());
  }
  switch (http_status) {
    case 400:
      return absl::InvalidArgumentError(message);
    case 404:
      return absl::NotFoundError(message);
    case 501:
      return absl::UnimplementedError(message);
    case 503:
      return absl::UnavailableError(message);
    default:
      return absl::InternalError(message);
  }
}

}  // namespace wire

absl::StatusOr<std::unique_ptr<RemoteBackend>> RemoteBackend::Create(
    const std::string& base_url, RemoteOptions options) {
  if (!base_url.starts_with("http://")) {
    return absl::InvalidArgumentError(
        absl::StrCat("backend URL must start with http://, got \"", base_url, "\""));
  }
  auto client = std::make_unique<httplib::Client>(base_url);
  if (!client->is_valid()) {
    return absl::InvalidArgumentError(absl::StrCat("invalid backend URL ", base_url));
  }
  client->set_keep_alive(true);
  auto seconds = [](double s) { return static_cast<time_t>(s); };
  auto micros = [](double s) {
    return static_cast<time_t>((s - static_cast<double>(static_cast<time_t>(s))) * 1e6);
  };
  client->set_connection_timeout(seconds(options.connect_timeout_s),
                                 micros(options.connect_timeout_s));
  client->set_read_timeout(seconds(options.read_timeout_s), micros(options.read_timeout_s));
  return std::unique_ptr<RemoteBackend>(new RemoteBackend(base_url, std::move(client)));
}

RemoteBackend::RemoteBackend(std::string base_url,
                             std::unique_ptr<httplib::Client> client)
    : base_url_(std::move(base_url)), client_(std::move(client)) {}

RemoteBackend::~RemoteBackend() = default;

absl::StatusOr<Json> RemoteBackend::Post(const std::string& path, const Json& body) {
  httplib::Result res;
  {
    std::lock_guard<std::mutex> lock(mu_);
    res = client_->Post(path, body.dump(), "application/json");
  }
  if (!res) {
    return absl::UnavailableError(absl::StrCat(
        "backend unreachable at ", base_url_, path, ": ", httplib::to_string(res.error())));
  }
  if (absl::Status s = wire::StatusFromHttp(res->status, res->body); !s.ok()) return s;
  Json doc = Json::parse(res->body, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) return absl::DataLossError("backend returned malformed JSON");
  return doc;
}

absl::StatusOr<std::string> RemoteBackend::DoGenerate(const GenerationRequest& req) {
  auto doc = Post("/v1/generate", wire::GenerateRequestToJson(req));
  if (!doc.ok()) return doc.status();
  if (!doc->is_object() || !doc->contains("text") || !(*doc)["text"].is_string()) {
    return absl::DataLossError("generate response lacks \"text\"");
  }
  return (*doc)["text"].get<std::string>();
}

absl::StatusOr<NextTokenDistribution> RemoteBackend::DoNextTokenLogprobs(
    const LogprobQuery& query) {
  auto doc = Post("/v1/logprobs", wire::LogprobQueryToJson(query));
  if (!doc.ok()) return doc.status();
  return wire::DistributionFromJson(*doc);
}

absl::StatusOr<TokenSequence> RemoteBackend::DoEncode(const std::string& text) {
  auto doc = Post("/v1/encode", Json{{"text", text}});
  if (!doc.ok()) return doc.status();
  try {
    return doc->at("tokens").get<TokenSequence>();
  } catch (const Json::exception& e) {
    return absl::DataLossError(e.what());
  }
}

absl::StatusOr<Vocabulary> RemoteBackend::FetchVocabulary() {
  httplib::Result res;
  {
    std::lock_guard<std::mutex> lock(mu_);
    res = client_->Get("/v1/vocab");
  }
  if (!res) {
    return absl::UnavailableError(absl::StrCat("backend unreachable at ", base_url_,
                                               ": ", httplib::to_string(res.error())));
  }
  if (absl::Status s = wire::StatusFromHttp(res->status, res->body); !s.ok()) return s;
  return Vocabulary::Parse(res->body);
}

}  // namespace choicegate
