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

#include "choicegate/mock_backend.h"

#include <charconv>
#include <cmath>
#include <limits>
#include <memory>
#include <utility>

#include "absl/strings/str_cat.h"

namespace choicegate {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

absl::StatusOr<MockMatcher> ParseMatcher(const Json& entry) {
  MockMatcher m;
  for (const char* key : {"prompt", "prompt_contains", "image"}) {
    if (!entry.contains(key) || entry[key].is_null()) continue;
    if (!entry[key].is_string()) {
      return absl::InvalidArgumentError(absl::StrCat("\"", key, "\" must be a string"));
    }
    std::string value = entry[key].get<std::string>();
    if (absl::string_view(key) == "prompt") m.prompt = value;
    else if (absl::string_view(key) == "prompt_contains") m.prompt_contains = value;
    else m.image = value;
  }
  return m;
}

void MatcherToJson(const MockMatcher& m, Json& out) {
  if (m.prompt) out["prompt"] = *m.prompt;
  if (m.prompt_contains) out["prompt_contains"] = *m.prompt_contains;
  if (m.image) out["image"] = *m.image;
}

absl::StatusOr<TokenId> ParseTokenKey(const std::string& key) {
  TokenId id = 0;
  auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), id);
  if (ec != std::errc() || ptr != key.data() + key.size()) {
    return absl::InvalidArgumentError(absl::StrCat("bad token id key \"", key, "\""));
  }
  return id;
}

// Picks the most specific matching entry; earliest wins ties.
template <typename Entry>
const Entry* BestMatch(const std::vector<Entry>& entries,
                       const std::vector<size_t>& candidates,
                       const std::optional<std::string>& prompt,
                       const std::optional<std::string>& image) {
  const Entry* best = nullptr;
  int best_score = -1;
  for (size_t idx : candidates) {
    const Entry& e = entries[idx];
    if (!e.match.Matches(prompt, image)) continue;
    int score = e.match.Specificity();
    if (score > best_score) {
      best = &e;
      best_score = score;
    }
  }
  return best;
}

std::string TruncateCodePoints(const std::string& text, size_t max_points) {
  size_t points = 0;
  for (size_t i = 0; i < text.size(); ++i) {
    if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) {
      if (points == max_points) return text.substr(0, i);
      ++points;
    }
  }
  return text;
}

}  // namespace

bool MockMatcher::Matches(const std::optional<std::string>& prompt_text,
                          const std::optional<std::string>& image_ref) const {
  if (prompt && prompt_text != prompt) return false;
  if (prompt_contains &&
      (!prompt_text || prompt_text->find(*prompt_contains) == std::string::npos)) {
    return false;
  }
  if (image && image_ref != image) return false;
  return true;
}

int MockMatcher::Specificity() const {
  return (prompt ? 4 : 0) + (prompt_contains ? 2 : 0) + (image ? 1 : 0);
}

absl::StatusOr<MockTable> MockTable::FromJson(const Json& doc) {
  if (!doc.is_object()) return absl::InvalidArgumentError("mock table must be an object");
  MockTable table;
  if (doc.contains("vocab")) {
    auto vocab = Vocabulary::Parse(doc["vocab"].dump());
    if (!vocab.ok()) return vocab.status();
    table.vocab = *std::move(vocab);
  }
  if (doc.contains("fallback")) {
    const Json& f = doc["fallback"];
    if (f == "uniform") table.uniform_fallback = true;
    else if (!f.is_null() && f != "error") {
      return absl::InvalidArgumentError("\"fallback\" must be \"uniform\", \"error\" or null");
    }
  }
  if (doc.contains("default_text") && !doc["default_text"].is_null()) {
    table.default_text = doc["default_text"].get<std::string>();
  }
  try {
    for (const Json& entry : doc.value("distributions", Json::array())) {
      MockDistribution d;
      auto m = ParseMatcher(entry);
      if (!m.ok()) return m.status();
      d.match = *m;
      d.prefix = entry.value("prefix", TokenSequence{});
      double total = 0.0;
      for (const auto& [key, p] : entry.at("probs").items()) {
        auto id = ParseTokenKey(key);
        if (!id.ok()) return id.status();
        double prob = p.get<double>();
        if (!(prob >= 0.0) || prob > 1.0) {
          return absl::InvalidArgumentError(
              absl::StrCat("probability for token ", *id, " is outside [0,1]"));
        }
        total += prob;
        d.probs.emplace(*id, prob);
      }
      if (total > 1.0 + 1e-9) {
        return absl::InvalidArgumentError(
            absl::StrCat("probabilities sum to ", total, " > 1"));
      }
      table.distributions.push_back(std::move(d));
    }
    for (const Json& entry : doc.value("generations", Json::array())) {
      MockGeneration g;
      auto m = ParseMatcher(entry);
      if (!m.ok()) return m.status();
      g.match = *m;
      g.text = entry.at("text").get<std::string>();
      table.generations.push_back(std::move(g));
    }
  } catch (const Json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("mock table: ", e.what()));
  }
  return table;
}

Json MockTable::ToJson() const {
  Json doc = Json::object();
  if (vocab) doc["vocab"] = Json::parse(vocab->ToJson());
  doc["fallback"] = uniform_fallback ? Json("uniform") : Json(nullptr);
  if (default_text) doc["default_text"] = *default_text;
  Json dists = Json::array();
  for (const MockDistribution& d : distributions) {
    Json e = Json::object();
    MatcherToJson(d.match, e);
    e["prefix"] = d.prefix;
    Json probs = Json::object();
    for (const auto& [id, p] : d.probs) probs[std::to_string(id)] = p;
    e["probs"] = std::move(probs);
    dists.push_back(std::move(e));
  }
  doc["distributions"] = std::move(dists);
  Json gens = Json::array();
  for (const MockGeneration& g : generations) {
    Json e = Json::object();
    MatcherToJson(g.match, e);
    e["text"] = g.text;
    gens.push_back(std::move(e));
  }
  doc["generations"] = std::move(gens);
  return doc;
}

absl::StatusOr<MockTable> LoadMockTable(const std::string& path) {
  auto text = ReadFile(path);
  if (!text.ok()) return text.status();
  auto doc = ParseJsonStrict(*text);
  if (!doc.ok()) {
    return absl::Status(doc.status().code(),
                        absl::StrCat(path, ": ", doc.status().message()));
  }
  auto table = MockTable::FromJson(*doc);
  if (!table.ok()) {
    return absl::Status(table.status().code(),
                        absl::StrCat(path, ": ", table.status().message()));
  }
  return table;
}

absl::StatusOr<std::unique_ptr<MockBackend>> MockBackend::Create(
    MockTable table, std::optional<Vocabulary> vocab) {
  if (!vocab) vocab = table.vocab;
  if (!vocab) {
    return absl::InvalidArgumentError(
        "mock backend needs a vocabulary (embedded in the table or supplied)");
  }
  for (const MockDistribution& d : table.distributions) {
    for (TokenId id : d.prefix) {
      if (id != vocab->eos_id() && !vocab->Contains(id)) {
        return absl::InvalidArgumentError(
            absl::StrCat("prefix token ", id, " not in vocabulary"));
      }
    }
    for (const auto& [id, p] : d.probs) {
      if (id != vocab->eos_id() && !vocab->Contains(id)) {
        return absl::InvalidArgumentError(
            absl::StrCat("distribution token ", id, " not in vocabulary"));
      }
    }
  }
  return std::unique_ptr<MockBackend>(
      new MockBackend(std::move(table), *std::move(vocab)));
}

MockBackend::MockBackend(MockTable table, Vocabulary vocab)
    : table_(std::move(table)), vocab_(std::move(vocab)) {
  for (size_t i = 0; i < table_.distributions.size(); ++i) {
    by_prefix_[table_.distributions[i].prefix].push_back(i);
  }
  identity_ = absl::StrCat("mock:", Fnv1aHex(table_.ToJson().dump() + vocab_.ToJson()));
}

absl::StatusOr<std::string> MockBackend::DoGenerate(const GenerationRequest& req) {
  std::vector<size_t> all(table_.generations.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = i;
  const MockGeneration* hit =
      BestMatch(table_.generations, all, req.prompt, req.image);
  std::string reply;
  if (hit != nullptr) {
    reply = hit->text;
  } else if (table_.default_text) {
    reply = *table_.default_text;
  } else {
    return absl::NotFoundError("no mock generation matches the request");
  }
  const auto budget = static_cast<size_t>(req.max_new_tokens);
  auto tokens = Encode(vocab_, reply);
  if (tokens.ok()) {
    if (tokens->size() > budget) {
      tokens->resize(budget);
      auto text = Decode(vocab_, *tokens);
      if (!text.ok()) return text.status();
      reply = *std::move(text);
    }
  } else if (!reply.empty()) {
    reply = TruncateCodePoints(reply, budget);
  }
  return req.forced_prefix ? *req.forced_prefix + reply : reply;
}

absl::StatusOr<NextTokenDistribution> MockBackend::DoNextTokenLogprobs(
    const LogprobQuery& query) {
  for (TokenId id : query.candidates) {
    if (id != vocab_.eos_id() && !vocab_.Contains(id)) {
      return absl::InvalidArgumentError(absl::StrCat("unknown token id ", id));
    }
  }
  const size_t universe = vocab_.size() + 1;
  NextTokenDistribution out;
  out.logsumexp_all = 0.0;

  const MockDistribution* entry = nullptr;
  if (auto it = by_prefix_.find(query.prefix_tokens); it != by_prefix_.end()) {
    entry = BestMatch(table_.distributions, it->second, query.prompt_text,
                      query.image);
  }
  if (entry == nullptr) {
    if (!table_.uniform_fallback) {
      return absl::NotFoundError("prefix not present in mock table");
    }
    const double lp = -std::log(static_cast<double>(universe));
    for (TokenId id : query.candidates) out.logprobs[id] = lp;
    return out;
  }

  double listed = 0.0;
  for (const auto& [id, p] : entry->probs) listed += p;
  const double rest = std::max(0.0, 1.0 - listed);
  const size_t unlisted = universe - entry->probs.size();
  const double each = unlisted == 0 ? 0.0 : rest / static_cast<double>(unlisted);
  // A fully listed table may carry less than unit mass.
  if (unlisted == 0) out.logsumexp_all = listed > 0.0 ? std::log(listed) : kNegInf;
  for (TokenId id : query.candidates) {
    auto it = entry->probs.find(id);
    double p = it == entry->probs.end() ? each : it->second;
    out.logprobs[id] = p > 0.0 ? std::log(p) : kNegInf;
  }
  return out;
}

absl::StatusOr<TokenSequence> MockBackend::DoEncode(const std::string& text) {
  return Encode(vocab_, text);
}

}  // namespace choicegate
