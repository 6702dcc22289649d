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

#include "choicegate/pipeline.h"

#include <algorithm>
#include <ctime>
#include <exception>
#include <limits>
#include <map>
#include <set>

#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"

namespace choicegate {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool IsBlank(absl::string_view text) {
  return absl::StripAsciiWhitespace(text).empty();
}

std::string NowUtc() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// The candidate labels for one example: the run's full set, or the example's
// subset with its own trie.
struct Candidates {
  std::optional<ChoiceSet> subset;
  std::optional<ChoiceTrie> subset_trie;
  std::vector<ChoiceId> global_ids;
};

absl::StatusOr<Candidates> CandidatesFor(const Example& example,
                                         const ChoiceSet& choices,
                                         const Vocabulary& vocab) {
  Candidates out;
  if (!example.choice_subset) {
    out.global_ids.resize(choices.size());
    for (size_t i = 0; i < choices.size(); ++i) out.global_ids[i] = static_cast<ChoiceId>(i);
    return out;
  }
  std::vector<ChoiceId> ids = *example.choice_subset;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  std::vector<std::string> labels;
  for (ChoiceId id : ids) {
    if (!choices.Contains(id)) {
      return absl::OutOfRangeError(absl::StrCat("subset choice id ", id, " out of range"));
    }
    labels.push_back(choices.label(id));
  }
  auto set = ChoiceSet::Create(std::move(labels));
  if (!set.ok()) return set.status();
  auto sub_trie = ChoiceTrie::Build(*set, vocab);
  if (!sub_trie.ok()) return sub_trie.status();
  out.subset = *std::move(set);
  out.subset_trie = *std::move(sub_trie);
  out.global_ids = std::move(ids);
  return out;
}

Json ScoresToJson(const ChoiceScores& scores) {
  Json lp = Json::array();
  for (double v : scores.log_scores) lp.push_back(LogprobToJson(v));
  return Json{{"normalization", NormalizationName(scores.normalization)},
              {"log_scores", std::move(lp)},
              {"passes_used", scores.passes_used}};
}

absl::StatusOr<ChoiceScores> ScoresFromJson(const Json& doc) {
  ChoiceScores out;
  auto norm = ParseNormalization(doc.at("normalization").get<std::string>());
  if (!norm) return absl::InvalidArgumentError("unknown normalization");
  out.normalization = *norm;
  for (const Json& v : doc.at("log_scores")) out.log_scores.push_back(LogprobFromJson(v));
  out.passes_used = doc.at("passes_used").get<int64_t>();
  return out;
}

absl::Status LineError(const std::string& path, size_t line, absl::string_view msg) {
  return absl::InvalidArgumentError(absl::StrCat(path, ":", line, ": ", msg));
}

absl::StatusOr<ChoiceId> LabelToChoice(const Json& label, const ChoiceSet& choices) {
  if (label.is_string()) {
    auto id = choices.Find(label.get<std::string>());
    if (!id) {
      return absl::NotFoundError(
          absl::StrCat("label \"", label.get<std::string>(), "\" is not in the choice set"));
    }
    return *id;
  }
  if (label.is_number_integer()) {
    const auto id = label.get<int64_t>();
    if (id < 0 || static_cast<size_t>(id) >= choices.size()) {
      return absl::OutOfRangeError(absl::StrCat("label id ", id, " out of range"));
    }
    return static_cast<ChoiceId>(id);
  }
  return absl::InvalidArgumentError("label must be a string or an integer");
}

}  // namespace

absl::string_view MethodName(Method m) {
  switch (m) {
    case Method::kChoice:
      return "choice";
    case Method::kNlg2Choice:
      return "nlg2choice";
    case Method::kNlg2ChoiceOpen:
      return "nlg2choice_open";
    case Method::kNlg2Nlg2Choice:
      return "nlg2nlg2choice";
    case Method::kYesNo:
      return "yes_no";
    case Method::kRetrievalTrunc:
      return "retrieval_trunc";
  }
  return "choice";
}

std::optional<Method> ParseMethod(absl::string_view name) {
  for (Method m : {Method::kChoice, Method::kNlg2Choice, Method::kNlg2ChoiceOpen,
                   Method::kNlg2Nlg2Choice, Method::kYesNo, Method::kRetrievalTrunc}) {
    if (MethodName(m) == name) return m;
  }
  return std::nullopt;
}

bool IsClassification(Method m) {
  return m != Method::kYesNo && m != Method::kRetrievalTrunc;
}

bool HasGenerationStage(Method m) {
  return m == Method::kNlg2Choice || m == Method::kNlg2ChoiceOpen ||
         m == Method::kNlg2Nlg2Choice || m == Method::kRetrievalTrunc;
}

absl::string_view SelectorName(Selector s) {
  return s == Selector::kGreedy ? "greedy" : "truncated_argmax";
}

std::optional<Selector> ParseSelector(absl::string_view name) {
  if (name == "greedy") return Selector::kGreedy;
  if (name == "truncated_argmax") return Selector::kTruncatedArgmax;
  return std::nullopt;
}

absl::StatusOr<std::vector<Example>> LoadManifest(const std::string& path,
                                                  const ChoiceSet& choices) {
  auto text = ReadFile(path);
  if (!text.ok()) return text.status();
  std::vector<Example> out;
  std::set<std::string> seen;
  const std::vector<std::string> lines = SplitLines(*text);
  for (size_t i = 0; i < lines.size(); ++i) {
    if (IsBlank(lines[i])) continue;
    auto doc = ParseJsonStrict(lines[i]);
    if (!doc.ok()) return LineError(path, i + 1, doc.status().message());
    if (!doc->is_object() || !doc->contains("id") || !(*doc)["id"].is_string() ||
        !doc->contains("label")) {
      return LineError(path, i + 1, "expected {\"id\": string, \"image\": ..., \"label\": ...}");
    }
    Example ex;
    ex.id = (*doc)["id"].get<std::string>();
    if (doc->contains("image") && (*doc)["image"].is_string()) {
      ex.image = (*doc)["image"].get<std::string>();
    }
    auto label = LabelToChoice((*doc)["label"], choices);
    if (!label.ok()) return LineError(path, i + 1, label.status().message());
    ex.ground_truth = *label;
    if (!seen.insert(ex.id).second) {
      return LineError(path, i + 1, absl::StrCat("duplicate example id ", ex.id));
    }
    out.push_back(std::move(ex));
  }
  return out;
}

absl::Status AttachChoiceSubsets(const std::string& path, const ChoiceSet& choices,
                                 std::vector<Example>& examples) {
  auto text = ReadFile(path);
  if (!text.ok()) return text.status();
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < examples.size(); ++i) index[examples[i].id] = i;
  const std::vector<std::string> lines = SplitLines(*text);
  for (size_t i = 0; i < lines.size(); ++i) {
    if (IsBlank(lines[i])) continue;
    auto doc = ParseJsonStrict(lines[i]);
    if (!doc.ok()) return LineError(path, i + 1, doc.status().message());
    if (!doc->is_object() || !doc->contains("example_id") ||
        !(*doc)["example_id"].is_string() || !doc->contains("choices") ||
        !(*doc)["choices"].is_array() || (*doc)["choices"].empty()) {
      return LineError(path, i + 1,
                       "expected {\"example_id\": string, \"choices\": [label, ...]}");
    }
    const std::string id = (*doc)["example_id"].get<std::string>();
    auto it = index.find(id);
    if (it == index.end()) return LineError(path, i + 1, absl::StrCat("unknown example id ", id));
    std::vector<ChoiceId> subset;
    for (const Json& label : (*doc)["choices"]) {
      auto cid = LabelToChoice(label, choices);
      if (!cid.ok()) return LineError(path, i + 1, cid.status().message());
      subset.push_back(*cid);
    }
    Example& ex = examples[it->second];
    if (std::find(subset.begin(), subset.end(), ex.ground_truth) == subset.end()) {
      return LineError(path, i + 1,
                       absl::StrCat("subset for ", id, " does not contain the ground truth"));
    }
    ex.choice_subset = std::move(subset);
  }
  for (const Example& ex : examples) {
    if (!ex.choice_subset) {
      return absl::InvalidArgumentError(absl::StrCat(path, ": no subset for example ", ex.id));
    }
  }
  return absl::OkStatus();
}

SteeringMode RunConfig::EffectiveSteering() const {
  switch (method) {
    case Method::kNlg2ChoiceOpen:
    case Method::kYesNo:
      return SteeringMode::kOpen;
    default:
      return steering;
  }
}

absl::Status RunConfig::Validate() const {
  if (profile.type.empty() || profile.domain.empty()) {
    return absl::InvalidArgumentError("profile type and domain must be non-empty");
  }
  if (max_new_tokens < 1) return absl::InvalidArgumentError("max_new_tokens must be >= 1");
  if (jobs < 1) return absl::InvalidArgumentError("jobs must be >= 1");
  if (max_rounds < 1) return absl::InvalidArgumentError("max_rounds must be >= 1");
  if (method == Method::kNlg2Nlg2Choice && (rounds < 1 || rounds > max_rounds)) {
    return absl::InvalidArgumentError(
        absl::StrCat("rounds must be in [1, ", max_rounds, "], got ", rounds));
  }
  if (cot) {
    if (cot->empty()) return absl::InvalidArgumentError("CoT prefix must be non-empty");
    if (!HasGenerationStage(method)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "a CoT prefix needs a generation stage; method ", MethodName(method), " has none"));
    }
  }
  if (method == Method::kYesNo) {
    auto names = Placeholders(yes_no_template);
    if (!names.ok()) return names.status();
    if (std::find(names->begin(), names->end(), "cname") == names->end()) {
      return absl::InvalidArgumentError("yes/no template must contain {cname}");
    }
  }
  if (method == Method::kNlg2Nlg2Choice) {
    auto names = Placeholders(rephrase_template);
    if (!names.ok()) return names.status();
    if (std::find(names->begin(), names->end(), "nlg") == names->end()) {
      return absl::InvalidArgumentError("rephrase template must contain {nlg}");
    }
  }
  return absl::OkStatus();
}

Json RunConfig::ToJson(absl::string_view backend_identity) const {
  Json doc = {
      {"backend", backend_identity},
      {"profile", {{"name", profile.name}, {"type", profile.type}, {"domain", profile.domain}}},
      {"method", MethodName(method)},
      {"steering", SteeringName(EffectiveSteering())},
      {"cot", cot ? Json(*cot) : Json(nullptr)},
      {"normalization", NormalizationName(normalization)},
      {"selector", SelectorName(selector)},
      {"max_new_tokens", max_new_tokens},
  };
  if (method == Method::kNlg2Nlg2Choice) {
    doc["rounds"] = rounds;
    doc["rephrase_template"] = rephrase_template;
  }
  if (method == Method::kYesNo) {
    doc["yes_no_template"] = yes_no_template;
    doc["yes_token"] = yes_token ? Json(*yes_token) : Json(nullptr);
    doc["no_token"] = no_token ? Json(*no_token) : Json(nullptr);
  }
  return doc;
}

std::string RunConfig::Hash(absl::string_view backend_identity) const {
  return Fnv1aHex(ToJson(backend_identity).dump());
}

Json RunRecord::ToJson() const {
  Json doc = {{"example_id", example_id},
              {"prompt_id", prompt_id},
              {"method", MethodName(method)},
              {"status", status == RecordStatus::kOk ? "ok" : "failed"},
              {"flags", flags},
              {"passes_used", passes_used}};
  if (status == RecordStatus::kFailed) doc["error"] = error;
  if (stage1_text) doc["stage1_text"] = *stage1_text;
  if (!rephrases.empty()) doc["rephrases"] = rephrases;
  if (prediction) doc["prediction"] = *prediction;
  if (scores) doc["scores"] = ScoresToJson(*scores);
  if (yes_no) doc["yes_no"] = *yes_no;
  if (started_at) doc["started_at"] = *started_at;
  if (finished_at) doc["finished_at"] = *finished_at;
  return doc;
}

absl::StatusOr<RunRecord> RunRecord::FromJson(const Json& doc) {
  RunRecord r;
  try {
    r.example_id = doc.at("example_id").get<std::string>();
    r.prompt_id = doc.at("prompt_id").get<std::string>();
    auto method = ParseMethod(doc.at("method").get<std::string>());
    if (!method) return absl::InvalidArgumentError("unknown method");
    r.method = *method;
    const std::string status = doc.at("status").get<std::string>();
    if (status != "ok" && status != "failed") {
      return absl::InvalidArgumentError(absl::StrCat("unknown status ", status));
    }
    r.status = status == "ok" ? RecordStatus::kOk : RecordStatus::kFailed;
    r.flags = doc.at("flags").get<std::vector<std::string>>();
    r.passes_used = doc.at("passes_used").get<int64_t>();
    if (doc.contains("error")) r.error = doc["error"].get<std::string>();
    if (doc.contains("stage1_text")) r.stage1_text = doc["stage1_text"].get<std::string>();
    if (doc.contains("rephrases")) r.rephrases = doc["rephrases"].get<std::vector<std::string>>();
    if (doc.contains("prediction")) r.prediction = doc["prediction"].get<ChoiceId>();
    if (doc.contains("scores")) {
      auto scores = ScoresFromJson(doc["scores"]);
      if (!scores.ok()) return scores.status();
      r.scores = *std::move(scores);
    }
    if (doc.contains("yes_no")) r.yes_no = doc["yes_no"].get<std::vector<double>>();
    if (doc.contains("started_at")) r.started_at = doc["started_at"].get<std::string>();
    if (doc.contains("finished_at")) r.finished_at = doc["finished_at"].get<std::string>();
  } catch (const Json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("malformed run record: ", e.what()));
  }
  return r;
}

absl::StatusOr<Pipeline> Pipeline::Create(RunConfig cfg, ChoiceSet choices,
                                          LMBackend& backend,
                                          const Vocabulary& vocab) {
  if (absl::Status s = cfg.Validate(); !s.ok()) return s;
  const BackendCapabilities caps = backend.capabilities();
  if (!caps.logprobs) return absl::FailedPreconditionError("backend lacks logprobs");
  if (HasGenerationStage(cfg.method) && !caps.generate) {
    return absl::FailedPreconditionError(
        absl::StrCat("method ", MethodName(cfg.method), " needs a backend that generates"));
  }
  auto trie = ChoiceTrie::Build(choices, vocab);
  if (!trie.ok()) return trie.status();
  YesNoTokens yes_no;
  if (cfg.method == Method::kYesNo) {
    auto tokens = ResolveYesNoTokens(vocab, cfg.yes_token, cfg.no_token);
    if (!tokens.ok()) return tokens.status();
    yes_no = *tokens;
  }
  return Pipeline(std::move(cfg), std::move(choices), *std::move(trie), backend, yes_no,
                  vocab);
}

RunRecord Pipeline::NewRecord(const Example& example, absl::string_view prompt_id) const {
  RunRecord rec;
  rec.example_id = example.id;
  rec.prompt_id = std::string(prompt_id);
  rec.method = cfg_.method;
  if (cfg_.record_timestamps) rec.started_at = NowUtc();
  return rec;
}

RunRecord Pipeline::Guarded(const Example& example, absl::string_view prompt_id,
                            const std::function<absl::Status(RunRecord&)>& body) const {
  RunRecord rec = NewRecord(example, prompt_id);
  absl::Status status;
  try {
    status = body(rec);
  } catch (const std::exception& e) {
    status = absl::InternalError(absl::StrCat("exception: ", e.what()));
  } catch (...) {
    status = absl::InternalError("unknown exception");
  }
  if (!status.ok()) {
    rec.status = RecordStatus::kFailed;
    rec.error = status.ToString();
    rec.prediction.reset();
  }
  if (cfg_.record_timestamps) rec.finished_at = NowUtc();
  return rec;
}

RunRecord Pipeline::Run(const Example& example, const PromptTemplate& prompt) const {
  switch (cfg_.method) {
    case Method::kChoice:
      return ClassifyChoiceBaseline(example, prompt);
    case Method::kNlg2Choice:
    case Method::kNlg2ChoiceOpen:
      return ClassifyNlg2Choice(example, prompt);
    case Method::kNlg2Nlg2Choice:
      return ClassifyMultiRound(example, prompt, cfg_.rounds);
    case Method::kYesNo:
      return YesNoRow(example, prompt);
    case Method::kRetrievalTrunc:
      return RetrievalTruncated(example, prompt);
  }
  return Guarded(example, prompt.id,
                 [](RunRecord&) { return absl::InternalError("unknown method"); });
}

absl::StatusOr<std::string> Pipeline::GenerateResponse(const Example& example,
                                                       const PromptTemplate& prompt,
                                                       const ChoiceSet& choices,
                                                       int32_t rounds,
                                                       RunRecord& rec) const {
  auto stage1 = BuildStage1Prompt(prompt, cfg_.profile, choices, cfg_.EffectiveSteering(),
                                  cfg_.cot);
  if (!stage1.ok()) return stage1.status();
  GenerationRequest req;
  req.prompt = stage1->prompt;
  if (!example.image.empty()) req.image = example.image;
  req.forced_prefix = stage1->forced_prefix;
  req.max_new_tokens = cfg_.max_new_tokens;
  auto text = backend_->Generate(req);
  if (!text.ok()) return text.status();
  rec.stage1_text = *text;
  std::string current = *std::move(text);
  if (IsBlank(current)) {
    rec.flags.push_back("empty_stage1");
    current = std::string(kEmptyResponseMarker);
  }
  for (int32_t round = 1; round < rounds; ++round) {
    auto rephrase = BuildRephrasePrompt(cfg_.profile, current, cfg_.rephrase_template);
    if (!rephrase.ok()) return rephrase.status();
    GenerationRequest text_only;
    text_only.prompt = *std::move(rephrase);
    text_only.max_new_tokens = cfg_.max_new_tokens;
    auto out = backend_->Generate(text_only);
    if (!out.ok()) return out.status();
    rec.rephrases.push_back(*out);
    current = *std::move(out);
    if (IsBlank(current)) {
      rec.flags.push_back(absl::StrCat("empty_rephrase_", round));
      current = std::string(kEmptyResponseMarker);
    }
  }
  return current;
}

absl::Status Pipeline::Select(const ScoringContext& ctx, const ChoiceTrie& trie,
                              const std::vector<ChoiceId>& global_ids,
                              RunRecord& rec) const {
  if (cfg_.selector == Selector::kGreedy) {
    auto greedy = ConstrainedGreedyDecode(*backend_, ctx, trie);
    if (!greedy.ok()) return greedy.status();
    rec.passes_used += greedy->passes_used;
    rec.prediction = global_ids.at(greedy->choice);
    return absl::OkStatus();
  }
  auto scores = TruncatedChoiceLogprobs(*backend_, ctx, trie, cfg_.normalization);
  if (!scores.ok()) return scores.status();
  rec.passes_used += scores->passes_used;
  rec.prediction = global_ids.at(ArgmaxChoice(scores->log_scores));
  ChoiceScores full = *scores;
  if (global_ids.size() != choices_.size()) {
    full.log_scores.assign(choices_.size(), kNegInf);
    for (size_t i = 0; i < global_ids.size(); ++i) {
      full.log_scores[global_ids[i]] = scores->log_scores[i];
    }
  }
  rec.scores = std::move(full);
  return absl::OkStatus();
}

RunRecord Pipeline::ClassifyChoiceBaseline(const Example& example,
                                           const PromptTemplate& prompt) const {
  return Guarded(example, prompt.id, [&](RunRecord& rec) -> absl::Status {
    auto cands = CandidatesFor(example, choices_, *vocab_);
    if (!cands.ok()) return cands.status();
    const ChoiceSet& set = cands->subset ? *cands->subset : choices_;
    const ChoiceTrie& trie = cands->subset_trie ? *cands->subset_trie : trie_;
    auto stage1 = BuildStage1Prompt(prompt, cfg_.profile, set, cfg_.EffectiveSteering(),
                                    std::nullopt);
    if (!stage1.ok()) return stage1.status();
    ScoringContext ctx{stage1->prompt, std::nullopt};
    if (!example.image.empty()) ctx.image = example.image;
    return Select(ctx, trie, cands->global_ids, rec);
  });
}

RunRecord Pipeline::ClassifyNlg2Choice(const Example& example,
                                       const PromptTemplate& prompt) const {
  return ClassifyMultiRound(example, prompt, 1);
}

RunRecord Pipeline::ClassifyMultiRound(const Example& example, const PromptTemplate& prompt,
                                       int32_t rounds) const {
  return Guarded(example, prompt.id, [&](RunRecord& rec) -> absl::Status {
    if (rounds < 1 || rounds > cfg_.max_rounds) {
      return absl::InvalidArgumentError(absl::StrCat("rounds out of range: ", rounds));
    }
    auto cands = CandidatesFor(example, choices_, *vocab_);
    if (!cands.ok()) return cands.status();
    const ChoiceSet& set = cands->subset ? *cands->subset : choices_;
    const ChoiceTrie& trie = cands->subset_trie ? *cands->subset_trie : trie_;
    auto nlg = GenerateResponse(example, prompt, set, rounds, rec);
    if (!nlg.ok()) return nlg.status();
    auto stage2 = BuildStage2Prompt(cfg_.profile, set, *nlg);
    if (!stage2.ok()) return stage2.status();
    // Text-only: the image never reaches stage 2.
    return Select(ScoringContext{*stage2, std::nullopt}, trie, cands->global_ids, rec);
  });
}

RunRecord Pipeline::RetrievalTruncated(const Example& example,
                                       const PromptTemplate& prompt) const {
  return Guarded(example, prompt.id, [&](RunRecord& rec) -> absl::Status {
    auto nlg = GenerateResponse(example, prompt, choices_, 1, rec);
    if (!nlg.ok()) return nlg.status();
    auto stage2 = BuildStage2Prompt(cfg_.profile, choices_, *nlg);
    if (!stage2.ok()) return stage2.status();
    auto scores = TruncatedChoiceLogprobs(*backend_, ScoringContext{*stage2, std::nullopt},
                                          trie_, cfg_.normalization);
    if (!scores.ok()) return scores.status();
    rec.passes_used += scores->passes_used;
    rec.scores = *std::move(scores);
    return absl::OkStatus();
  });
}

RunRecord Pipeline::YesNoRow(const Example& example, const PromptTemplate& prompt) const {
  return Guarded(example, prompt.id, [&](RunRecord& rec) -> absl::Status {
    std::vector<double> row(choices_.size());
    for (size_t c = 0; c < choices_.size(); ++c) {
      auto text = BuildYesNoPrompt(cfg_.profile, choices_,
                                   choices_.label(static_cast<ChoiceId>(c)),
                                   cfg_.yes_no_template);
      if (!text.ok()) return text.status();
      ScoringContext ctx{*std::move(text), std::nullopt};
      if (!example.image.empty()) ctx.image = example.image;
      auto score = ScoreYesNo(*backend_, ctx, yes_no_.yes, yes_no_.no);
      if (!score.ok()) return score.status();
      ++rec.passes_used;
      row[c] = score->p_yes;
    }
    rec.yes_no = std::move(row);
    return absl::OkStatus();
  });
}

ScoreMatrix ScoreMatrixFromRecords(const std::vector<RunRecord>& records,
                                   absl::string_view prompt_id) {
  ScoreMatrix out;
  for (const RunRecord& r : records) {
    if (r.status != RecordStatus::kOk || r.prompt_id != prompt_id) continue;
    if (r.scores) {
      out.example_ids.push_back(r.example_id);
      out.rows.push_back(r.scores->log_scores);
    } else if (r.yes_no) {
      out.example_ids.push_back(r.example_id);
      out.rows.push_back(*r.yes_no);
    }
  }
  return out;
}

std::string ScoreMatrixToJsonLines(const ScoreMatrix& matrix) {
  std::string out;
  for (size_t i = 0; i < matrix.rows.size(); ++i) {
    Json scores = Json::array();
    for (double v : matrix.rows[i]) scores.push_back(LogprobToJson(v));
    out += Json{{"example_id", matrix.example_ids[i]}, {"scores", std::move(scores)}}.dump();
    out += '\n';
  }
  return out;
}

absl::StatusOr<ScoreMatrix> LoadScoreMatrix(const std::string& path) {
  auto docs = ReadJsonLines(path);
  if (!docs.ok()) return docs.status();
  ScoreMatrix out;
  std::set<std::string> seen;
  size_t width = 0;
  for (size_t i = 0; i < docs->size(); ++i) {
    const Json& doc = (*docs)[i];
    if (!doc.is_object() || !doc.contains("example_id") || !doc["example_id"].is_string() ||
        !doc.contains("scores") || !doc["scores"].is_array()) {
      return absl::InvalidArgumentError(
          absl::StrCat(path, ": row ", i + 1, " needs example_id and scores"));
    }
    std::vector<double> row;
    for (const Json& v : doc["scores"]) {
      if (!v.is_null() && !v.is_number()) {
        return absl::InvalidArgumentError(absl::StrCat(path, ": row ", i + 1, ": non-numeric score"));
      }
      row.push_back(LogprobFromJson(v));
    }
    if (i == 0) width = row.size();
    if (row.size() != width) {
      return absl::InvalidArgumentError(absl::StrCat(path, ": row ", i + 1, " has ", row.size(),
                                                     " scores, expected ", width));
    }
    const std::string id = doc["example_id"].get<std::string>();
    if (!seen.insert(id).second) {
      return absl::InvalidArgumentError(absl::StrCat(path, ": duplicate example id ", id));
    }
    out.example_ids.push_back(id);
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace choicegate
