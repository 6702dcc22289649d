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

#include "cli.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "choicegate/choice_trie.h"
#include "choicegate/eval.h"
#include "choicegate/json_util.h"
#include "choicegate/mock_backend.h"
#include "choicegate/pipeline.h"
#include "choicegate/prompts.h"
#include "choicegate/remote_backend.h"
#include "choicegate/report.h"

namespace choicegate::cli {
namespace {

namespace fs = std::filesystem;

constexpr char kBackendEnv[] = "CHOICEGATE_BACKEND";

// Distinguishes failures before any backend call from later ones.
struct CliError {
  int code;
  absl::Status status;
};

#define CG_ASSIGN_OR_FAIL(lhs, expr, code)                  \
  auto lhs##_or = (expr);                                   \
  if (!lhs##_or.ok()) return CliError{code, lhs##_or.status()}; \
  auto lhs = *std::move(lhs##_or)

#define CG_CHECK_OK(expr, code)                        \
  do {                                                 \
    absl::Status _s = (expr);                          \
    if (!_s.ok()) return CliError{code, std::move(_s)}; \
  } while (0)

using Outcome = std::optional<CliError>;

struct RunFlags {
  std::string profile;
  std::string vocab;
  bool vocab_from_backend = false;
  std::string backend;
  std::string mock;
  std::string method;
  std::string steering = "type_only";
  std::string cot;
  std::string norm = "renorm";
  std::string selector = "truncated_argmax";
  int max_new_tokens = 512;
  int rounds = 2;
  std::string rephrase_template;
  std::string yes_no_template;
  std::optional<int> yes_token;
  std::optional<int> no_token;
  std::string templates;
  std::vector<std::string> prompt_ids;
  std::string manifest;
  std::string subsets;
  std::string out;
  int jobs = 1;
  bool resume = false;
  bool repair = false;
  bool timestamps = false;
};

struct Backend {
  std::unique_ptr<LMBackend> model;
  std::optional<Vocabulary> vocab;
};

// NAME=PATH, or PATH with the name taken from the file stem.
std::pair<std::string, std::string> SplitNamed(const std::string& arg) {
  if (auto eq = arg.find('='); eq != std::string::npos) {
    return {arg.substr(0, eq), arg.substr(eq + 1)};
  }
  return {fs::path(arg).stem().string(), arg};
}

absl::Status EnsureDir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    return absl::PermissionDeniedError(absl::StrCat("cannot create output directory ", dir));
  }
  return absl::OkStatus();
}

std::string BackendUrl(const RunFlags& f) {
  if (const char* env = std::getenv(kBackendEnv); env != nullptr && *env != '\0') return env;
  return f.backend;
}

absl::Status CheckSources(const RunFlags& f, bool need_vocab) {
  const bool remote = !BackendUrl(f).empty();
  if (!f.mock.empty() && !f.backend.empty()) {
    return absl::InvalidArgumentError("--backend and --mock are mutually exclusive");
  }
  if (f.mock.empty() && !remote) {
    return absl::InvalidArgumentError(
        absl::StrCat("a backend is required: --backend URL, --mock TABLE or ", kBackendEnv));
  }
  if (!f.vocab.empty() && f.vocab_from_backend) {
    return absl::InvalidArgumentError("--vocab and --vocab-from-backend are mutually exclusive");
  }
  if (need_vocab && f.vocab.empty() && !f.vocab_from_backend) {
    return absl::InvalidArgumentError("a vocabulary is required: --vocab FILE or --vocab-from-backend");
  }
  return absl::OkStatus();
}

absl::StatusOr<Backend> OpenBackend(const RunFlags& f) {
  Backend out;
  std::optional<Vocabulary> file_vocab;
  if (!f.vocab.empty()) {
    auto v = LoadVocabulary(f.vocab);
    if (!v.ok()) return v.status();
    file_vocab = *std::move(v);
  }
  // --mock takes precedence; the environment variable only replaces --backend.
  if (!f.mock.empty()) {
    auto table = LoadMockTable(f.mock);
    if (!table.ok()) return table.status();
    auto mock = MockBackend::Create(*std::move(table), file_vocab);
    if (!mock.ok()) return mock.status();
    out.model = *std::move(mock);
  } else {
    auto remote = RemoteBackend::Create(BackendUrl(f));
    if (!remote.ok()) return remote.status();
    out.model = *std::move(remote);
  }
  if (file_vocab) {
    out.vocab = std::move(file_vocab);
  } else {
    auto v = out.model->FetchVocabulary();
    if (!v.ok()) return v.status();
    out.vocab = *std::move(v);
  }
  return out;
}

absl::StatusOr<RunConfig> MakeRunConfig(const RunFlags& f, const DatasetProfile& profile) {
  RunConfig cfg;
  cfg.profile = profile;
  auto method = ParseMethod(f.method);
  if (!method) return absl::InvalidArgumentError(absl::StrCat("unknown method ", f.method));
  cfg.method = *method;
  auto steering = ParseSteering(f.steering);
  if (!steering) return absl::InvalidArgumentError(absl::StrCat("unknown steering ", f.steering));
  cfg.steering = *steering;
  if (!f.cot.empty()) cfg.cot = f.cot;
  auto norm = ParseNormalization(f.norm);
  if (!norm) return absl::InvalidArgumentError(absl::StrCat("unknown normalization ", f.norm));
  cfg.normalization = *norm;
  auto selector = ParseSelector(f.selector);
  if (!selector) return absl::InvalidArgumentError(absl::StrCat("unknown selector ", f.selector));
  cfg.selector = *selector;
  cfg.max_new_tokens = f.max_new_tokens;
  cfg.rounds = f.rounds;
  if (!f.rephrase_template.empty()) cfg.rephrase_template = f.rephrase_template;
  if (!f.yes_no_template.empty()) cfg.yes_no_template = f.yes_no_template;
  cfg.yes_token = f.yes_token;
  cfg.no_token = f.no_token;
  cfg.jobs = f.jobs;
  cfg.record_timestamps = f.timestamps;
  if (absl::Status s = cfg.Validate(); !s.ok()) return s;
  return cfg;
}

absl::StatusOr<std::vector<PromptTemplate>> SelectPrompts(const RunFlags& f) {
  auto all = LoadTemplates(f.templates);
  if (!all.ok()) return all.status();
  if (f.prompt_ids.empty()) return all;
  std::vector<PromptTemplate> out;
  for (const std::string& id : f.prompt_ids) {
    auto it = std::find_if(all->begin(), all->end(),
                           [&](const PromptTemplate& p) { return p.id == id; });
    if (it == all->end()) {
      return absl::NotFoundError(absl::StrCat("no template ", id, " in ", f.templates));
    }
    out.push_back(*it);
  }
  return out;
}

void AddRunFlags(CLI::App* cmd, RunFlags& f, const std::vector<std::string>& methods,
                 const std::string& default_method) {
  f.method = default_method;
  cmd->add_option("--profile", f.profile, "Dataset profile JSON")->required();
  cmd->add_option("--vocab", f.vocab, "Vocabulary JSON file");
  cmd->add_flag("--vocab-from-backend", f.vocab_from_backend,
                "Fetch the vocabulary from the backend");
  cmd->add_option("--backend", f.backend,
                  absl::StrCat("Model server URL (", kBackendEnv, " overrides)"));
  cmd->add_option("--mock", f.mock, "Mock table JSON (in-process backend)");
  cmd->add_option("--method", f.method, "Method")->check(CLI::IsMember(methods));
  cmd->add_option("--steering", f.steering, "Stage-1 steering suffix")
      ->check(CLI::IsMember({"open", "type_only", "choice_list"}));
  cmd->add_option("--cot", f.cot, "Forced assistant prefix for stage 1");
  cmd->add_option("--norm", f.norm, "Score normalization")
      ->check(CLI::IsMember({"raw", "renorm"}));
  cmd->add_option("--selector", f.selector, "Choice selection")
      ->check(CLI::IsMember({"truncated_argmax", "greedy"}));
  cmd->add_option("--max-new-tokens", f.max_new_tokens, "Generation budget");
  cmd->add_option("--rounds", f.rounds, "Generation rounds for nlg2nlg2choice");
  cmd->add_option("--rephrase-template", f.rephrase_template, "Rephrase prompt ({nlg} slot)");
  cmd->add_option("--yes-no-template", f.yes_no_template, "Yes/No prompt ({cname} slot)");
  cmd->add_option("--yes-token", f.yes_token, "Token id used for Yes");
  cmd->add_option("--no-token", f.no_token, "Token id used for No");
  cmd->add_option("--templates", f.templates, "Prompt templates JSON")->required();
  cmd->add_option("--prompt-id", f.prompt_ids, "Restrict to these template ids");
  cmd->add_option("--manifest", f.manifest, "Dataset manifest (JSON lines)")->required();
  cmd->add_option("--out", f.out, "Output directory")->required();
  cmd->add_option("--jobs", f.jobs, "Examples in flight")->check(CLI::PositiveNumber);
  cmd->add_flag("--resume", f.resume, "Continue an existing cache");
  cmd->add_flag("--repair-cache", f.repair, "Drop a damaged final cache line when resuming");
  cmd->add_flag("--timestamps", f.timestamps, "Record wall-clock timestamps");
}

Outcome DoRun(const RunFlags& f, bool retrieval, std::ostream& out) {
  // Everything up to OpenBackend is validation and must not touch a backend.
  CG_CHECK_OK(CheckSources(f, /*need_vocab=*/true), kUsageError);
  CG_ASSIGN_OR_FAIL(profile, LoadProfile(f.profile), kUsageError);
  CG_ASSIGN_OR_FAIL(cfg, MakeRunConfig(f, profile), kUsageError);
  if (retrieval == IsClassification(cfg.method)) {
    return CliError{kUsageError, absl::InvalidArgumentError(absl::StrCat(
                                     "method ", MethodName(cfg.method), " is not valid for ",
                                     retrieval ? "retrieve" : "classify"))};
  }
  CG_ASSIGN_OR_FAIL(choices, LoadChoiceList(profile.choice_list_path), kUsageError);
  CG_ASSIGN_OR_FAIL(examples, LoadManifest(f.manifest, choices), kUsageError);
  if (!f.subsets.empty()) {
    CG_CHECK_OK(AttachChoiceSubsets(f.subsets, choices, examples), kUsageError);
  }
  std::vector<PromptTemplate> prompts;
  if (cfg.method == Method::kYesNo) {
    prompts.push_back(PromptTemplate{"yes_no", cfg.yes_no_template});
  } else {
    CG_ASSIGN_OR_FAIL(selected, SelectPrompts(f), kUsageError);
    if (retrieval && selected.size() > 1) {
      if (!f.prompt_ids.empty()) {
        return CliError{kUsageError,
                        absl::InvalidArgumentError("retrieve takes a single --prompt-id")};
      }
      selected.resize(1);  // first template in the file
    }
    prompts = std::move(selected);
  }
  CG_CHECK_OK(EnsureDir(f.out), kUsageError);
  const std::string cache = (fs::path(f.out) / "cache.jsonl").string();
  std::error_code ec;
  if (!f.resume && fs::exists(cache, ec) && fs::file_size(cache, ec) > 0) {
    return CliError{kUsageError,
                    absl::FailedPreconditionError(absl::StrCat(
                        "cache ", cache,
                        " already has content; pass --resume to continue it or choose a new --out"))};
  }

  CG_ASSIGN_OR_FAIL(backend, OpenBackend(f), kRunError);
  CG_ASSIGN_OR_FAIL(pipeline,
                    Pipeline::Create(cfg, choices, *backend.model, *backend.vocab), kUsageError);
  BatchOptions options;
  options.cache_path = cache;
  options.resume = f.resume;
  options.repair = f.repair;
  CG_ASSIGN_OR_FAIL(result, RunBatch(pipeline, examples, prompts, options), kRunError);

  const Json summary = {{"total", result.summary.total},
                        {"cached", result.summary.cached},
                        {"computed", result.summary.computed},
                        {"failed", result.summary.failed},
                        {"method", MethodName(cfg.method)},
                        {"prompts", static_cast<int64_t>(prompts.size())},
                        {"examples", static_cast<int64_t>(examples.size())}};
  CG_CHECK_OK(WriteFile((fs::path(f.out) / "summary.json").string(), summary.dump(2) + "\n"),
              kRunError);
  if (retrieval) {
    const ScoreMatrix matrix = ScoreMatrixFromRecords(result.records, prompts.front().id);
    CG_CHECK_OK(WriteFile((fs::path(f.out) / "scores.jsonl").string(),
                          ScoreMatrixToJsonLines(matrix)),
                kRunError);
  }
  out << "records: total=" << result.summary.total << " cached=" << result.summary.cached
      << " computed=" << result.summary.computed << " failed=" << result.summary.failed << "\n";
  if (result.summary.failed > 0) {
    return CliError{kPartial,
                    absl::UnavailableError(absl::StrCat(result.summary.failed, " of ",
                                                        result.summary.total,
                                                        " records failed; see ", cache))};
  }
  return std::nullopt;
}

struct PassFlags {
  std::vector<std::string> profiles;
  std::vector<std::string> choices;
  std::string vocab;
  std::string out;
};

Outcome DoPasses(const PassFlags& f, std::ostream& out) {
  if (f.profiles.empty() && f.choices.empty()) {
    return CliError{kUsageError, absl::InvalidArgumentError("give --profile or --choices")};
  }
  CG_ASSIGN_OR_FAIL(vocab, LoadVocabulary(f.vocab), kUsageError);
  std::vector<std::pair<std::string, std::string>> lists;  // (name, path)
  for (const std::string& p : f.profiles) {
    CG_ASSIGN_OR_FAIL(profile, LoadProfile(p), kUsageError);
    lists.emplace_back(profile.name, profile.choice_list_path);
  }
  for (const std::string& c : f.choices) lists.push_back(SplitNamed(c));
  std::vector<PassReport> rows;
  Json doc = Json::array();
  for (const auto& [name, path] : lists) {
    CG_ASSIGN_OR_FAIL(choices, LoadChoiceList(path), kUsageError);
    CG_ASSIGN_OR_FAIL(trie, ChoiceTrie::Build(choices, vocab), kUsageError);
    rows.push_back(MakePassReport(name, trie));
    const PassReport& r = rows.back();
    auto pct = [](std::optional<double> v) { return v ? Json(*v) : Json(nullptr); };
    doc.push_back({{"name", r.name},
                   {"choices", static_cast<int64_t>(choices.size())},
                   {"full", r.full},
                   {"yes_no", r.yes_no},
                   {"truncated", r.truncated},
                   {"yes_no_speedup_pct", pct(SpeedupPercent(r.full, r.yes_no))},
                   {"truncated_speedup_pct", pct(SpeedupPercent(r.full, r.truncated))}});
  }
  const std::string text = RenderPassTable(rows);
  out << text;
  if (!f.out.empty()) {
    CG_CHECK_OK(EnsureDir(f.out), kUsageError);
    CG_CHECK_OK(WriteFile((fs::path(f.out) / "passes.txt").string(), text), kRunError);
    CG_CHECK_OK(WriteFile((fs::path(f.out) / "passes.json").string(), doc.dump(2) + "\n"),
                kRunError);
  }
  return std::nullopt;
}

struct EvalFlags {
  std::string profile;
  std::string manifest;
  std::vector<std::string> runs;
  std::vector<std::string> scores;
  std::string base;
  std::string genus;
  std::string sigma = "population";
  std::string labels;
  std::string prompt_id;
  std::string subsets;
  std::string out;
};

struct EvalInputs {
  ChoiceSet choices;
  std::vector<Example> examples;
  TruthMap truth;
  std::optional<std::string> genus_path;
};

absl::StatusOr<EvalInputs> LoadEvalInputs(const EvalFlags& f) {
  auto profile = LoadProfile(f.profile);
  if (!profile.ok()) return profile.status();
  auto choices = LoadChoiceList(profile->choice_list_path);
  if (!choices.ok()) return choices.status();
  auto examples = LoadManifest(f.manifest, *choices);
  if (!examples.ok()) return examples.status();
  TruthMap truth = TruthFromExamples(*examples);
  return EvalInputs{*std::move(choices), *std::move(examples), std::move(truth),
                    profile->genus_map_path};
}

absl::StatusOr<std::vector<std::pair<std::string, std::vector<RunRecord>>>> LoadRuns(
    const std::vector<std::string>& runs) {
  std::vector<std::pair<std::string, std::vector<RunRecord>>> out;
  for (const std::string& arg : runs) {
    auto [name, path] = SplitNamed(arg);
    auto records = LoadRunCache(path);
    if (!records.ok()) return records.status();
    out.emplace_back(name, *std::move(records));
  }
  return out;
}

std::map<std::string, double> AccuracyByPrompt(const AccuracySummary& s) {
  std::map<std::string, double> out;
  for (const PromptAccuracy& p : s.per_prompt) out[p.prompt_id] = p.accuracy;
  return out;
}

absl::Status WriteReport(const std::string& dir, const std::string& stem,
                         const std::vector<Table>& tables) {
  if (dir.empty()) return absl::OkStatus();
  if (absl::Status s = EnsureDir(dir); !s.ok()) return s;
  if (absl::Status s = WriteFile((fs::path(dir) / (stem + ".txt")).string(), RenderText(tables));
      !s.ok()) {
    return s;
  }
  return WriteFile((fs::path(dir) / (stem + ".json")).string(),
                   RenderJson(tables).dump(2) + "\n");
}

Outcome DoEval(const std::string& kind, const EvalFlags& f, std::ostream& out) {
  CG_ASSIGN_OR_FAIL(in, LoadEvalInputs(f), kUsageError);
  std::vector<Table> tables;
  std::string csv;
  if (kind == "accuracy") {
    CG_ASSIGN_OR_FAIL(runs, LoadRuns(f.runs), kUsageError);
    std::vector<std::pair<std::string, AccuracySummary>> rows;
    for (const auto& [name, records] : runs) {
      CG_ASSIGN_OR_FAIL(acc, AccuracyOverVariations(records, in.truth), kRunError);
      rows.emplace_back(name, acc);
    }
    tables.push_back(AccuracyTable(rows));
  } else if (kind == "map") {
    std::vector<std::pair<std::string, MapResult>> rows;
    for (const std::string& arg : f.scores) {
      auto [name, path] = SplitNamed(arg);
      CG_ASSIGN_OR_FAIL(matrix, LoadScoreMatrix(path), kUsageError);
      CG_ASSIGN_OR_FAIL(result, MapOneVsRest(matrix, in.truth, in.choices.size()), kRunError);
      rows.emplace_back(name, result);
    }
    tables.push_back(MapTable(rows, in.choices));
  } else if (kind == "genus") {
    const std::string path = !f.genus.empty() ? f.genus : in.genus_path.value_or("");
    if (path.empty()) {
      return CliError{kUsageError,
                      absl::InvalidArgumentError("no genus map: pass --genus or set genus_map_path")};
    }
    CG_ASSIGN_OR_FAIL(genus, LoadGenusMap(path, in.choices), kUsageError);
    CG_ASSIGN_OR_FAIL(runs, LoadRuns(f.runs), kUsageError);
    std::vector<std::pair<std::string, GenusResult>> rows;
    for (const auto& [name, records] : runs) {
      CG_ASSIGN_OR_FAIL(result, GenusAccuracy(records, in.truth, genus), kRunError);
      rows.emplace_back(name, result);
    }
    tables.push_back(GenusTable(rows));
  } else if (kind == "stats") {
    CG_ASSIGN_OR_FAIL(base_records, LoadRunCache(f.base), kUsageError);
    CG_ASSIGN_OR_FAIL(base_acc, AccuracyOverVariations(base_records, in.truth), kRunError);
    CG_ASSIGN_OR_FAIL(runs, LoadRuns(f.runs), kUsageError);
    const SigmaKind kind_sigma = f.sigma == "sample" ? SigmaKind::kSample : SigmaKind::kPopulation;
    std::vector<std::pair<std::string, DiffStats>> rows;
    const std::string base_name = fs::path(f.base).stem().string();
    for (const auto& [name, records] : runs) {
      CG_ASSIGN_OR_FAIL(acc, AccuracyOverVariations(records, in.truth), kRunError);
      CG_ASSIGN_OR_FAIL(stats,
                        QuestionLevelDiffStats(AccuracyByPrompt(base_acc), AccuracyByPrompt(acc),
                                               kind_sigma),
                        kRunError);
      rows.emplace_back(absl::StrCat(name, " - ", base_name), stats);
    }
    tables.push_back(DiffStatsTable(rows));
    csv = DiffStatsCsv(rows);
  } else if (kind == "extraction") {
    CG_ASSIGN_OR_FAIL(labels, LoadLabels(f.labels, in.choices), kUsageError);
    CG_ASSIGN_OR_FAIL(runs, LoadRuns(f.runs), kUsageError);
    std::vector<std::pair<std::string, ExtractionResult>> rows;
    for (const auto& [name, records] : runs) {
      std::set<std::string> prompt_ids;
      for (const RunRecord& r : records) prompt_ids.insert(r.prompt_id);
      std::string pid = f.prompt_id;
      if (pid.empty()) {
        if (prompt_ids.size() != 1) {
          return CliError{kUsageError,
                          absl::InvalidArgumentError(absl::StrCat(
                              "run ", name, " has ", prompt_ids.size(),
                              " prompts; choose one with --prompt-id"))};
        }
        pid = *prompt_ids.begin();
      }
      std::map<std::string, std::optional<ChoiceId>> predictions;
      for (const RunRecord& r : records) {
        if (r.prompt_id != pid) continue;
        predictions[r.example_id] =
            r.status == RecordStatus::kOk ? r.prediction : std::optional<ChoiceId>();
      }
      CG_ASSIGN_OR_FAIL(result, ExtractionAgreement(predictions, labels), kRunError);
      rows.emplace_back(name, result);
    }
    tables.push_back(ExtractionTable(rows));
  } else if (kind == "subset") {
    CG_CHECK_OK(AttachChoiceSubsets(f.subsets, in.choices, in.examples), kUsageError);
    CG_ASSIGN_OR_FAIL(runs, LoadRuns(f.runs), kUsageError);
    std::vector<std::pair<std::string, SubsetResult>> rows;
    for (const auto& [name, records] : runs) {
      CG_ASSIGN_OR_FAIL(result, SubsetChoiceEval(records, in.examples), kRunError);
      rows.emplace_back(name, result);
    }
    tables.push_back(SubsetTable(rows));
  }
  out << RenderText(tables);
  CG_CHECK_OK(WriteReport(f.out, kind, tables), kRunError);
  if (!csv.empty() && !f.out.empty()) {
    CG_CHECK_OK(WriteFile((fs::path(f.out) / "stats.csv").string(), csv), kRunError);
  }
  return std::nullopt;
}

struct ReportFlags {
  std::vector<std::string> inputs;
  std::string out;
};

Outcome DoReport(const ReportFlags& f, std::ostream& out) {
  std::vector<Table> tables;
  for (const std::string& path : f.inputs) {
    CG_ASSIGN_OR_FAIL(text, ReadFile(path), kUsageError);
    CG_ASSIGN_OR_FAIL(doc, ParseJsonStrict(text), kUsageError);
    CG_ASSIGN_OR_FAIL(parsed, TablesFromJson(doc), kUsageError);
    for (Table& t : parsed) tables.push_back(std::move(t));
  }
  const std::string text = RenderText(tables);
  out << text;
  if (!f.out.empty()) CG_CHECK_OK(WriteFile(f.out, text), kRunError);
  return std::nullopt;
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"choicegate: constrained choice selection and evaluation"};
  app.require_subcommand(1);

  PassFlags pass_flags;
  auto* passes = app.add_subcommand("passes", "Forward-pass accounting per choice list");
  passes->add_option("--profile", pass_flags.profiles, "Dataset profile(s)");
  passes->add_option("--choices", pass_flags.choices, "Choice list(s), NAME=PATH or PATH");
  passes->add_option("--vocab", pass_flags.vocab, "Vocabulary JSON file")->required();
  passes->add_option("--out", pass_flags.out, "Write passes.txt and passes.json here");

  RunFlags classify_flags;
  auto* classify = app.add_subcommand("classify", "Classify a manifest under every prompt");
  AddRunFlags(classify, classify_flags,
              {"choice", "nlg2choice", "nlg2choice_open", "nlg2nlg2choice"}, "nlg2choice");
  classify->add_option("--subsets", classify_flags.subsets,
                       "Per-example choice subsets (JSON lines)");

  RunFlags retrieve_flags;
  auto* retrieve = app.add_subcommand("retrieve", "Score every example against every class");
  AddRunFlags(retrieve, retrieve_flags, {"retrieval_trunc", "yes_no"}, "retrieval_trunc");

  EvalFlags eval_flags;
  auto* eval = app.add_subcommand("eval", "Metrics over caches and score matrices");
  eval->require_subcommand(1);
  std::string eval_kind;
  for (const char* kind : {"accuracy", "map", "genus", "stats", "extraction", "subset"}) {
    auto* sub = eval->add_subcommand(kind);
    sub->add_option("--profile", eval_flags.profile, "Dataset profile")->required();
    sub->add_option("--manifest", eval_flags.manifest, "Dataset manifest")->required();
    sub->add_option("--out", eval_flags.out, "Write <kind>.txt and <kind>.json here");
    sub->callback([&eval_kind, kind] { eval_kind = kind; });
    const std::string k = kind;
    if (k == "map") {
      sub->add_option("--scores", eval_flags.scores, "Score matrix, NAME=PATH")->required();
    } else {
      sub->add_option("--run", eval_flags.runs, "Run cache, NAME=PATH")->required();
    }
    if (k == "genus") sub->add_option("--genus", eval_flags.genus, "Genus map JSON");
    if (k == "stats") {
      sub->add_option("--base", eval_flags.base, "Baseline run cache (A)")->required();
      sub->add_option("--sigma", eval_flags.sigma, "population or sample")
          ->check(CLI::IsMember({"population", "sample"}));
    }
    if (k == "extraction") {
      sub->add_option("--labels", eval_flags.labels, "Label records (JSON lines)")->required();
      sub->add_option("--prompt-id", eval_flags.prompt_id, "Prompt whose predictions are scored");
    }
    if (k == "subset") {
      sub->add_option("--subsets", eval_flags.subsets, "Per-example subsets")->required();
    }
  }

  ReportFlags report_flags;
  auto* report = app.add_subcommand("report", "Render saved report JSON as text tables");
  report->add_option("inputs", report_flags.inputs, "Report JSON files")->required();
  report->add_option("--out", report_flags.out, "Write the text here");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsageError;
  }

  Outcome outcome;
  if (passes->parsed()) {
    outcome = DoPasses(pass_flags, out);
  } else if (classify->parsed()) {
    outcome = DoRun(classify_flags, /*retrieval=*/false, out);
  } else if (retrieve->parsed()) {
    outcome = DoRun(retrieve_flags, /*retrieval=*/true, out);
  } else if (eval->parsed()) {
    outcome = DoEval(eval_kind, eval_flags, out);
  } else if (report->parsed()) {
    outcome = DoReport(report_flags, out);
  }
  if (!outcome) return kOk;
  err << "error: " << outcome->status.message() << "\n";
  return outcome->code;
}

}  // namespace choicegate::cli
