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

#include "choicegate/eval.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "absl/strings/str_cat.h"
#include "choicegate/json_util.h"
#include "choicegate/kernels.h"

namespace choicegate {
namespace {

double Percent(int64_t num, int64_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

bool IsCorrect(const RunRecord& r, ChoiceId truth) {
  return r.status == RecordStatus::kOk && r.prediction && *r.prediction == truth;
}

// Byte offsets of every code point boundary (size = code points + 1).
absl::StatusOr<std::vector<size_t>> CodePointOffsets(absl::string_view s) {
  std::vector<size_t> out;
  size_t i = 0;
  while (i < s.size()) {
    out.push_back(i);
    const auto c = static_cast<unsigned char>(s[i]);
    size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
    if (len == 0 || i + len > s.size()) return absl::InvalidArgumentError("invalid UTF-8");
    for (size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) {
        return absl::InvalidArgumentError("invalid UTF-8");
      }
    }
    i += len;
  }
  out.push_back(s.size());
  return out;
}

absl::StatusOr<Resolution> ParseResolution(absl::string_view name) {
  for (Resolution r : {Resolution::kAnswer, Resolution::kSchemaFailure, Resolution::kNoSpecies,
                       Resolution::kRefused, Resolution::kNoInformation}) {
    if (ResolutionName(r) == name) return r;
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown resolution \"", name, "\""));
}

}  // namespace

TruthMap TruthFromExamples(const std::vector<Example>& examples) {
  TruthMap out;
  for (const Example& ex : examples) out[ex.id] = ex.ground_truth;
  return out;
}

absl::StatusOr<AccuracySummary> AccuracyOverVariations(const std::vector<RunRecord>& records,
                                                       const TruthMap& truth) {
  std::map<std::string, std::set<std::string>> coverage;
  std::map<std::string, PromptAccuracy> by_prompt;
  AccuracySummary out;
  for (const RunRecord& r : records) {
    if (!IsClassification(r.method)) {
      return absl::InvalidArgumentError(
          absl::StrCat("record for ", r.example_id, " is not a classification record"));
    }
    auto it = truth.find(r.example_id);
    if (it == truth.end()) {
      return absl::NotFoundError(absl::StrCat("no ground truth for example ", r.example_id));
    }
    if (!coverage[r.prompt_id].insert(r.example_id).second) {
      return absl::InvalidArgumentError(
          absl::StrCat("duplicate record (", r.example_id, ", ", r.prompt_id, ")"));
    }
    PromptAccuracy& acc = by_prompt[r.prompt_id];
    acc.prompt_id = r.prompt_id;
    ++acc.total;
    if (IsCorrect(r, it->second)) ++acc.correct;
    if (r.status == RecordStatus::kFailed) ++out.failed;
  }
  if (by_prompt.empty()) return absl::InvalidArgumentError("no records");
  const std::set<std::string>& reference = coverage.begin()->second;
  for (const auto& [pid, ids] : coverage) {
    if (ids != reference) {
      return absl::InvalidArgumentError(absl::StrCat("prompt ", pid, " covers ", ids.size(),
                                                     " examples but prompt ",
                                                     coverage.begin()->first, " covers ",
                                                     reference.size(), " (or different ids)"));
    }
  }
  double sum = 0.0;
  for (auto& [pid, acc] : by_prompt) {
    acc.accuracy = Percent(acc.correct, acc.total);
    sum += acc.accuracy;
    out.per_prompt.push_back(acc);
  }
  out.mean = sum / static_cast<double>(out.per_prompt.size());
  return out;
}

absl::StatusOr<MapResult> MapOneVsRest(const ScoreMatrix& matrix, const TruthMap& truth,
                                       size_t num_classes, Execution exec) {
  if (num_classes == 0) return absl::InvalidArgumentError("no classes");
  ScoreRows rows;
  std::vector<int32_t> labels;
  for (size_t i = 0; i < matrix.rows.size(); ++i) {
    auto it = truth.find(matrix.example_ids[i]);
    if (it == truth.end()) {
      return absl::NotFoundError(
          absl::StrCat("no ground truth for example ", matrix.example_ids[i]));
    }
    if (matrix.rows[i].size() != num_classes) {
      return absl::InvalidArgumentError(absl::StrCat("row ", matrix.example_ids[i], " has ",
                                                     matrix.rows[i].size(), " scores, expected ",
                                                     num_classes));
    }
    rows.push_back(matrix.rows[i]);
    labels.push_back(it->second);
  }
  MapResult out;
  out.examples = static_cast<int64_t>(rows.size());
  out.per_class = exec == Execution::kParallel
                      ? parallel::AveragePrecisionPerClass(rows, labels, num_classes)
                      : serial::AveragePrecisionPerClass(rows, labels, num_classes);
  double sum = 0.0;
  size_t kept = 0;
  for (size_t c = 0; c < num_classes; ++c) {
    if (out.per_class[c]) {
      sum += *out.per_class[c];
      ++kept;
    } else {
      out.excluded.push_back(static_cast<ChoiceId>(c));
    }
  }
  if (kept == 0) return absl::InvalidArgumentError("no class has a positive example");
  out.map = 100.0 * sum / static_cast<double>(kept);
  return out;
}

absl::StatusOr<GenusMap> LoadGenusMap(const std::string& path, const ChoiceSet& choices) {
  auto text = ReadFile(path);
  if (!text.ok()) return text.status();
  auto doc = ParseJsonStrict(*text);
  if (!doc.ok()) {
    return absl::Status(doc.status().code(), absl::StrCat(path, ": ", doc.status().message()));
  }
  if (!doc->is_object()) return absl::InvalidArgumentError(absl::StrCat(path, ": expected an object"));
  GenusMap out(choices.size());
  std::vector<bool> seen(choices.size(), false);
  for (const auto& [label, genus] : doc->items()) {
    auto id = choices.Find(label);
    if (!id) {
      return absl::NotFoundError(absl::StrCat(path, ": \"", label, "\" is not in the choice set"));
    }
    if (!genus.is_string() || genus.get<std::string>().empty()) {
      return absl::InvalidArgumentError(absl::StrCat(path, ": genus of \"", label,
                                                     "\" must be a non-empty string"));
    }
    out[*id] = genus.get<std::string>();
    seen[*id] = true;
  }
  for (size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) {
      return absl::NotFoundError(absl::StrCat(path, ": missing genus for \"",
                                              choices.label(static_cast<ChoiceId>(i)), "\""));
    }
  }
  return out;
}

absl::StatusOr<GenusResult> GenusAccuracy(const std::vector<RunRecord>& records,
                                          const TruthMap& truth, const GenusMap& genus) {
  GenusResult out;
  for (const RunRecord& r : records) {
    auto it = truth.find(r.example_id);
    if (it == truth.end()) {
      return absl::NotFoundError(absl::StrCat("no ground truth for example ", r.example_id));
    }
    ++out.total;
    if (IsCorrect(r, it->second)) continue;
    ++out.misclassified;
    if (r.status != RecordStatus::kOk || !r.prediction) continue;
    const auto pred = static_cast<size_t>(*r.prediction);
    const auto gt = static_cast<size_t>(it->second);
    if (pred >= genus.size() || gt >= genus.size()) {
      return absl::NotFoundError(absl::StrCat("missing genus entry for example ", r.example_id));
    }
    if (genus[pred] == genus[gt]) ++out.genus_matches;
  }
  out.pct_misclassified = Percent(out.misclassified, out.total);
  if (out.misclassified > 0) out.genus_rate = Percent(out.genus_matches, out.misclassified);
  return out;
}

absl::StatusOr<DiffStats> QuestionLevelDiffStats(const std::map<std::string, double>& a,
                                                 const std::map<std::string, double>& b,
                                                 SigmaKind kind) {
  if (a.empty()) return absl::InvalidArgumentError("no questions");
  if (a.size() != b.size()) {
    return absl::InvalidArgumentError(
        absl::StrCat("prompt count mismatch: ", a.size(), " vs ", b.size()));
  }
  DiffStats out;
  out.sigma_kind = kind;
  for (const auto& [pid, acc_a] : a) {
    auto it = b.find(pid);
    if (it == b.end()) return absl::InvalidArgumentError(absl::StrCat("prompt ", pid, " missing in B"));
    out.prompt_ids.push_back(pid);
    out.deltas.push_back(it->second - acc_a);
  }
  const auto n = static_cast<double>(out.deltas.size());
  if (kind == SigmaKind::kSample && out.deltas.size() < 2) {
    return absl::InvalidArgumentError("sample sigma needs at least two questions");
  }
  double sum = 0.0;
  for (double d : out.deltas) sum += d;
  out.mean = sum / n;
  double ss = 0.0;
  for (double d : out.deltas) ss += (d - out.mean) * (d - out.mean);
  out.sigma = std::sqrt(ss / (kind == SigmaKind::kPopulation ? n : n - 1.0));
  const double half = 1.96 * out.sigma / std::sqrt(n);
  out.ci_low = out.mean - half;
  out.ci_high = out.mean + half;
  return out;
}

absl::string_view ResolutionName(Resolution r) {
  switch (r) {
    case Resolution::kAnswer:
      return "answer";
    case Resolution::kSchemaFailure:
      return "schema_failure";
    case Resolution::kNoSpecies:
      return "no_species";
    case Resolution::kRefused:
      return "refused";
    case Resolution::kNoInformation:
      return "no_information";
  }
  return "answer";
}

absl::Status ValidateLabel(const LabelRecord& label) {
  if (!label.span) return absl::OkStatus();
  auto offsets = CodePointOffsets(label.nlg);
  if (!offsets.ok()) return offsets.status();
  const auto [start, end] = *label.span;
  const auto cps = static_cast<int64_t>(offsets->size()) - 1;
  if (start < 0 || end <= start || end > cps) {
    return absl::OutOfRangeError(absl::StrCat("span [", start, ", ", end, ") outside text of ",
                                              cps, " characters"));
  }
  const size_t b0 = (*offsets)[static_cast<size_t>(start)];
  const size_t b1 = (*offsets)[static_cast<size_t>(end)];
  const absl::string_view text(label.nlg);
  if (text.find(text.substr(b0, b1 - b0)) != b0) {
    return absl::InvalidArgumentError("span is not the first occurrence of its text");
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<LabelRecord>> LoadLabels(const std::string& path,
                                                    const ChoiceSet& choices) {
  auto docs = ReadJsonLines(path);
  if (!docs.ok()) return docs.status();
  std::vector<LabelRecord> out;
  std::set<std::string> seen;
  for (size_t i = 0; i < docs->size(); ++i) {
    const Json& doc = (*docs)[i];
    auto fail = [&](absl::string_view why) {
      return absl::InvalidArgumentError(absl::StrCat(path, ": record ", i + 1, ": ", why));
    };
    LabelRecord rec;
    try {
      rec.example_id = doc.at("example_id").get<std::string>();
      rec.nlg = doc.at("nlg").get<std::string>();
      if (doc.contains("span") && !doc["span"].is_null()) {
        const Json& span = doc["span"];
        if (!span.is_array() || span.size() != 2) return fail("span must be [start, end]");
        rec.span = std::make_pair(span[0].get<int64_t>(), span[1].get<int64_t>());
      }
      auto res = ParseResolution(doc.at("resolution").get<std::string>());
      if (!res.ok()) return fail(res.status().message());
      rec.resolution = *res;
      if (rec.resolution == Resolution::kAnswer) {
        if (!doc.contains("answer") || !doc["answer"].is_string()) {
          return fail("resolution \"answer\" needs a string \"answer\"");
        }
        const std::string answer = doc["answer"].get<std::string>();
        if (auto id = choices.Find(answer)) {
          rec.answer = *id;
        } else {
          rec.answer_species = answer;
        }
      }
    } catch (const Json::exception& e) {
      return fail(e.what());
    }
    if (absl::Status s = ValidateLabel(rec); !s.ok()) return fail(s.message());
    if (!seen.insert(rec.example_id).second) {
      return fail(absl::StrCat("duplicate example id ", rec.example_id));
    }
    out.push_back(std::move(rec));
  }
  return out;
}

absl::StatusOr<ExtractionResult> ExtractionAgreement(
    const std::map<std::string, std::optional<ChoiceId>>& predictions,
    const std::vector<LabelRecord>& labels) {
  if (labels.empty()) return absl::InvalidArgumentError("no labels");
  ExtractionResult out;
  int64_t answer_oos = 0, schema_failure = 0, no_species = 0, refused = 0, no_info = 0;
  for (const LabelRecord& label : labels) {
    auto it = predictions.find(label.example_id);
    if (it == predictions.end()) {
      return absl::NotFoundError(absl::StrCat("no prediction for labeled example ",
                                              label.example_id));
    }
    ++out.labels;
    switch (label.resolution) {
      case Resolution::kAnswer:
        if (label.answer) {
          ++out.in_schema;
          if (it->second && *it->second == *label.answer) ++out.agreed;
        } else {
          ++answer_oos;
        }
        break;
      case Resolution::kSchemaFailure:
        ++schema_failure;
        break;
      case Resolution::kNoSpecies:
        ++no_species;
        break;
      case Resolution::kRefused:
        ++refused;
        break;
      case Resolution::kNoInformation:
        ++no_info;
        break;
    }
  }
  out.agreement = Percent(out.agreed, out.in_schema);
  out.pct_in_schema = Percent(out.in_schema, out.labels);
  out.pct_answer_out_of_schema = Percent(answer_oos, out.labels);
  out.pct_schema_failure = Percent(schema_failure, out.labels);
  out.pct_out_of_schema = Percent(answer_oos + schema_failure, out.labels);
  out.pct_no_species = Percent(no_species, out.labels);
  out.pct_refused = Percent(refused, out.labels);
  out.pct_no_information = Percent(no_info, out.labels);
  return out;
}

absl::StatusOr<SubsetResult> SubsetChoiceEval(const std::vector<RunRecord>& records,
                                              const std::vector<Example>& examples) {
  std::map<std::string, const Example*> by_id;
  for (const Example& ex : examples) {
    if (!ex.choice_subset) {
      return absl::InvalidArgumentError(absl::StrCat("example ", ex.id, " has no choice subset"));
    }
    const auto& subset = *ex.choice_subset;
    if (std::find(subset.begin(), subset.end(), ex.ground_truth) == subset.end()) {
      return absl::InvalidArgumentError(
          absl::StrCat("subset for ", ex.id, " does not contain the ground truth"));
    }
    by_id[ex.id] = &ex;
  }
  SubsetResult out;
  for (const RunRecord& r : records) {
    auto it = by_id.find(r.example_id);
    if (it == by_id.end()) {
      return absl::NotFoundError(absl::StrCat("no example for record ", r.example_id));
    }
    const auto& subset = *it->second->choice_subset;
    if (r.status == RecordStatus::kOk && r.prediction &&
        std::find(subset.begin(), subset.end(), *r.prediction) == subset.end()) {
      return absl::InternalError(
          absl::StrCat("prediction for ", r.example_id, " lies outside its subset"));
    }
    ++out.total;
    if (IsCorrect(r, it->second->ground_truth)) ++out.correct;
  }
  if (out.total == 0) return absl::InvalidArgumentError("no records");
  out.accuracy = Percent(out.correct, out.total);
  return out;
}

}  // namespace choicegate
