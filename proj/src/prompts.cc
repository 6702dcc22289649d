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

#include "choicegate/prompts.h"

#include <algorithm>
#include <filesystem>
#include <set>

#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "choicegate/json_util.h"

namespace choicegate {
namespace {

constexpr absl::string_view kKnownSlots[] = {"type", "domain", "choice_list",
                                            "cname", "nlg"};

bool IsKnownSlot(absl::string_view name) {
  return std::find(std::begin(kKnownSlots), std::end(kKnownSlots), name) !=
         std::end(kKnownSlots);
}

bool LooksLikeIdentifier(absl::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return absl::ascii_isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

// A brace group [open, close] naming a known slot.
struct Slot {
  size_t open;
  size_t close;
  std::string name;
};

absl::StatusOr<std::vector<Slot>> ScanSlots(absl::string_view body) {
  std::vector<Slot> slots;
  size_t pos = 0;
  while ((pos = body.find('{', pos)) != absl::string_view::npos) {
    size_t close = body.find('}', pos + 1);
    if (close == absl::string_view::npos) break;
    absl::string_view inner = absl::StripAsciiWhitespace(body.substr(pos + 1, close - pos - 1));
    if (IsKnownSlot(inner)) {
      slots.push_back(Slot{pos, close, std::string(inner)});
      pos = close + 1;
    } else if (LooksLikeIdentifier(inner)) {
      return absl::InvalidArgumentError(
          absl::StrCat("unknown placeholder {", inner, "}"));
    } else {
      pos = pos + 1;
    }
  }
  return slots;
}

std::string ResolvePath(const std::filesystem::path& base_dir, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative()) path = base_dir / path;
  return path.lexically_normal().string();
}

}  // namespace

absl::string_view SteeringName(SteeringMode mode) {
  switch (mode) {
    case SteeringMode::kOpen:
      return "open";
    case SteeringMode::kTypeOnly:
      return "type_only";
    case SteeringMode::kChoiceList:
      return "choice_list";
  }
  return "open";
}

std::optional<SteeringMode> ParseSteering(absl::string_view name) {
  if (name == "open") return SteeringMode::kOpen;
  if (name == "type_only") return SteeringMode::kTypeOnly;
  if (name == "choice_list") return SteeringMode::kChoiceList;
  return std::nullopt;
}

absl::StatusOr<std::vector<std::string>> Placeholders(absl::string_view body) {
  auto slots = ScanSlots(body);
  if (!slots.ok()) return slots.status();
  std::vector<std::string> names;
  for (const Slot& s : *slots) {
    if (std::find(names.begin(), names.end(), s.name) == names.end()) {
      names.push_back(s.name);
    }
  }
  return names;
}

absl::StatusOr<std::string> Instantiate(const PromptTemplate& tpl,
                                        const DatasetProfile& profile,
                                        const Bindings& bindings) {
  auto slots = ScanSlots(tpl.body);
  if (!slots.ok()) return slots.status();
  auto lookup = [&](const std::string& name) -> const std::string* {
    if (auto it = bindings.find(name); it != bindings.end()) return &it->second;
    if (name == "type" && !profile.type.empty()) return &profile.type;
    if (name == "domain" && !profile.domain.empty()) return &profile.domain;
    return nullptr;
  };
  std::string out;
  size_t last = 0;
  for (const Slot& s : *slots) {
    const std::string* value = lookup(s.name);
    if (value == nullptr) {
      return absl::InvalidArgumentError(absl::StrCat(
          "unbound placeholder {", s.name, "} in template \"", tpl.id, "\""));
    }
    out.append(tpl.body, last, s.open - last);
    out += *value;
    last = s.close + 1;
  }
  out.append(tpl.body, last, std::string::npos);
  return out;
}

absl::StatusOr<Stage1Prompt> BuildStage1Prompt(
    const PromptTemplate& base, const DatasetProfile& profile,
    const ChoiceSet& choices, SteeringMode steering,
    const std::optional<std::string>& cot_prefix) {
  if (cot_prefix && cot_prefix->empty()) {
    return absl::InvalidArgumentError("CoT prefix must be non-empty");
  }
  const Bindings bindings = {{"choice_list", choices.Joined()}};
  auto question = Instantiate(base, profile, bindings);
  if (!question.ok()) return question.status();
  Stage1Prompt out;
  out.prompt = *std::move(question);
  std::optional<PromptTemplate> suffix;
  if (steering == SteeringMode::kTypeOnly) {
    suffix = PromptTemplate{"suffix.type_only", "Answer with {type} only."};
  } else if (steering == SteeringMode::kChoiceList) {
    suffix = PromptTemplate{"suffix.choice_list", "Answer from {choice_list}."};
  }
  if (suffix) {
    auto text = Instantiate(*suffix, profile, bindings);
    if (!text.ok()) return text.status();
    absl::StrAppend(&out.prompt, " ", *text);
  }
  out.forced_prefix = cot_prefix;
  return out;
}

absl::StatusOr<std::string> BuildStage2Prompt(const DatasetProfile& profile,
                                              const ChoiceSet& choices,
                                              absl::string_view nlg) {
  if (nlg.empty()) return absl::InvalidArgumentError("empty response text");
  return Instantiate(PromptTemplate{"stage2", std::string(kStage2Template)}, profile,
                     {{"nlg", std::string(nlg)}, {"choice_list", choices.Joined()}});
}

absl::StatusOr<std::string> BuildYesNoPrompt(const DatasetProfile& profile,
                                             const ChoiceSet& choices,
                                             absl::string_view cname,
                                             absl::string_view template_body) {
  if (!choices.Find(cname)) {
    return absl::NotFoundError(absl::StrCat("\"", cname, "\" is not in the choice set"));
  }
  return Instantiate(PromptTemplate{"yes_no", std::string(template_body)}, profile,
                     {{"cname", std::string(cname)}});
}

absl::StatusOr<std::string> BuildRephrasePrompt(const DatasetProfile& profile,
                                                absl::string_view nlg,
                                                absl::string_view template_body) {
  return Instantiate(PromptTemplate{"rephrase", std::string(template_body)}, profile,
                     {{"nlg", std::string(nlg)}});
}

absl::StatusOr<std::vector<PromptTemplate>> LoadTemplates(const std::string& path) {
  auto text = ReadFile(path);
  if (!text.ok()) return text.status();
  auto doc = ParseJsonStrict(*text);
  if (!doc.ok()) {
    return absl::Status(doc.status().code(), absl::StrCat(path, ": ", doc.status().message()));
  }
  if (!doc->is_array()) return absl::InvalidArgumentError(absl::StrCat(path, ": expected an array"));
  std::vector<PromptTemplate> out;
  std::set<std::string> ids;
  for (size_t i = 0; i < doc->size(); ++i) {
    const Json& entry = (*doc)[i];
    if (!entry.is_object() || !entry.contains("id") || !entry["id"].is_string() ||
        !entry.contains("body") || !entry["body"].is_string()) {
      return absl::InvalidArgumentError(
          absl::StrCat(path, ": entry ", i, " needs string \"id\" and \"body\""));
    }
    PromptTemplate tpl{entry["id"].get<std::string>(), entry["body"].get<std::string>()};
    if (!ids.insert(tpl.id).second) {
      return absl::AlreadyExistsError(absl::StrCat(path, ": duplicate template id ", tpl.id));
    }
    if (auto names = Placeholders(tpl.body); !names.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat(path, ": template ", tpl.id, ": ", names.status().message()));
    }
    out.push_back(std::move(tpl));
  }
  return out;
}

absl::StatusOr<DatasetProfile> LoadProfile(const std::string& path) {
  auto text = ReadFile(path);
  if (!text.ok()) return text.status();
  auto doc = ParseJsonStrict(*text);
  if (!doc.ok()) {
    return absl::Status(doc.status().code(), absl::StrCat(path, ": ", doc.status().message()));
  }
  DatasetProfile p;
  try {
    p.name = doc->at("name").get<std::string>();
    p.type = doc->at("type").get<std::string>();
    p.domain = doc->at("domain").get<std::string>();
    p.choice_list_path = doc->at("choice_list_path").get<std::string>();
    if (doc->contains("genus_map_path") && !(*doc)["genus_map_path"].is_null()) {
      p.genus_map_path = (*doc)["genus_map_path"].get<std::string>();
    }
  } catch (const Json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": ", e.what()));
  }
  if (p.type.empty() || p.domain.empty()) {
    return absl::InvalidArgumentError(absl::StrCat(path, ": type and domain must be non-empty"));
  }
  const auto dir = std::filesystem::path(path).parent_path();
  p.choice_list_path = ResolvePath(dir, p.choice_list_path);
  if (p.genus_map_path) p.genus_map_path = ResolvePath(dir, *p.genus_map_path);
  return p;
}

}  // namespace choicegate
