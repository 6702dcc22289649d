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

#ifndef CHOICEGATE_PROMPTS_H_
#define CHOICEGATE_PROMPTS_H_

#include <map>
#include <optional>
#include <string>
#include "absl/strings/string_view.h"
#include <vector>

#include "absl/status/statusor.h"
#include "choicegate/choice_trie.h"

namespace choicegate {

// A prompt with {placeholder} slots. Recognized names are type, domain,
// choice_list, cname and nlg; whitespace inside the braces is ignored, so
// "{ type }" and "{type}" are the same slot. An unknown identifier in braces
// ("{tpye}") is an error; any other brace group is kept as literal text.
struct PromptTemplate {
  std::string id;
  std::string body;
};

struct DatasetProfile {
  std::string name;
  std::string type;    // e.g. "species"
  std::string domain;  // e.g. "bird"
  std::string choice_list_path;
  std::optional<std::string> genus_map_path;
};

enum class SteeringMode { kOpen, kTypeOnly, kChoiceList };

absl::string_view SteeringName(SteeringMode mode);
std::optional<SteeringMode> ParseSteering(absl::string_view name);

using Bindings = std::map<std::string, std::string>;

// Placeholder names referenced by `body`, in order of first appearance.
absl::StatusOr<std::vector<std::string>> Placeholders(absl::string_view body);

// Single-pass substitution: text substituted into a slot is never re-scanned.
// type and domain come from the profile unless `bindings` overrides them.
absl::StatusOr<std::string> Instantiate(const PromptTemplate& tpl,
                                        const DatasetProfile& profile,
                                        const Bindings& bindings);

struct Stage1Prompt {
  std::string prompt;
  std::optional<std::string> forced_prefix;
};

// Base question plus steering suffix (joined by one space):
//   open        -> nothing appended
//   type_only   -> "Answer with {type} only."
//   choice_list -> "Answer from {choice_list}."
// A CoT prefix, when given, becomes the forced assistant prefix.
absl::StatusOr<Stage1Prompt> BuildStage1Prompt(
    const PromptTemplate& base, const DatasetProfile& profile,
    const ChoiceSet& choices, SteeringMode steering,
    const std::optional<std::string>& cot_prefix);

// Text-only selection prompt built from a free-form response.
absl::StatusOr<std::string> BuildStage2Prompt(const DatasetProfile& profile,
                                              const ChoiceSet& choices,
                                              absl::string_view nlg);

inline constexpr absl::string_view kStage2Template =
    "What is the most likely {type} of {domain} indicated in this response?"
    "\n\nResponse: {nlg}\n\nAnswer from the following: {choice_list}";
inline constexpr absl::string_view kYesNoTemplate = "Is this a {cname}?";
// Not from any published recipe; a neutral default for the rephrase round.
inline constexpr absl::string_view kRephraseTemplate =
    "Rephrase the following response so that it states only the {type} of "
    "{domain} it identifies.\n\nResponse: {nlg}";

absl::StatusOr<std::string> BuildYesNoPrompt(
    const DatasetProfile& profile, const ChoiceSet& choices,
    absl::string_view cname,
    absl::string_view template_body = kYesNoTemplate);

absl::StatusOr<std::string> BuildRephrasePrompt(
    const DatasetProfile& profile, absl::string_view nlg,
    absl::string_view template_body = kRephraseTemplate);

// Template file: JSON array of {"id", "body"}; ids must be unique and bodies
// must only reference known placeholders.
absl::StatusOr<std::vector<PromptTemplate>> LoadTemplates(const std::string& path);
// Profile file: {"name","type","domain","choice_list_path","genus_map_path"}.
// Relative paths resolve against the profile's directory.
absl::StatusOr<DatasetProfile> LoadProfile(const std::string& path);

}  // namespace choicegate

#endif  // CHOICEGATE_PROMPTS_H_
