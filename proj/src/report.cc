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

#include "choicegate/report.h"

#include <algorithm>
#include <cstdio>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"

namespace choicegate {
namespace {

Json OptionalJson(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::string Fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

void Table::AddRow(std::vector<Json> row) {
  std::vector<std::string> text;
  text.reserve(row.size());
  for (const Json& v : row) text.push_back(FormatCell(v));
  cells.push_back(std::move(text));
  values.push_back(std::move(row));
}

std::string FormatCell(const Json& value) {
  if (value.is_null()) return "n/a";
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return absl::StrCat(value.get<int64_t>());
  if (value.is_number()) return Fixed(value.get<double>(), 2);
  return value.dump();
}

std::string RenderText(const std::vector<Table>& tables) {
  std::string out;
  for (const Table& t : tables) {
    std::vector<size_t> width(t.header.size(), 0);
    for (size_t c = 0; c < t.header.size(); ++c) width[c] = t.header[c].size();
    for (const auto& row : t.cells) {
      for (size_t c = 0; c < row.size() && c < width.size(); ++c) {
        width[c] = std::max(width[c], row[c].size());
      }
    }
    auto line = [&](const std::vector<std::string>& row) {
      std::string s;
      for (size_t c = 0; c < row.size(); ++c) {
        if (c > 0) s += " | ";
        s += row[c];
        if (c + 1 < row.size()) s.append(width[c] - row[c].size(), ' ');
      }
      return s + "\n";
    };
    absl::StrAppend(&out, t.title, "\n", line(t.header));
    std::vector<std::string> rule;
    for (size_t w : width) rule.emplace_back(w, '-');
    out += absl::StrJoin(rule, "-+-") + "\n";
    for (const auto& row : t.cells) out += line(row);
    out += "\n";
  }
  return out;
}

Json RenderJson(const std::vector<Table>& tables) {
  Json out = Json::array();
  for (const Table& t : tables) {
    Json rows = Json::array();
    for (const auto& row : t.values) {
      Json obj = Json::object();
      for (size_t c = 0; c < row.size() && c < t.header.size(); ++c) obj[t.header[c]] = row[c];
      rows.push_back(std::move(obj));
    }
    out.push_back({{"title", t.title}, {"columns", t.header}, {"rows", std::move(rows)}});
  }
  return out;
}

absl::StatusOr<std::vector<Table>> TablesFromJson(const Json& doc) {
  if (!doc.is_array()) return absl::InvalidArgumentError("report must be an array of tables");
  std::vector<Table> out;
  try {
    for (const Json& t : doc) {
      Table table;
      table.title = t.at("title").get<std::string>();
      table.header = t.at("columns").get<std::vector<std::string>>();
      for (const Json& row : t.at("rows")) {
        std::vector<Json> values;
        for (const std::string& col : table.header) {
          values.push_back(row.contains(col) ? row[col] : Json(nullptr));
        }
        table.AddRow(std::move(values));
      }
      out.push_back(std::move(table));
    }
  } catch (const Json::exception& e) {
    return absl::InvalidArgumentError(absl::StrCat("malformed report: ", e.what()));
  }
  return out;
}

Table AccuracyTable(const std::vector<std::pair<std::string, AccuracySummary>>& rows) {
  Table t{"Accuracy over prompt variations", {"Method", "Mean", "Prompts", "Failed"}, {}, {}};
  std::vector<std::string> prompt_ids;
  for (const auto& [name, s] : rows) {
    for (const PromptAccuracy& p : s.per_prompt) {
      if (std::find(prompt_ids.begin(), prompt_ids.end(), p.prompt_id) == prompt_ids.end()) {
        prompt_ids.push_back(p.prompt_id);
      }
    }
  }
  std::sort(prompt_ids.begin(), prompt_ids.end());
  for (const std::string& pid : prompt_ids) t.header.push_back(pid);
  for (const auto& [name, s] : rows) {
    std::vector<Json> row = {name, s.mean, static_cast<int64_t>(s.per_prompt.size()), s.failed};
    for (const std::string& pid : prompt_ids) {
      auto it = std::find_if(s.per_prompt.begin(), s.per_prompt.end(),
                             [&](const PromptAccuracy& p) { return p.prompt_id == pid; });
      row.push_back(it == s.per_prompt.end() ? Json(nullptr) : Json(it->accuracy));
    }
    t.AddRow(std::move(row));
  }
  return t;
}

Table MapTable(const std::vector<std::pair<std::string, MapResult>>& rows,
               const ChoiceSet& choices) {
  Table t{"One-vs-rest retrieval", {"Method", "mAP", "Examples", "Classes", "Excluded"}, {}, {}};
  for (const auto& [name, r] : rows) {
    std::vector<std::string> excluded;
    for (ChoiceId c : r.excluded) excluded.push_back(choices.label(c));
    t.AddRow({name, r.map, r.examples,
              static_cast<int64_t>(r.per_class.size() - r.excluded.size()),
              excluded.empty() ? std::string("-") : absl::StrJoin(excluded, "; ")});
  }
  return t;
}

Table GenusTable(const std::vector<std::pair<std::string, GenusResult>>& rows) {
  Table t{"Genus-level accuracy on misclassified examples",
          {"Method", "Genus Acc.", "% of Data", "Misclassified", "Genus Matches"}, {}, {}};
  for (const auto& [name, r] : rows) {
    t.AddRow({name, OptionalJson(r.genus_rate), r.pct_misclassified, r.misclassified,
              r.genus_matches});
  }
  return t;
}

Table DiffStatsTable(const std::vector<std::pair<std::string, DiffStats>>& rows) {
  Table t{"Question-level accuracy differences",
          {"Comparison", "n", "mean", "sigma", "CI low", "CI high", "sigma kind"}, {}, {}};
  for (const auto& [name, s] : rows) {
    t.AddRow({name, static_cast<int64_t>(s.deltas.size()), s.mean, s.sigma, s.ci_low, s.ci_high,
              s.sigma_kind == SigmaKind::kPopulation ? "population" : "sample"});
  }
  return t;
}

Table ExtractionTable(const std::vector<std::pair<std::string, ExtractionResult>>& rows) {
  Table t{"Answer extraction agreement",
          {"Method", "Agreement", "In-schema", "Labels", "% In-schema", "% Out-of-schema",
           "% Schema failure", "% Answer out-of-schema", "% No species", "% Refused",
           "% No information"},
          {}, {}};
  for (const auto& [name, r] : rows) {
    t.AddRow({name, r.agreement, r.in_schema, r.labels, r.pct_in_schema, r.pct_out_of_schema,
              r.pct_schema_failure, r.pct_answer_out_of_schema, r.pct_no_species, r.pct_refused,
              r.pct_no_information});
  }
  return t;
}

Table SubsetTable(const std::vector<std::pair<std::string, SubsetResult>>& rows) {
  Table t{"Choice-subset accuracy", {"Method", "Accuracy", "Correct", "Total"}, {}, {}};
  for (const auto& [name, r] : rows) t.AddRow({name, r.accuracy, r.correct, r.total});
  return t;
}

std::string DiffStatsCsv(const std::vector<std::pair<std::string, DiffStats>>& rows) {
  std::string out = "comparison,prompt_id,delta\n";
  for (const auto& [name, s] : rows) {
    for (size_t i = 0; i < s.deltas.size(); ++i) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g", s.deltas[i]);
      absl::StrAppend(&out, name, ",", s.prompt_ids[i], ",", buf, "\n");
    }
  }
  return out;
}

}  // namespace choicegate
