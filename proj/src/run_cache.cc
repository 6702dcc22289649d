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

// Append-only JSON-lines cache behind RunBatch.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <utility>

#include "absl/strings/str_cat.h"
#include "choicegate/kernels.h"
#include "choicegate/pipeline.h"

namespace choicegate {
namespace {

constexpr int kCacheVersion = 1;

using PairKey = std::pair<std::string, std::string>;  // (example id, prompt id)

std::string BatchHash(const Pipeline& pipeline,
                      const std::vector<PromptTemplate>& prompts) {
  Json doc = pipeline.config().ToJson(pipeline.backend().Identity());
  doc["choices"] = Fnv1aHex(pipeline.choices().Joined());
  Json tpl = Json::array();
  for (const PromptTemplate& p : prompts) tpl.push_back({p.id, p.body});
  doc["prompts"] = std::move(tpl);
  return Fnv1aHex(doc.dump());
}

std::string HeaderLine(const std::string& hash, const Json& config) {
  return Json{{"cache_header", true},
              {"cfg_hash", hash},
              {"version", kCacheVersion},
              {"config", config}}
             .dump();
}

struct ParsedCache {
  std::string hash;
  std::vector<RunRecord> records;
  // Byte length of the valid prefix; anything after it is a damaged tail.
  size_t valid_bytes = 0;
  bool damaged_tail = false;
};

absl::StatusOr<ParsedCache> ParseCache(const std::string& path, const std::string& text,
                                       bool allow_damaged_tail) {
  ParsedCache out;
  size_t pos = 0;
  size_t line_no = 0;
  std::set<PairKey> seen;
  while (pos < text.size()) {
    ++line_no;
    const size_t nl = text.find('\n', pos);
    const bool complete = nl != std::string::npos;
    const size_t end = complete ? nl : text.size();
    const absl::string_view line(text.data() + pos, end - pos);
    const bool last = !complete || nl + 1 == text.size();

    auto fail = [&](absl::string_view why) -> absl::Status {
      return absl::DataLossError(absl::StrCat(path, ":", line_no, ": ", why));
    };
    absl::StatusOr<Json> doc = complete ? ParseJsonStrict(line)
                                        : absl::StatusOr<Json>(absl::DataLossError(
                                              "truncated line (no newline)"));
    if (line_no == 1) {
      if (!doc.ok() || !doc->is_object() || !doc->contains("cache_header") ||
          !doc->contains("cfg_hash") || !(*doc)["cfg_hash"].is_string()) {
        return fail("missing or malformed cache header; refusing to resume");
      }
      if (!doc->contains("version") || (*doc)["version"] != kCacheVersion) {
        return fail("unsupported cache version");
      }
      out.hash = (*doc)["cfg_hash"].get<std::string>();
    } else {
      absl::StatusOr<RunRecord> rec =
          doc.ok() ? RunRecord::FromJson(*doc) : absl::StatusOr<RunRecord>(doc.status());
      if (rec.ok() && !seen.insert({rec->example_id, rec->prompt_id}).second) {
        rec = absl::DataLossError(absl::StrCat("duplicate record for (", rec->example_id,
                                               ", ", rec->prompt_id, ")"));
      }
      if (!rec.ok()) {
        if (last && allow_damaged_tail) {
          out.damaged_tail = true;
          return out;
        }
        return fail(absl::StrCat(
            rec.status().message(),
            last ? "; the final line is damaged, rerun with the repair flag to drop it"
                 : "; refusing to resume"));
      }
      out.records.push_back(*std::move(rec));
    }
    pos = complete ? nl + 1 : text.size();
    out.valid_bytes = pos;
  }
  if (line_no == 0) return absl::DataLossError(absl::StrCat(path, ": empty cache"));
  return out;
}

}  // namespace

absl::StatusOr<std::vector<RunRecord>> LoadRunCache(const std::string& path) {
  auto text = ReadFile(path);
  if (!text.ok()) return text.status();
  auto parsed = ParseCache(path, *text, /*allow_damaged_tail=*/false);
  if (!parsed.ok()) return parsed.status();
  return std::move(parsed->records);
}

absl::StatusOr<BatchResult> RunBatch(const Pipeline& pipeline,
                                     const std::vector<Example>& examples,
                                     const std::vector<PromptTemplate>& prompts,
                                     const BatchOptions& options) {
  if (options.cache_path.empty()) return absl::InvalidArgumentError("cache path is empty");
  if (prompts.empty()) return absl::InvalidArgumentError("no prompts");
  std::map<std::string, const Example*> by_example;
  for (const Example& ex : examples) {
    if (!by_example.emplace(ex.id, &ex).second) {
      return absl::InvalidArgumentError(absl::StrCat("duplicate example id ", ex.id));
    }
  }
  std::map<std::string, const PromptTemplate*> by_prompt;
  for (const PromptTemplate& p : prompts) {
    if (!by_prompt.emplace(p.id, &p).second) {
      return absl::InvalidArgumentError(absl::StrCat("duplicate prompt id ", p.id));
    }
  }
  std::vector<PairKey> order;
  for (const auto& [eid, ex] : by_example) {
    for (const auto& [pid, p] : by_prompt) order.emplace_back(eid, pid);
  }

  const Json config = pipeline.config().ToJson(pipeline.backend().Identity());
  const std::string hash = BatchHash(pipeline, prompts);
  std::map<PairKey, RunRecord> cached;
  bool need_header = true;

  std::error_code ec;
  const bool exists = std::filesystem::exists(options.cache_path, ec);
  if (exists && std::filesystem::file_size(options.cache_path, ec) > 0) {
    if (!options.resume) {
      return absl::FailedPreconditionError(absl::StrCat(
          "cache ", options.cache_path,
          " already has content; pass --resume to continue it or choose a new path"));
    }
    auto text = ReadFile(options.cache_path);
    if (!text.ok()) return text.status();
    auto parsed = ParseCache(options.cache_path, *text, options.repair);
    if (!parsed.ok()) return parsed.status();
    if (parsed->hash != hash) {
      return absl::FailedPreconditionError(absl::StrCat(
          "cache ", options.cache_path, " was written with config hash ", parsed->hash,
          " but this run has ", hash, "; refusing to mix configurations"));
    }
    if (parsed->damaged_tail) {
      std::filesystem::resize_file(options.cache_path, parsed->valid_bytes, ec);
      if (ec) return absl::InternalError(absl::StrCat("cannot repair cache: ", ec.message()));
    }
    for (RunRecord& r : parsed->records) {
      PairKey key{r.example_id, r.prompt_id};
      cached.emplace(std::move(key), std::move(r));
    }
    need_header = false;
  }

  std::ofstream out(options.cache_path, std::ios::binary | std::ios::app);
  if (!out) return absl::PermissionDeniedError(absl::StrCat("cannot write ", options.cache_path));
  if (need_header) {
    out << HeaderLine(hash, config) << '\n';
    out.flush();
  }

  std::vector<PairKey> missing;
  for (const PairKey& key : order) {
    if (!cached.contains(key)) missing.push_back(key);
  }
  if (options.stop_after && static_cast<int64_t>(missing.size()) > *options.stop_after) {
    missing.resize(static_cast<size_t>(std::max<int64_t>(0, *options.stop_after)));
  }

  BatchResult result;
  std::map<PairKey, RunRecord> fresh;
  const int jobs = std::max(1, pipeline.config().jobs);
  const size_t chunk = static_cast<size_t>(jobs) * 4;
  for (size_t start = 0; start < missing.size(); start += chunk) {
    const size_t n = std::min(chunk, missing.size() - start);
    std::vector<RunRecord> slots(n);
    parallel::ForEachIndex(n, jobs, [&](size_t i) {
      const PairKey& key = missing[start + i];
      slots[i] = pipeline.Run(*by_example.at(key.first), *by_prompt.at(key.second));
    });
    // Single writer, canonical order.
    for (size_t i = 0; i < n; ++i) {
      out << slots[i].ToJson().dump() << '\n';
      fresh.emplace(missing[start + i], std::move(slots[i]));
    }
    out.flush();
    if (!out) return absl::DataLossError(absl::StrCat("write to ", options.cache_path, " failed"));
  }

  for (const PairKey& key : order) {
    if (auto it = cached.find(key); it != cached.end()) {
      result.records.push_back(it->second);
      ++result.summary.cached;
    } else if (auto jt = fresh.find(key); jt != fresh.end()) {
      result.records.push_back(std::move(jt->second));
      ++result.summary.computed;
    } else {
      continue;
    }
    if (result.records.back().status == RecordStatus::kFailed) ++result.summary.failed;
  }
  result.summary.total = static_cast<int64_t>(result.records.size());
  return result;
}

}  // namespace choicegate
