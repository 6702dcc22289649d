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

// Fixtures and brute-force oracles shared by the unit and acceptance tests.
// The oracles work from raw token paths and never consult ChoiceTrie.

#ifndef CHOICEGATE_TESTS_TEST_UTIL_H_
#define CHOICEGATE_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "choicegate/choice_trie.h"
#include "choicegate/mock_backend.h"
#include "choicegate/scoring.h"
#include "choicegate/tokenizer.h"

namespace choicegate::testing {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "cgtest-XXXXXX").string();
    path_ = ::mkdtemp(tmpl.data());
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::string& path() const { return path_; }
  std::string File(const std::string& name) const {
    return (std::filesystem::path(path_) / name).string();
  }

 private:
  std::string path_;
};

// Vocabulary of the given strings with ids 1..n; eos is 0.
inline Vocabulary MakeVocab(const std::vector<std::string>& tokens) {
  std::map<std::string, TokenId> entries;
  for (size_t i = 0; i < tokens.size(); ++i) entries[tokens[i]] = static_cast<TokenId>(i + 1);
  return *Vocabulary::Create(std::move(entries), 0);
}

// One token per character of `alphabet`.
inline Vocabulary CharVocab(const std::string& alphabet) {
  std::vector<std::string> tokens;
  for (char c : alphabet) tokens.emplace_back(1, c);
  return MakeVocab(tokens);
}

inline std::vector<TokenSequence> EosPaths(const std::vector<TokenSequence>& label_tokens,
                                           TokenId eos) {
  std::vector<TokenSequence> out = label_tokens;
  for (auto& p : out) p.push_back(eos);
  return out;
}

// Counts distinct proper prefixes of the eos-terminated paths.
//   full:      prefixes followed (in some path) by a non-eos token
//   truncated: prefixes strictly extended by at least two paths
struct PassOracle {
  int64_t full = 0;
  int64_t truncated = 0;
  int64_t yes_no = 0;
};

inline PassOracle BruteForcePasses(const std::vector<TokenSequence>& eos_paths, TokenId eos) {
  std::set<TokenSequence> full;
  std::map<TokenSequence, int> extended_by;
  for (const TokenSequence& p : eos_paths) {
    for (size_t len = 0; len < p.size(); ++len) {
      TokenSequence prefix(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(len));
      if (p[len] != eos) full.insert(prefix);
      ++extended_by[prefix];
    }
  }
  PassOracle out;
  out.full = static_cast<int64_t>(full.size());
  for (const auto& [prefix, n] : extended_by) {
    if (n >= 2) ++out.truncated;
  }
  out.yes_no = static_cast<int64_t>(eos_paths.size());
  return out;
}

// Constrained-generation probability of every path: at each step the model's
// distribution is restricted to the tokens that keep some path alive and
// renormalized. An all-zero allowed set is treated as uniform.
inline std::vector<double> OracleConstrainedLogprobs(LMBackend& backend,
                                                     const ScoringContext& ctx,
                                                     const std::vector<TokenSequence>& eos_paths) {
  std::vector<double> out(eos_paths.size(), 0.0);
  for (size_t c = 0; c < eos_paths.size(); ++c) {
    const TokenSequence& path = eos_paths[c];
    for (size_t j = 0; j < path.size(); ++j) {
      std::set<TokenId> allowed;
      for (const TokenSequence& other : eos_paths) {
        if (other.size() > j && std::equal(path.begin(), path.begin() + j, other.begin())) {
          allowed.insert(other[j]);
        }
      }
      if (allowed.size() == 1) continue;
      LogprobQuery q;
      q.prompt_text = ctx.prompt;
      q.image = ctx.image;
      q.prefix_tokens.assign(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(j));
      q.candidates.assign(allowed.begin(), allowed.end());
      auto dist = backend.NextTokenLogprobs(q);
      if (!dist.ok()) std::abort();
      double total = 0.0;
      for (TokenId t : allowed) total += std::exp(dist->logprobs.at(t));
      if (total == 0.0) {
        out[c] += -std::log(static_cast<double>(allowed.size()));
      } else {
        out[c] += std::log(std::exp(dist->logprobs.at(path[j])) / total);
      }
    }
  }
  return out;
}

// A randomized scoring instance: labels over a small alphabet (some labels
// are prefixes of others), a vocabulary mixing single characters with a few
// longer pieces, and a mock whose distributions are random at every prefix.
struct Instance {
  std::optional<Vocabulary> vocab;
  std::optional<ChoiceSet> choices;
  std::optional<ChoiceTrie> trie;
  std::unique_ptr<MockBackend> backend;
  std::vector<TokenSequence> label_tokens;
  std::vector<TokenSequence> eos_paths;
  ScoringContext ctx;
};

inline Instance RandomInstance(std::mt19937_64& rng, size_t max_labels = 20,
                               size_t max_vocab = 50) {
  const std::string alphabet = "abcdefgh";
  const size_t letters = 2 + rng() % (alphabet.size() - 1);
  std::vector<std::string> tokens;
  std::set<std::string> token_set;
  for (size_t i = 0; i < letters; ++i) {
    tokens.emplace_back(1, alphabet[i]);
    token_set.insert(tokens.back());
  }
  const size_t extra = rng() % (max_vocab - letters + 1);
  for (size_t i = 0; i < extra && tokens.size() < max_vocab; ++i) {
    std::string t;
    const size_t len = 2 + rng() % 2;
    for (size_t k = 0; k < len; ++k) t += alphabet[rng() % letters];
    if (token_set.insert(t).second) tokens.push_back(t);
  }

  const size_t n_labels = 1 + rng() % max_labels;
  std::vector<std::string> labels;
  std::set<std::string> seen;
  for (size_t attempts = 0; labels.size() < n_labels && attempts < 1000; ++attempts) {
    std::string w;
    if (!labels.empty() && rng() % 4 == 0) {
      // Prefix containment: extend or cut an existing label.
      const std::string& base = labels[rng() % labels.size()];
      if (rng() % 2 == 0 || base.size() < 2) {
        w = base + alphabet[rng() % letters];
      } else {
        w = base.substr(0, 1 + rng() % (base.size() - 1));
      }
    } else {
      const size_t len = 1 + rng() % 5;
      for (size_t k = 0; k < len; ++k) w += alphabet[rng() % letters];
    }
    if (seen.insert(w).second) labels.push_back(w);
  }

  Instance inst;
  inst.vocab = MakeVocab(tokens);
  inst.choices = *ChoiceSet::Create(labels);
  inst.trie = *ChoiceTrie::Build(*inst.choices, *inst.vocab);
  for (const std::string& l : labels) inst.label_tokens.push_back(*Encode(*inst.vocab, l));
  inst.eos_paths = EosPaths(inst.label_tokens, inst.vocab->eos_id());
  inst.ctx = ScoringContext{"question " + std::to_string(rng() % 1000), std::nullopt};

  MockTable table;
  table.uniform_fallback = true;
  std::set<TokenSequence> prefixes;
  for (const TokenSequence& p : inst.eos_paths) {
    for (size_t len = 0; len < p.size(); ++len) {
      prefixes.insert(TokenSequence(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(len)));
    }
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const size_t universe = tokens.size() + 1;
  for (const TokenSequence& prefix : prefixes) {
    if (rng() % 8 == 0) continue;  // left to the uniform fallback
    MockDistribution d;
    d.prefix = prefix;
    const bool list_all = rng() % 5 == 0;
    std::vector<double> weights;
    std::vector<TokenId> ids;
    for (size_t id = 0; id < universe; ++id) {
      if (!list_all && rng() % 2 == 0) continue;
      ids.push_back(static_cast<TokenId>(id));
      weights.push_back(rng() % 10 == 0 ? 0.0 : u(rng));
    }
    double total = 0.0;
    for (double w : weights) total += w;
    const double mass = list_all ? 0.5 + 0.5 * u(rng) : 0.2 + 0.7 * u(rng);
    for (size_t k = 0; k < ids.size(); ++k) {
      d.probs[ids[k]] = total > 0.0 ? mass * weights[k] / total : 0.0;
    }
    table.distributions.push_back(std::move(d));
  }
  inst.backend = *MockBackend::Create(std::move(table), *inst.vocab);
  return inst;
}

// Area under the precision/recall step curve: walk the ranking one example
// at a time and add precision times the recall increment.
inline double BruteForceAp(const std::vector<double>& scores, const std::vector<bool>& positive) {
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    const bool na = std::isnan(scores[a]), nb = std::isnan(scores[b]);
    if (na || nb) return !na && nb;
    return scores[a] > scores[b];
  });
  const double total = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  double tp = 0, prev_recall = 0, area = 0;
  for (size_t k = 0; k < order.size(); ++k) {
    if (positive[order[k]]) tp += 1;
    const double recall = tp / total;
    const double precision = tp / static_cast<double>(k + 1);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return area;
}

// Expected AP of a uniformly random ranking with p positives among n.
inline double ExpectedRandomAp(int n, int p) {
  double h = 0;
  for (int i = 1; i <= n; ++i) h += 1.0 / i;
  return ((p - 1.0) / (n - 1.0) * (n - h) + h) / n;
}

inline double LogSumExpOf(const std::vector<double>& v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace choicegate::testing

#endif  // CHOICEGATE_TESTS_TEST_UTIL_H_
