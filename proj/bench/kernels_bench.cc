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

// Serial vs parallel timings for the per-class AP and trie-node fetch kernels.
//
//   kernels_bench [examples] [classes]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <random>
#include <set>
#include <string>

#include "choicegate/choice_trie.h"
#include "choicegate/kernels.h"
#include "choicegate/mock_backend.h"

namespace cg = choicegate;

namespace {

template <typename Fn>
double BestOfMs(int reps, Fn&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void BenchAp(size_t n, size_t classes) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  cg::ScoreRows rows(n, std::vector<double>(classes));
  std::vector<int32_t> truth(n);
  for (size_t i = 0; i < n; ++i) {
    truth[i] = static_cast<int32_t>(i % classes);
    for (double& v : rows[i]) v = u(rng);
  }
  const double serial = BestOfMs(3, [&] { cg::serial::AveragePrecisionPerClass(rows, truth, classes); });
  const double parallel = BestOfMs(3, [&] { cg::parallel::AveragePrecisionPerClass(rows, truth, classes); });
  std::printf("ap_per_class  n=%zu classes=%zu  serial %.2f ms  parallel %.2f ms  (%d threads)\n", n,
              classes, serial, parallel, cg::MaxThreads());
}

void BenchFetch(size_t labels) {
  std::map<std::string, cg::TokenId> entries;
  const std::string alphabet = "abcdefghijklmnop";
  for (size_t i = 0; i < alphabet.size(); ++i) {
    entries[std::string(1, alphabet[i])] = static_cast<cg::TokenId>(i + 1);
  }
  auto vocab = cg::Vocabulary::Create(entries, 0);
  std::mt19937_64 rng(11);
  std::vector<std::string> words;
  std::set<std::string> seen;
  while (words.size() < labels) {
    std::string w;
    const size_t len = 3 + rng() % 5;
    for (size_t k = 0; k < len; ++k) w += alphabet[rng() % alphabet.size()];
    if (seen.insert(w).second) words.push_back(w);
  }
  auto choices = cg::ChoiceSet::Create(words);
  auto trie = cg::ChoiceTrie::Build(*choices, *vocab);
  cg::MockTable table;
  table.uniform_fallback = true;
  auto backend = cg::MockBackend::Create(table, *vocab);
  const cg::ScoringContext ctx{"bench", std::nullopt};
  const auto nodes = trie->FullPassNodes();
  const double serial = BestOfMs(3, [&] {
    (void)cg::serial::FetchStepLogprobs(**backend, ctx, *trie, nodes, cg::Normalization::kPerStepRenormalized);
  });
  const double parallel = BestOfMs(3, [&] {
    (void)cg::parallel::FetchStepLogprobs(**backend, ctx, *trie, nodes, cg::Normalization::kPerStepRenormalized);
  });
  std::printf("node_fetch    labels=%zu nodes=%zu  serial %.2f ms  parallel %.2f ms\n", labels,
              nodes.size(), serial, parallel);
}

}  // namespace

int main(int argc, char** argv) {
  const size_t n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 20000;
  const size_t classes = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 200;
  BenchAp(n, classes);
  BenchFetch(2000);
  return 0;
}
