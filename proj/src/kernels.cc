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

#include "choicegate/kernels.h"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>

#include "absl/strings/str_cat.h"

namespace choicegate {
namespace {

absl::StatusOr<std::vector<double>> FetchOne(LMBackend& backend,
                                             const ScoringContext& ctx,
                                             const ChoiceTrie& trie, NodeId node,
                                             Normalization norm) {
  try {
    LogprobQuery query = NodeQuery(ctx, trie, node);
    auto dist = backend.NextTokenLogprobs(query);
    if (!dist.ok()) return dist.status();
    return StepLogprobs(*dist, query.candidates, norm);
  } catch (const std::exception& e) {
    return absl::InternalError(absl::StrCat("backend threw: ", e.what()));
  }
}

double SortKey(double score) {
  return std::isnan(score) ? -std::numeric_limits<double>::infinity() : score;
}

std::optional<double> ClassAveragePrecision(const ScoreRows& scores,
                                            const std::vector<int32_t>& truth,
                                            size_t cls) {
  std::vector<double> column(scores.size());
  std::vector<bool> positive(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) {
    column[i] = scores[i][cls];
    positive[i] = truth[i] == static_cast<int32_t>(cls);
  }
  return AveragePrecision(column, positive);
}

}  // namespace

int MaxThreads() { return omp_get_max_threads(); }

std::optional<double> AveragePrecision(const std::vector<double>& scores,
                                       const std::vector<bool>& positive) {
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    double sa = SortKey(scores[a]);
    double sb = SortKey(scores[b]);
    if (sa != sb) return sa > sb;
    return a < b;
  });
  double sum = 0.0;
  size_t hits = 0;
  for (size_t rank = 0; rank < order.size(); ++rank) {
    if (!positive[order[rank]]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
  }
  if (hits == 0) return std::nullopt;
  return sum / static_cast<double>(hits);
}

namespace serial {

absl::StatusOr<StepTable> FetchStepLogprobs(LMBackend& backend,
                                            const ScoringContext& ctx,
                                            const ChoiceTrie& trie,
                                            const std::vector<NodeId>& nodes,
                                            Normalization norm) {
  StepTable table(nodes.size());
  for (size_t i = 0; i < nodes.size(); ++i) {
    auto steps = FetchOne(backend, ctx, trie, nodes[i], norm);
    if (!steps.ok()) return steps.status();
    table[i] = *std::move(steps);
  }
  return table;
}

std::vector<std::optional<double>> AveragePrecisionPerClass(
    const ScoreRows& scores, const std::vector<int32_t>& truth,
    size_t num_classes) {
  std::vector<std::optional<double>> out(num_classes);
  for (size_t c = 0; c < num_classes; ++c) {
    out[c] = ClassAveragePrecision(scores, truth, c);
  }
  return out;
}

}  // namespace serial

namespace parallel {

absl::StatusOr<StepTable> FetchStepLogprobs(LMBackend& backend,
                                            const ScoringContext& ctx,
                                            const ChoiceTrie& trie,
                                            const std::vector<NodeId>& nodes,
                                            Normalization norm) {
  if (!backend.capabilities().concurrent || nodes.size() < 2) {
    return serial::FetchStepLogprobs(backend, ctx, trie, nodes, norm);
  }
  std::vector<absl::StatusOr<std::vector<double>>> slots(
      nodes.size(), absl::UnknownError("not fetched"));
  const auto n = static_cast<int64_t>(nodes.size());
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i < n; ++i) {
    slots[i] = FetchOne(backend, ctx, trie, nodes[i], norm);
  }
  StepTable table(nodes.size());
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (!slots[i].ok()) return slots[i].status();
    table[i] = *std::move(slots[i]);
  }
  return table;
}

std::vector<std::optional<double>> AveragePrecisionPerClass(
    const ScoreRows& scores, const std::vector<int32_t>& truth,
    size_t num_classes) {
  std::vector<std::optional<double>> out(num_classes);
  const auto n = static_cast<int64_t>(num_classes);
#pragma omp parallel for schedule(dynamic)
  for (int64_t c = 0; c < n; ++c) {
    out[c] = ClassAveragePrecision(scores, truth, static_cast<size_t>(c));
  }
  return out;
}

void ForEachIndex(size_t n, int jobs, const std::function<void(size_t)>& fn) {
  if (jobs <= 1 || n < 2) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex mu;
  const auto count = static_cast<int64_t>(n);
#pragma omp parallel for num_threads(jobs) schedule(dynamic)
  for (int64_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace parallel
}  // namespace choicegate
