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

// Data-parallel inner loops. Each kernel has an OpenMP version in `parallel`
// and a plain loop in `serial`; the serial one is the reference the tests and
// the benchmark compare against. Results never depend on thread count: work
// is written into per-index slots and reduced in index order.

#ifndef CHOICEGATE_KERNELS_H_
#define CHOICEGATE_KERNELS_H_

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "absl/status/statusor.h"
#include "choicegate/choice_trie.h"
#include "choicegate/lm_backend.h"
#include "choicegate/scoring.h"

namespace choicegate {

// Step log factors for each requested node, aligned with that node's allowed
// tokens.
using StepTable = std::vector<std::vector<double>>;

// Rows are examples, columns are classes.
using ScoreRows = std::vector<std::vector<double>>;

namespace serial {

absl::StatusOr<StepTable> FetchStepLogprobs(LMBackend& backend,
                                            const ScoringContext& ctx,
                                            const ChoiceTrie& trie,
                                            const std::vector<NodeId>& nodes,
                                            Normalization norm);

// One-vs-rest average precision of every class; empty for classes without a
// positive example.
std::vector<std::optional<double>> AveragePrecisionPerClass(
    const ScoreRows& scores, const std::vector<int32_t>& truth,
    size_t num_classes);

}  // namespace serial

namespace parallel {

// Falls back to the serial loop when the backend is not concurrent-safe. The
// first failing node (lowest index) determines the returned error.
absl::StatusOr<StepTable> FetchStepLogprobs(LMBackend& backend,
                                            const ScoringContext& ctx,
                                            const ChoiceTrie& trie,
                                            const std::vector<NodeId>& nodes,
                                            Normalization norm);

std::vector<std::optional<double>> AveragePrecisionPerClass(
    const ScoreRows& scores, const std::vector<int32_t>& truth,
    size_t num_classes);

// Runs fn(i) for i in [0, n) on up to `jobs` threads. fn must only write to
// slot i of its outputs.
void ForEachIndex(size_t n, int jobs, const std::function<void(size_t)>& fn);

}  // namespace parallel

// Average precision of one ranking: examples sorted by score descending, ties
// broken by lower example index; mean of precision at each positive's rank.
std::optional<double> AveragePrecision(const std::vector<double>& scores,
                                       const std::vector<bool>& positive);

int MaxThreads();

}  // namespace choicegate

#endif  // CHOICEGATE_KERNELS_H_
