/* Copyright 2026 The symreward Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Batch kernels over many conversations or texts. Each has a serial
// reference and an OpenMP path; outputs are identical and in input order.

#ifndef SYMREWARD_BATCH_H_
#define SYMREWARD_BATCH_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "symreward/classifier.h"
#include "symreward/execution.h"
#include "symreward/graph.h"
#include "symreward/reward.h"

namespace symreward {

struct ScoreItem {
  std::vector<RewardTurn> turns;
  PathCoverage coverage = PathCoverage::kComplete;
};

// Either a breakdown or the library error that prevented one.
struct ScoreOutcome {
  std::optional<RewardBreakdown> breakdown;
  std::string error_type;  // e.g. "IncompleteConversation"
  std::string error;
};

std::vector<ScoreOutcome> ScoreBatch(const ReasoningGraph& graph,
                                     const Lexicon& lexicon,
                                     std::span<const ScoreItem> items,
                                     const RewardConfig& config,
                                     Execution execution);

std::vector<ClassifiedTurn> ClassifyBatch(const Lexicon& lexicon, Step step,
                                          std::span<const std::string> texts,
                                          Execution execution);

// Class name of a library error, "Error" for anything else.
std::string ErrorTypeName(const std::exception& e);

}  // namespace symreward

#endif  // SYMREWARD_BATCH_H_
