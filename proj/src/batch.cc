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

#include "symreward/batch.h"

#include <cstddef>

#include "symreward/errors.h"

namespace symreward {

std::string ErrorTypeName(const std::exception& e) {
#define SYMREWARD_ERROR_NAME(T) \
  if (dynamic_cast<const T*>(&e)) return #T
  SYMREWARD_ERROR_NAME(ParseError);
  SYMREWARD_ERROR_NAME(SchemaError);
  SYMREWARD_ERROR_NAME(InvariantError);
  SYMREWARD_ERROR_NAME(LengthError);
  SYMREWARD_ERROR_NAME(LengthMismatch);
  SYMREWARD_ERROR_NAME(IncompleteConversation);
  SYMREWARD_ERROR_NAME(DegenerateTarget);
  SYMREWARD_ERROR_NAME(UnknownStep);
  SYMREWARD_ERROR_NAME(UnknownLabel);
  SYMREWARD_ERROR_NAME(MissingTemplate);
  SYMREWARD_ERROR_NAME(InsufficientTemplates);
  SYMREWARD_ERROR_NAME(JoinError);
  SYMREWARD_ERROR_NAME(DatasetMismatch);
  SYMREWARD_ERROR_NAME(EmptyDataset);
  SYMREWARD_ERROR_NAME(DivergenceError);
  SYMREWARD_ERROR_NAME(InvalidStep);
  SYMREWARD_ERROR_NAME(IoError);
  SYMREWARD_ERROR_NAME(TransportError);
#undef SYMREWARD_ERROR_NAME
  return "Error";
}

namespace {

ScoreOutcome ScoreOne(const ReasoningGraph& graph, const Lexicon& lexicon,
                      const ScoreItem& item, const RewardConfig& config) {
  ScoreOutcome out;
  try {
    out.breakdown =
        ComputeReward(graph, lexicon, item.turns, config, item.coverage);
  } catch (const Error& e) {
    out.error_type = ErrorTypeName(e);
    out.error = e.what();
  }
  return out;
}

}  // namespace

std::vector<ScoreOutcome> ScoreBatch(const ReasoningGraph& graph,
                                     const Lexicon& lexicon,
                                     std::span<const ScoreItem> items,
                                     const RewardConfig& config,
                                     Execution execution) {
  config.Validate();
  std::vector<ScoreOutcome> out(items.size());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(items.size());
  if (execution == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      out[i] = ScoreOne(graph, lexicon, items[i], config);
    }
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      out[i] = ScoreOne(graph, lexicon, items[i], config);
    }
  }
  return out;
}

std::vector<ClassifiedTurn> ClassifyBatch(const Lexicon& lexicon, Step step,
                                          std::span<const std::string> texts,
                                          Execution execution) {
  std::vector<ClassifiedTurn> out(texts.size());
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(texts.size());
  if (execution == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      out[i] = Classify(lexicon, step, texts[i]);
    }
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      out[i] = Classify(lexicon, step, texts[i]);
    }
  }
  return out;
}

}  // namespace symreward
