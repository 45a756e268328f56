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

// Conversation-level reward:
//
//   total = mean_t 1{pred_t == target_t}           (correctness)
//         + lambda * 1{canonical predicted path valid} (consistency)
//         + length_penalty                          (<= 0)
//         - nomatch_weight * NoMatch fraction       (<= 0)
//
// Categories come from the keyword classifier. Turns may arrive in any step
// order; the consistency term looks at the latest answer for each step.

#ifndef SYMREWARD_REWARD_H_
#define SYMREWARD_REWARD_H_

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "symreward/classifier.h"
#include "symreward/graph.h"

namespace symreward {

struct RewardConfig {
  double lambda = 0.5;
  double length_tolerance = 0.3;
  double length_weight = 1.0;
  double nomatch_weight = 1.0;
  bool enable_correctness = true;
  bool enable_consistency = true;
  bool enable_length = true;
  bool enable_nomatch = true;

  // Throws InvariantError on negative weights or tolerance outside [0, 10).
  void Validate() const;
};

using PartialPath = std::array<std::optional<Label>, kNumSteps>;

// Whether a conversation must answer all five steps. Improvised scenarios
// sample steps with replacement and may skip some; their consistency is
// judged on the answered slots only.
enum class PathCoverage { kComplete, kPartialAllowed };

struct RewardBreakdown {
  double correctness = 0.0;
  double consistency = 0.0;
  double length_penalty = 0.0;
  double nomatch_penalty = 0.0;
  double total = 0.0;
  double lambda = 0.0;
  std::vector<bool> per_turn_correct;
  std::vector<Label> predicted_categories;
  std::vector<Label> target_categories;
  PartialPath predicted_path{};
  bool path_valid = false;
};

struct RewardTurn {
  Step step;
  std::string prediction;
  std::string target;
  // Overrides the whitespace token count of `target` when present.
  std::optional<std::size_t> target_length_tokens;
};

// Latest answer per step. Throws IncompleteConversation when a step is
// missing and coverage is kComplete.
PartialPath CanonicalPath(std::span<const Step> steps,
                          std::span<const Label> predictions,
                          PathCoverage coverage = PathCoverage::kComplete);

// Throws LengthMismatch on unequal or empty inputs.
double CorrectnessTerm(std::span<const Label> predicted,
                       std::span<const Label> target);

double ConsistencyTerm(const ReasoningGraph& graph,
                       std::span<const Step> steps,
                       std::span<const Label> predicted, double lambda,
                       PathCoverage coverage = PathCoverage::kComplete);

// Lengths are token counts. Throws LengthMismatch or DegenerateTarget.
double LengthTerm(std::span<const std::size_t> predicted_lengths,
                  std::span<const std::size_t> target_lengths,
                  double tolerance, double weight);
double LengthTerm(std::span<const std::string> predicted_texts,
                  std::span<const std::string> target_texts, double tolerance,
                  double weight);

double NoMatchTerm(std::span<const Label> predicted, double weight);

// Reward on already-classified turns.
RewardBreakdown ScoreCategories(const ReasoningGraph& graph,
                                std::span<const Step> steps,
                                std::span<const Label> predicted,
                                std::span<const Label> target,
                                std::span<const std::size_t> predicted_lengths,
                                std::span<const std::size_t> target_lengths,
                                const RewardConfig& config,
                                PathCoverage coverage = PathCoverage::kComplete);

// Classifies predictions and targets, then scores. Deterministic.
RewardBreakdown ComputeReward(const ReasoningGraph& graph,
                              const Lexicon& lexicon,
                              std::span<const RewardTurn> turns,
                              const RewardConfig& config,
                              PathCoverage coverage = PathCoverage::kComplete);

// Largest total any conversation can reach under `config`.
double MaxAttainableReward(const RewardConfig& config);

}  // namespace symreward

#endif  // SYMREWARD_REWARD_H_
