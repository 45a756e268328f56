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

#include "symreward/reward.h"

#include <algorithm>
#include <cmath>

#include "symreward/errors.h"

namespace symreward {

void RewardConfig::Validate() const {
  if (!(lambda >= 0.0) || !(length_weight >= 0.0) ||
      !(nomatch_weight >= 0.0)) {
    throw InvariantError("reward weights must be non-negative");
  }
  if (!(length_tolerance >= 0.0 && length_tolerance < 10.0)) {
    throw InvariantError("length tolerance must lie in [0, 10)");
  }
}

PartialPath CanonicalPath(std::span<const Step> steps,
                          std::span<const Label> predictions,
                          PathCoverage coverage) {
  if (steps.size() != predictions.size()) {
    throw LengthMismatch("steps and predictions differ in length");
  }
  PartialPath path{};
  for (std::size_t t = 0; t < steps.size(); ++t) {
    path[Ordinal(steps[t])] = predictions[t];
  }
  if (coverage == PathCoverage::kComplete) {
    for (Step s : kAllSteps) {
      if (!path[Ordinal(s)]) {
        throw IncompleteConversation("no answer for step " +
                                     std::string(StepName(s)));
      }
    }
  }
  return path;
}

double CorrectnessTerm(std::span<const Label> predicted,
                       std::span<const Label> target) {
  if (predicted.size() != target.size()) {
    throw LengthMismatch("prediction and target counts differ");
  }
  if (predicted.empty()) throw LengthMismatch("no turns to score");
  std::size_t hits = 0;
  for (std::size_t t = 0; t < predicted.size(); ++t) {
    hits += predicted[t] == target[t];
  }
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

namespace {

bool PathValid(const ReasoningGraph& graph, const PartialPath& path) {
  return IsCompatiblePartialPath(graph, path);
}

}  // namespace

double ConsistencyTerm(const ReasoningGraph& graph,
                       std::span<const Step> steps,
                       std::span<const Label> predicted, double lambda,
                       PathCoverage coverage) {
  const PartialPath path = CanonicalPath(steps, predicted, coverage);
  return PathValid(graph, path) ? lambda : 0.0;
}

double LengthTerm(std::span<const std::size_t> predicted_lengths,
                  std::span<const std::size_t> target_lengths,
                  double tolerance, double weight) {
  if (predicted_lengths.size() != target_lengths.size()) {
    throw LengthMismatch("prediction and target counts differ");
  }
  if (predicted_lengths.empty()) throw LengthMismatch("no turns to score");
  double sum = 0.0;
  for (std::size_t t = 0; t < predicted_lengths.size(); ++t) {
    if (target_lengths[t] == 0) {
      throw DegenerateTarget("target answer " + std::to_string(t) +
                             " has no tokens");
    }
    const double p = static_cast<double>(predicted_lengths[t]);
    const double g = static_cast<double>(target_lengths[t]);
    const double excess = std::abs(p - g) / g - tolerance;
    sum += std::min(1.0, std::max(0.0, excess));
  }
  if (sum == 0.0) return 0.0;
  return -weight * sum / static_cast<double>(predicted_lengths.size());
}

double LengthTerm(std::span<const std::string> predicted_texts,
                  std::span<const std::string> target_texts, double tolerance,
                  double weight) {
  std::vector<std::size_t> p, g;
  for (const auto& s : predicted_texts) p.push_back(WhitespaceTokenCount(s));
  for (const auto& s : target_texts) g.push_back(WhitespaceTokenCount(s));
  return LengthTerm(p, g, tolerance, weight);
}

double NoMatchTerm(std::span<const Label> predicted, double weight) {
  if (predicted.empty()) throw LengthMismatch("no turns to score");
  const auto n = std::count(predicted.begin(), predicted.end(), Label::kNoMatch);
  if (n == 0) return 0.0;
  return -weight * static_cast<double>(n) /
         static_cast<double>(predicted.size());
}

RewardBreakdown ScoreCategories(const ReasoningGraph& graph,
                                std::span<const Step> steps,
                                std::span<const Label> predicted,
                                std::span<const Label> target,
                                std::span<const std::size_t> predicted_lengths,
                                std::span<const std::size_t> target_lengths,
                                const RewardConfig& config,
                                PathCoverage coverage) {
  config.Validate();
  if (steps.size() != predicted.size() || steps.size() != target.size()) {
    throw LengthMismatch("turn arrays differ in length");
  }
  RewardBreakdown b;
  b.lambda = config.lambda;
  b.predicted_categories.assign(predicted.begin(), predicted.end());
  b.target_categories.assign(target.begin(), target.end());
  for (std::size_t t = 0; t < predicted.size(); ++t) {
    b.per_turn_correct.push_back(predicted[t] == target[t]);
  }
  b.predicted_path = CanonicalPath(steps, predicted, coverage);
  b.path_valid = PathValid(graph, b.predicted_path);

  // Every term is computed so input errors surface even when disabled.
  const double rc = CorrectnessTerm(predicted, target);
  const double rl = LengthTerm(predicted_lengths, target_lengths,
                               config.length_tolerance, config.length_weight);
  const double rm = NoMatchTerm(predicted, config.nomatch_weight);

  b.correctness = config.enable_correctness ? rc : 0.0;
  b.consistency =
      config.enable_consistency && b.path_valid ? config.lambda : 0.0;
  b.length_penalty = config.enable_length ? rl : 0.0;
  b.nomatch_penalty = config.enable_nomatch ? rm : 0.0;
  b.total = b.correctness + b.consistency + b.length_penalty +
            b.nomatch_penalty;
  return b;
}

RewardBreakdown ComputeReward(const ReasoningGraph& graph,
                              const Lexicon& lexicon,
                              std::span<const RewardTurn> turns,
                              const RewardConfig& config,
                              PathCoverage coverage) {
  std::vector<Step> steps;
  std::vector<Label> predicted, target;
  std::vector<std::size_t> plen, glen;
  for (const auto& turn : turns) {
    steps.push_back(turn.step);
    predicted.push_back(Classify(lexicon, turn.step, turn.prediction).category);
    target.push_back(Classify(lexicon, turn.step, turn.target).category);
    plen.push_back(WhitespaceTokenCount(turn.prediction));
    glen.push_back(turn.target_length_tokens.value_or(
        WhitespaceTokenCount(turn.target)));
  }
  if (turns.empty()) throw IncompleteConversation("conversation has no turns");
  return ScoreCategories(graph, steps, predicted, target, plen, glen, config,
                         coverage);
}

double MaxAttainableReward(const RewardConfig& config) {
  return (config.enable_correctness ? 1.0 : 0.0) +
         (config.enable_consistency ? config.lambda : 0.0);
}

}  // namespace symreward
