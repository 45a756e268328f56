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

// Evaluation of predictions against a synthesized dataset.
//
//   A_Q   correct answers / questions asked
//   A_C   conversations with every answer correct / conversations
//   A_D   conversations whose Diagnosis answer is correct / conversations
//   H_cc  conversations whose predicted path is not in the graph /
//         conversations
//
// An answer is correct when its classified category equals the target
// path's category for that step. Steps answered more than once use the
// latest answer for A_D and H_cc, as the reward does; A_Q counts every turn.
// II conversations may skip steps: their path is judged on answered steps,
// and one without a Diagnosis turn counts as diagnosis-correct.

#ifndef SYMREWARD_EVAL_H_
#define SYMREWARD_EVAL_H_

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "symreward/classifier.h"
#include "symreward/execution.h"
#include "symreward/graph.h"
#include "symreward/reward.h"
#include "symreward/synthesizer.h"

namespace symreward {

struct PredictionRecord {
  std::string image_id;
  Scenario scenario = Scenario::kSI;
  std::vector<std::pair<Step, std::string>> turns;
  std::string model_name;
};

// {"image_id", "scenario", "model_name", "turns": [{"step", "prediction"}]}
nlohmann::json PredictionToJson(const PredictionRecord& record);
PredictionRecord PredictionFromJson(const nlohmann::json& j);
// Skips a leading {"meta": ...} line. Throws ParseError.
std::vector<PredictionRecord> ParsePredictionsJsonl(std::string_view text);
std::vector<PredictionRecord> ReadPredictionsFile(
    const std::filesystem::path& file);
// A dataset scored against itself: every target copied into its prediction.
std::vector<PredictionRecord> PredictionsFromTargets(
    std::span<const Conversation> dataset, std::string_view model_name);

struct ConversationOutcome {
  std::size_t n_turns = 0;
  std::size_t n_correct = 0;
  bool diagnosis_correct = false;
  bool path_valid = false;
};

// Category-level scoring shared with the policy simulator.
ConversationOutcome ScoreConversationCategories(
    const ReasoningGraph& graph, std::span<const Step> steps,
    std::span<const Label> predicted, const Path& target_path,
    PathCoverage coverage);

struct MetricCounts {
  std::size_t n_questions = 0;
  std::size_t n_correct = 0;
  std::size_t n_conversations = 0;
  std::size_t n_all_correct = 0;
  std::size_t n_diagnosis_correct = 0;
  std::size_t n_invalid_path = 0;

  void Add(const ConversationOutcome& o);
  void Merge(const MetricCounts& other);
  // Zero for an empty denominator.
  double a_q() const;
  double a_c() const;
  double a_d() const;
  double h_cc() const;
};

struct RewardMeans {
  double correctness = 0.0;
  double consistency = 0.0;
  double length_penalty = 0.0;
  double nomatch_penalty = 0.0;
  double total = 0.0;
};

struct MetricsReport {
  MetricCounts overall;
  std::map<std::string, MetricCounts> per_scenario;
  std::optional<RewardMeans> reward_means;
  std::string dataset_hash;
  std::string graph_hash;
  std::string lexicon_hash;
  std::string toolkit_version;
  std::string model_name;
};

struct EvalOptions {
  // Identity of the dataset file, copied into the report.
  std::string dataset_hash;
  // Also average the reward components when set.
  std::optional<RewardConfig> reward;
  Execution execution = Execution::kParallel;
};

// Joins predictions to dataset conversations 1:1 by (image_id, scenario)
// with matching step sequences. Throws JoinError otherwise.
MetricsReport Evaluate(const ReasoningGraph& graph, const Lexicon& lexicon,
                       std::span<const Conversation> dataset,
                       std::span<const PredictionRecord> predictions,
                       const EvalOptions& options);

nlohmann::json ReportToJson(const MetricsReport& report);
MetricsReport ReportFromJson(const nlohmann::json& j);
// One row per scope ("all", then scenarios), with hashes and version.
std::string ReportToCsv(const MetricsReport& report);

struct MetricDelta {
  std::string scope;   // "all" or a scenario name
  std::string metric;  // a_q, a_c, a_d, h_cc
  double baseline = 0.0;
  double candidate = 0.0;
  double delta_points = 0.0;  // 100 * (candidate - baseline)
  double relative_percent = 0.0;  // change relative to baseline; 0 if none
};

// Throws DatasetMismatch unless both reports carry the same dataset hash.
std::vector<MetricDelta> CompareReports(const MetricsReport& baseline,
                                        const MetricsReport& candidate);
std::string DeltasToCsv(std::span<const MetricDelta> deltas);

}  // namespace symreward

#endif  // SYMREWARD_EVAL_H_
