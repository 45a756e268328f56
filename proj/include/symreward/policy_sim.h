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

// A tabular stand-in for supervised pretraining followed by reward-driven
// policy-gradient tuning.
//
// The policy answers one analysis step at a time. It sees a noisy copy of
// the record's class label, drawn afresh for every turn (the true label with
// probability 1 - noise_rate, otherwise a uniformly chosen other label of the
// training set), and the category it gave on the previous turn. Its
// parameters are one logit vector per (observation, step, previous answer).
//
// Pretraining minimizes the expected cross-entropy to the target categories,
// with the observation noise marginalized exactly. Tuning maximizes
//
//   E[R] - beta * E[sum over turns of KL(pi(.|state) || ref(.|state))]
//
// with REINFORCE, where R is the conversation reward and ref is the frozen
// pretrained table.

#ifndef SYMREWARD_POLICY_SIM_H_
#define SYMREWARD_POLICY_SIM_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "symreward/execution.h"
#include "symreward/graph.h"
#include "symreward/reward.h"
#include "symreward/synthesizer.h"
#include "symreward/templates.h"

namespace symreward {

class PolicyTable {
 public:
  // Previous-answer bucket for the first turn.
  static constexpr std::size_t kStartBucket = kNumLabels;
  static constexpr std::size_t kNumBuckets = kNumLabels + 1;

  // All-zero logits (uniform policy) over graph.categories(step).
  explicit PolicyTable(const ReasoningGraph& graph, double temperature = 1.0);

  static std::size_t Bucket(std::optional<Label> previous) {
    return previous ? Ordinal(*previous) : kStartBucket;
  }

  std::span<const Label> actions(Step step) const {
    return actions_[Ordinal(step)];
  }
  // Index of the first logit of a state; the state's logits are contiguous.
  std::size_t Offset(ClassLabel obs, Step step, std::size_t bucket) const;
  std::span<double> logits(ClassLabel obs, Step step, std::size_t bucket) {
    return {logits_.data() + Offset(obs, step, bucket),
            actions_[Ordinal(step)].size()};
  }
  std::span<const double> logits(ClassLabel obs, Step step,
                                 std::size_t bucket) const {
    return {logits_.data() + Offset(obs, step, bucket),
            actions_[Ordinal(step)].size()};
  }
  // Softmax of logits / temperature into `out` (actions(step).size()).
  void Probabilities(ClassLabel obs, Step step, std::size_t bucket,
                     std::span<double> out) const;

  std::vector<double>& raw() { return logits_; }
  const std::vector<double>& raw() const { return logits_; }
  double temperature() const { return temperature_; }
  const std::string& graph_hash() const { return graph_hash_; }
  bool AllFinite() const;

 private:
  std::array<std::vector<Label>, kNumSteps> actions_;
  std::array<std::size_t, kNumSteps> step_offset_{};
  std::size_t per_obs_ = 0;
  std::vector<double> logits_;
  double temperature_ = 1.0;
  std::string graph_hash_;
};

// Versioned file form: {"version": "1", "graph_hash", "temperature",
// "actions": {step: [...]}, "logits": [...]}. Loading checks the graph hash.
nlohmann::json PolicyToJson(const PolicyTable& policy);
PolicyTable PolicyFromJson(const ReasoningGraph& graph, const nlohmann::json& j);

// What the simulator needs besides the policy: the graph, answer lengths per
// category for rendering, the reward, and the observation noise.
class SimEnvironment {
 public:
  SimEnvironment(const ReasoningGraph& graph, const TemplateBank& bank,
                 RewardConfig reward, double noise_rate,
                 std::vector<ClassLabel> labels);

  const ReasoningGraph& graph() const { return graph_; }
  const TemplateBank& bank() const { return bank_; }
  const RewardConfig& reward() const { return reward_; }
  double noise_rate() const { return noise_rate_; }
  // Observation alphabet; noise picks among these.
  const std::vector<ClassLabel>& labels() const { return labels_; }
  // Train-pool answers of (step, label); distractors for NoMatch.
  const std::vector<std::string>& Answers(Step step, Label label) const;
  // Whitespace token counts of Answers(step, label).
  const std::vector<std::size_t>& AnswerLengths(Step step, Label label) const {
    return lengths_[Ordinal(step)][Ordinal(label)];
  }
  // Probability of observing `obs` for a record of class `truth`.
  double ObservationProbability(ClassLabel truth, ClassLabel obs) const;

 private:
  const ReasoningGraph& graph_;
  const TemplateBank& bank_;
  RewardConfig reward_;
  double noise_rate_;
  std::vector<ClassLabel> labels_;
  std::array<std::array<std::vector<std::size_t>, kNumLabels>, kNumSteps>
      lengths_;
};

// Distinct class labels of a dataset, in enum order.
std::vector<ClassLabel> LabelsOf(std::span<const Conversation> dataset);

struct SftConfig {
  int epochs = 300;
  double learning_rate = 2.0;
  double noise_rate = 0.3;
  // Fit separate logits per previous-answer bucket using the target's
  // previous category (teacher forcing). Off by default: the table is then
  // shared across buckets.
  bool teacher_forced_prefix = false;
  std::uint64_t seed = 0;
};

// Full-batch gradient descent on the expected cross-entropy. Zero epochs
// returns the uniform policy. Throws EmptyDataset.
PolicyTable PretrainSft(const ReasoningGraph& graph,
                        std::span<const Conversation> train,
                        const SftConfig& config);

// Samples one answer per turn and fills each turn's prediction. A sampled
// category equal to the target reuses the target text; any other is rendered
// from a seeded choice of answer template.
Conversation Rollout(const PolicyTable& policy, const SimEnvironment& env,
                     const Conversation& conversation, std::uint64_t seed);

struct PolicyMetrics {
  double reward = 0.0;
  double kl = 0.0;  // per conversation, summed over turns
  double a_q = 0.0;
  double a_c = 0.0;
  double a_d = 0.0;
  double h_cc = 0.0;
};

// Averages over `rollouts` sampled conversations per record.
PolicyMetrics EvaluatePolicy(const PolicyTable& policy,
                             const PolicyTable& reference,
                             const SimEnvironment& env,
                             std::span<const Conversation> dataset,
                             int rollouts, std::uint64_t seed,
                             Execution execution = Execution::kParallel);

enum class Baseline { kNone, kRunningMean };

struct TrainConfig {
  double beta = 0.1;
  double learning_rate = 3.0;
  int epochs = 300;
  int batch_size = 256;
  std::uint64_t seed = 0;
  Baseline baseline = Baseline::kRunningMean;
  double baseline_decay = 0.9;
  // Held-out rollouts per record for the per-epoch metrics.
  int eval_rollouts = 1;
  Execution execution = Execution::kParallel;
};

struct TrainTrace {
  std::vector<double> reward;  // training batch mean
  std::vector<double> kl;      // training batch mean
  std::vector<double> a_q;     // held-out
  std::vector<double> h_cc;    // held-out
  PolicyTable policy;
};

// Starts from a copy of `sft`, which also serves as the KL reference. The
// reward (including lambda) comes from `env`. Throws EmptyDataset, or
// DivergenceError if a logit becomes non-finite; the message names the epoch.
TrainTrace TrainRl(const PolicyTable& sft, const SimEnvironment& env,
                   std::span<const Conversation> train,
                   std::span<const Conversation> heldout,
                   const TrainConfig& config);

// epoch,reward,kl,a_q,h_cc
std::string TraceToCsv(const TrainTrace& trace);

struct SweepRow {
  double lambda = 0.0;
  std::uint64_t seed = 0;
  PolicyMetrics metrics;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // lambda-major
  // One row per lambda holding the median over seeds of every metric.
  std::vector<SweepRow> medians;
};

// For each seed: one pretraining run, then one tuning run per lambda with
// that seed. Throws SchemaError on an empty grid or seed list.
SweepResult SweepLambda(const SimEnvironment& env,
                        std::span<const Conversation> train,
                        std::span<const Conversation> heldout,
                        std::span<const double> lambdas,
                        std::span<const std::uint64_t> seeds,
                        const SftConfig& sft, const TrainConfig& config);

// lambda,seed,a_q,h_cc,reward,kl (seed column "median" for summary rows)
std::string SweepToCsv(const SweepResult& result);

// Expected reward of `policy` over `sample`, computed exactly by enumerating
// observations and answers. Small instances only: the work is
// (labels * answers)^turns per record.
double ExpectedReward(const PolicyTable& policy, const SimEnvironment& env,
                      std::span<const Conversation> sample);

// Central differences of ExpectedReward with respect to every logit of a
// state reachable from `sample`; other coordinates are zero. The reward
// component is picked through env's enable flags. Throws InvalidStep unless
// h > 0, InvariantError on an instance with more than three labels or more
// than three answers in some step.
std::vector<double> EstimateGradientFd(const PolicyTable& policy,
                                       const SimEnvironment& env,
                                       std::span<const Conversation> sample,
                                       double h);

// Score-function estimate of the same gradient from `samples` rollouts. Each
// answer is credited with its reward-to-go minus the leave-one-out mean of
// the same record and turn.
std::vector<double> EstimateGradientScoreFunction(
    const PolicyTable& policy, const SimEnvironment& env,
    std::span<const Conversation> sample, std::size_t samples,
    std::uint64_t seed);

}  // namespace symreward

#endif  // SYMREWARD_POLICY_SIM_H_
