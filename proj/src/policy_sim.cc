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

#include "symreward/policy_sim.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <set>

#include "symreward/errors.h"
#include "symreward/eval.h"
#include "symreward/hashing.h"
#include "symreward/rng.h"

namespace symreward {
namespace {

using nlohmann::json;

constexpr std::size_t kMaxActions = kNumLabels;
// Rollouts per held-out record for the final sweep metrics.
constexpr int kSweepRollouts = 8;

std::size_t ClassIndex(ClassLabel c) { return static_cast<std::size_t>(c); }

// One conversation as the simulator sees it.
struct EpisodeSpec {
  ClassLabel truth;
  std::vector<Step> steps;
  std::vector<Label> targets;
  std::vector<std::size_t> target_lengths;
  PathCoverage coverage;
  Path target_path;
};

EpisodeSpec SpecOf(const Conversation& c) {
  EpisodeSpec s{c.class_label, {}, {}, {},
                AllowsPartialCoverage(c.scenario) ? PathCoverage::kPartialAllowed
                                                  : PathCoverage::kComplete,
                c.target_path};
  for (const Turn& t : c.turns) {
    s.steps.push_back(t.step);
    s.targets.push_back(c.target_path[Ordinal(t.step)]);
    s.target_lengths.push_back(WhitespaceTokenCount(t.target));
  }
  return s;
}

std::vector<EpisodeSpec> SpecsOf(std::span<const Conversation> data) {
  std::vector<EpisodeSpec> out;
  out.reserve(data.size());
  for (const auto& c : data) out.push_back(SpecOf(c));
  return out;
}

struct Visit {
  std::size_t offset;  // first logit of the state
  Step step;
  std::uint8_t action;
};

struct Episode {
  std::vector<Visit> visits;
  std::vector<Label> predicted;
  std::vector<int> template_index;  // -1: target text reused
  double reward = 0.0;
  // Additive per-turn share of the reward; the consistency bonus is the rest.
  std::vector<double> turn_reward;
  RewardBreakdown breakdown;
};

ClassLabel Observe(const SimEnvironment& env, ClassLabel truth, Rng& rng) {
  const auto& labels = env.labels();
  const double u = rng.Uniform();
  if (labels.size() < 2 || u >= env.noise_rate()) return truth;
  std::vector<ClassLabel> others;
  for (ClassLabel l : labels) {
    if (l != truth) others.push_back(l);
  }
  return others[rng.Index(others.size())];
}

Episode RunEpisode(const PolicyTable& policy, const SimEnvironment& env,
                   const EpisodeSpec& spec, Rng& rng) {
  Episode ep;
  const std::size_t n = spec.steps.size();
  std::vector<std::size_t> plen(n);
  std::optional<Label> previous;
  std::array<double, kMaxActions> probs{};
  for (std::size_t t = 0; t < n; ++t) {
    const Step step = spec.steps[t];
    const ClassLabel obs = Observe(env, spec.truth, rng);
    const std::size_t bucket = PolicyTable::Bucket(previous);
    const auto actions = policy.actions(step);
    std::span<double> p(probs.data(), actions.size());
    policy.Probabilities(obs, step, bucket, p);
    const std::size_t a = rng.Weighted(p);
    const Label label = actions[a];
    ep.visits.push_back({policy.Offset(obs, step, bucket), step,
                         static_cast<std::uint8_t>(a)});
    ep.predicted.push_back(label);
    const auto& lengths = env.AnswerLengths(step, label);
    if (label == spec.targets[t] || lengths.empty()) {
      plen[t] = spec.target_lengths[t];
      ep.template_index.push_back(-1);
    } else {
      const std::size_t k = rng.Index(lengths.size());
      plen[t] = lengths[k];
      ep.template_index.push_back(static_cast<int>(k));
    }
    previous = label;
  }
  ep.breakdown = ScoreCategories(env.graph(), spec.steps, ep.predicted,
                                 spec.targets, plen, spec.target_lengths,
                                 env.reward(), spec.coverage);
  ep.reward = ep.breakdown.total;
  const RewardConfig& rc = env.reward();
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t t = 0; t < n; ++t) {
    double r = 0.0;
    if (rc.enable_correctness && ep.predicted[t] == spec.targets[t]) r += inv_n;
    if (rc.enable_length) {
      const double g = static_cast<double>(spec.target_lengths[t]);
      const double excess =
          std::abs(static_cast<double>(plen[t]) - g) / g - rc.length_tolerance;
      r -= rc.length_weight * std::min(1.0, std::max(0.0, excess)) * inv_n;
    }
    if (rc.enable_nomatch && ep.predicted[t] == Label::kNoMatch) {
      r -= rc.nomatch_weight * inv_n;
    }
    ep.turn_reward.push_back(r);
  }
  return ep;
}

// Softmax of a state's logits.
void StateProbs(const PolicyTable& policy, std::size_t offset, Step step,
                std::span<double> out) {
  const double* z = policy.raw().data() + offset;
  const double tau = policy.temperature();
  double mx = -INFINITY;
  for (std::size_t k = 0; k < out.size(); ++k) mx = std::max(mx, z[k] / tau);
  double sum = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = std::exp(z[k] / tau - mx);
    sum += out[k];
  }
  for (double& v : out) v /= sum;
  (void)step;
}

double StateKl(const PolicyTable& policy, const PolicyTable& reference,
               std::size_t offset, Step step) {
  const std::size_t m = policy.actions(step).size();
  std::array<double, kMaxActions> p{}, q{};
  StateProbs(policy, offset, step, {p.data(), m});
  StateProbs(reference, offset, step, {q.data(), m});
  double kl = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    if (p[k] > 0.0) kl += p[k] * std::log(p[k] / q[k]);
  }
  return std::max(kl, 0.0);
}

template <typename F>
void ForEach(std::size_t n, Execution execution, F&& body) {
  if (execution == Execution::kParallel) {
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 16)
    for (std::size_t i = 0; i < n; ++i) {
      try {
        body(i);
      } catch (...) {
#pragma omp critical(symreward_sim_error)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (std::size_t i = 0; i < n; ++i) body(i);
  }
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n == 0) return 0.0;
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string Num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// PolicyTable

PolicyTable::PolicyTable(const ReasoningGraph& graph, double temperature)
    : temperature_(temperature), graph_hash_(graph.content_hash()) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvariantError("policy temperature must be positive");
  }
  std::size_t per_bucket = 0;
  for (Step s : kAllSteps) {
    const auto cats = graph.categories(s);
    actions_[Ordinal(s)].assign(cats.begin(), cats.end());
    step_offset_[Ordinal(s)] = per_bucket * kNumBuckets;
    per_bucket += cats.size();
  }
  per_obs_ = per_bucket * kNumBuckets;
  logits_.assign(per_obs_ * kNumClassLabels, 0.0);
}

std::size_t PolicyTable::Offset(ClassLabel obs, Step step,
                                std::size_t bucket) const {
  return ClassIndex(obs) * per_obs_ + step_offset_[Ordinal(step)] +
         bucket * actions_[Ordinal(step)].size();
}

void PolicyTable::Probabilities(ClassLabel obs, Step step, std::size_t bucket,
                                std::span<double> out) const {
  StateProbs(*this, Offset(obs, step, bucket), step, out);
}

bool PolicyTable::AllFinite() const {
  return std::all_of(logits_.begin(), logits_.end(),
                     [](double v) { return std::isfinite(v); });
}

json PolicyToJson(const PolicyTable& policy) {
  json actions = json::object();
  for (Step s : kAllSteps) {
    json list = json::array();
    for (Label l : policy.actions(s)) list.push_back(LabelName(l));
    actions[std::string(StepName(s))] = std::move(list);
  }
  return {{"version", "1"},
          {"graph_hash", policy.graph_hash()},
          {"temperature", policy.temperature()},
          {"observations", {"BloodContamination", "ParticleContamination",
                            "AML", "MM", "Healthy"}},
          {"buckets", PolicyTable::kNumBuckets},
          {"actions", std::move(actions)},
          {"logits", policy.raw()}};
}

PolicyTable PolicyFromJson(const ReasoningGraph& graph, const json& j) {
  try {
    if (j.at("version") != "1") throw SchemaError("unknown policy version");
    if (j.at("graph_hash").get<std::string>() != graph.content_hash()) {
      throw SchemaError("policy was trained on a different graph");
    }
    PolicyTable p(graph, j.at("temperature").get<double>());
    const auto logits = j.at("logits").get<std::vector<double>>();
    if (logits.size() != p.raw().size()) {
      throw SchemaError("policy logit count does not match the graph");
    }
    p.raw() = logits;
    if (!p.AllFinite()) throw SchemaError("policy holds non-finite logits");
    return p;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("policy file: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Environment

SimEnvironment::SimEnvironment(const ReasoningGraph& graph,
                               const TemplateBank& bank, RewardConfig reward,
                               double noise_rate,
                               std::vector<ClassLabel> labels)
    : graph_(graph),
      bank_(bank),
      reward_(reward),
      noise_rate_(noise_rate),
      labels_(std::move(labels)) {
  reward_.Validate();
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) {
    throw InvariantError("noise rate must lie in [0, 1]");
  }
  if (labels_.empty()) throw EmptyDataset("no observation labels");
  for (Step s : kAllSteps) {
    for (Label l : StepCategories(s)) {
      for (const auto& text : Answers(s, l)) {
        lengths_[Ordinal(s)][Ordinal(l)].push_back(WhitespaceTokenCount(text));
      }
    }
  }
}

const std::vector<std::string>& SimEnvironment::Answers(Step step,
                                                        Label label) const {
  if (label == Label::kNoMatch) return bank_.distractors().train;
  return bank_.answers(step, label).train;
}

double SimEnvironment::ObservationProbability(ClassLabel truth,
                                              ClassLabel obs) const {
  const std::size_t k = labels_.size();
  if (std::find(labels_.begin(), labels_.end(), obs) == labels_.end()) {
    return 0.0;
  }
  if (k < 2) return obs == truth ? 1.0 : 0.0;
  return obs == truth ? 1.0 - noise_rate_
                      : noise_rate_ / static_cast<double>(k - 1);
}

std::vector<ClassLabel> LabelsOf(std::span<const Conversation> dataset) {
  std::set<ClassLabel> seen;
  for (const auto& c : dataset) seen.insert(c.class_label);
  return {seen.begin(), seen.end()};
}

// ---------------------------------------------------------------------------
// Pretraining

PolicyTable PretrainSft(const ReasoningGraph& graph,
                        std::span<const Conversation> train,
                        const SftConfig& config) {
  if (train.empty()) throw EmptyDataset("no training conversations");
  if (config.epochs < 0) throw InvariantError("epochs must be non-negative");
  if (!(config.learning_rate > 0.0)) {
    throw InvariantError("learning rate must be positive");
  }
  PolicyTable policy(graph);
  const std::vector<ClassLabel> labels = LabelsOf(train);
  const double eps = config.noise_rate;
  if (!(eps >= 0.0 && eps <= 1.0)) {
    throw InvariantError("noise rate must lie in [0, 1]");
  }
  auto observation_probability = [&](ClassLabel truth, ClassLabel obs) {
    if (labels.size() < 2) return obs == truth ? 1.0 : 0.0;
    return obs == truth ? 1.0 - eps
                        : eps / static_cast<double>(labels.size() - 1);
  };

  // Target mass per logit: expected count of (state, target) pairs,
  // normalized per step.
  std::array<std::size_t, kNumSteps> turns_per_step{};
  for (const auto& c : train) {
    for (const Turn& t : c.turns) ++turns_per_step[Ordinal(t.step)];
  }
  std::vector<double> target(policy.raw().size(), 0.0);
  std::vector<double> mass(policy.raw().size(), 0.0);  // per state, at offset
  std::set<std::size_t> states;
  for (const auto& c : train) {
    std::optional<Label> previous;
    for (const Turn& t : c.turns) {
      const Label y = c.target_path[Ordinal(t.step)];
      const auto actions = policy.actions(t.step);
      const auto it = std::find(actions.begin(), actions.end(), y);
      if (it == actions.end()) {
        throw InvariantError("graph has no category " +
                             std::string(LabelName(y)) + " for step " +
                             std::string(StepName(t.step)));
      }
      const std::size_t a = static_cast<std::size_t>(it - actions.begin());
      const std::size_t bucket = config.teacher_forced_prefix
                                     ? PolicyTable::Bucket(previous)
                                     : PolicyTable::kStartBucket;
      const double w = 1.0 / static_cast<double>(turns_per_step[Ordinal(t.step)]);
      for (ClassLabel obs : labels) {
        const double p = observation_probability(c.class_label, obs) * w;
        if (p == 0.0) continue;
        const std::size_t off = policy.Offset(obs, t.step, bucket);
        target[off + a] += p;
        mass[off] += p;
        states.insert(off);
      }
      previous = y;
    }
  }

  // Each state's loss is mass * CE(target/mass, pi); dividing its gradient by
  // the mass keeps one step size stable for every state.
  std::vector<std::pair<std::size_t, Step>> state_list;
  for (Step s : kAllSteps) {
    for (ClassLabel obs : labels) {
      for (std::size_t b = 0; b < PolicyTable::kNumBuckets; ++b) {
        const std::size_t off = policy.Offset(obs, s, b);
        if (states.count(off)) state_list.emplace_back(off, s);
      }
    }
  }
  std::array<double, kMaxActions> probs{};
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& [off, step] : state_list) {
      const std::size_t m = policy.actions(step).size();
      std::span<double> p(probs.data(), m);
      StateProbs(policy, off, step, p);
      for (std::size_t k = 0; k < m; ++k) {
        const double grad = p[k] - target[off + k] / mass[off];
        policy.raw()[off + k] -= config.learning_rate * grad;
      }
    }
  }

  if (!config.teacher_forced_prefix) {
    for (Step s : kAllSteps) {
      const std::size_t m = policy.actions(s).size();
      for (ClassLabel obs : kAllClassLabels) {
        const std::size_t src =
            policy.Offset(obs, s, PolicyTable::kStartBucket);
        for (std::size_t b = 0; b < PolicyTable::kStartBucket; ++b) {
          const std::size_t dst = policy.Offset(obs, s, b);
          std::copy_n(policy.raw().begin() + static_cast<std::ptrdiff_t>(src),
                      m, policy.raw().begin() + static_cast<std::ptrdiff_t>(dst));
        }
      }
    }
  }
  return policy;
}

// ---------------------------------------------------------------------------
// Rollouts and evaluation

Conversation Rollout(const PolicyTable& policy, const SimEnvironment& env,
                     const Conversation& conversation, std::uint64_t seed) {
  const EpisodeSpec spec = SpecOf(conversation);
  Rng rng(seed);
  const Episode ep = RunEpisode(policy, env, spec, rng);
  Conversation out = conversation;
  for (std::size_t t = 0; t < out.turns.size(); ++t) {
    const int k = ep.template_index[t];
    out.turns[t].prediction =
        k < 0 ? out.turns[t].target
              : env.Answers(spec.steps[t], ep.predicted[t])[static_cast<std::size_t>(k)];
  }
  return out;
}

PolicyMetrics EvaluatePolicy(const PolicyTable& policy,
                             const PolicyTable& reference,
                             const SimEnvironment& env,
                             std::span<const Conversation> dataset,
                             int rollouts, std::uint64_t seed,
                             Execution execution) {
  PolicyMetrics m;
  if (dataset.empty() || rollouts <= 0) return m;
  const auto specs = SpecsOf(dataset);
  const std::size_t r = static_cast<std::size_t>(rollouts);
  const std::size_t n = specs.size() * r;
  std::vector<ConversationOutcome> outcomes(n);
  std::vector<double> rewards(n), kls(n);
  ForEach(n, execution, [&](std::size_t i) {
    const EpisodeSpec& spec = specs[i / r];
    Rng rng(MixSeed(seed, i));
    const Episode ep = RunEpisode(policy, env, spec, rng);
    rewards[i] = ep.reward;
    double kl = 0.0;
    for (const Visit& v : ep.visits) kl += StateKl(policy, reference, v.offset, v.step);
    kls[i] = kl;
    outcomes[i] = ScoreConversationCategories(
        env.graph(), spec.steps, ep.predicted, spec.target_path, spec.coverage);
  });
  MetricCounts counts;
  for (std::size_t i = 0; i < n; ++i) {
    counts.Add(outcomes[i]);
    m.reward += rewards[i];
    m.kl += kls[i];
  }
  m.reward /= static_cast<double>(n);
  m.kl /= static_cast<double>(n);
  m.a_q = counts.a_q();
  m.a_c = counts.a_c();
  m.a_d = counts.a_d();
  m.h_cc = counts.h_cc();
  return m;
}

// ---------------------------------------------------------------------------
// Policy-gradient tuning

TrainTrace TrainRl(const PolicyTable& sft, const SimEnvironment& env,
                   std::span<const Conversation> train,
                   std::span<const Conversation> heldout,
                   const TrainConfig& config) {
  if (train.empty()) throw EmptyDataset("no training conversations");
  if (!(config.beta >= 0.0)) throw InvariantError("beta must be non-negative");
  if (config.epochs < 1) throw InvariantError("epochs must be at least 1");
  if (config.batch_size < 1) throw InvariantError("batch size must be positive");
  if (!(config.learning_rate > 0.0)) {
    throw InvariantError("learning rate must be positive");
  }
  if (sft.graph_hash() != env.graph().content_hash()) {
    throw InvariantError("policy and environment use different graphs");
  }
  const auto specs = SpecsOf(train);
  const auto eval_set = heldout.empty() ? train : heldout;
  const PolicyTable& reference = sft;
  TrainTrace trace{{}, {}, {}, {}, sft};
  PolicyTable& policy = trace.policy;

  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  const std::size_t dim = policy.raw().size();
  std::vector<Episode> episodes(batch);
  std::vector<double> g_reward(dim), g_kl(dim), curvature(dim);
  std::optional<double> baseline;
  const std::uint64_t eval_seed = MixSeed(config.seed, 0xE7A1);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const std::uint64_t epoch_seed = MixSeed(config.seed, epoch);
    ForEach(batch, config.execution, [&](std::size_t b) {
      Rng rng(MixSeed(epoch_seed, b));
      const EpisodeSpec& spec = specs[rng.Index(specs.size())];
      episodes[b] = RunEpisode(policy, env, spec, rng);
    });

    double mean_reward = 0.0;
    for (const auto& ep : episodes) mean_reward += ep.reward;
    mean_reward /= static_cast<double>(batch);
    double b = 0.0;
    if (config.baseline == Baseline::kRunningMean) {
      b = baseline.value_or(mean_reward);
    }

    std::fill(g_reward.begin(), g_reward.end(), 0.0);
    std::fill(g_kl.begin(), g_kl.end(), 0.0);
    std::fill(curvature.begin(), curvature.end(), 0.0);
    double mean_kl = 0.0;
    std::array<double, kMaxActions> p{}, q{};
    const double inv_b = 1.0 / static_cast<double>(batch);
    for (const auto& ep : episodes) {
      const double adv = ep.reward - b;
      for (const Visit& v : ep.visits) {
        const std::size_t m = policy.actions(v.step).size();
        StateProbs(policy, v.offset, v.step, {p.data(), m});
        StateProbs(reference, v.offset, v.step, {q.data(), m});
        std::array<double, kMaxActions> log_ratio{};
        double kl = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
          if (p[k] > 0.0) log_ratio[k] = std::log(p[k] / q[k]);
          kl += p[k] * log_ratio[k];
        }
        mean_kl += std::max(kl, 0.0) * inv_b;
        for (std::size_t k = 0; k < m; ++k) {
          const double score = (k == v.action ? 1.0 : 0.0) - p[k];
          g_reward[v.offset + k] += adv * score * inv_b;
          g_kl[v.offset + k] += p[k] * (log_ratio[k] - kl) * inv_b;
          curvature[v.offset + k] += p[k] * (1.0 - p[k]) * inv_b;
        }
      }
    }

    // Ascent on reward minus beta * KL. Dividing by 1 + lr*beta*curvature
    // keeps large beta stable; it is a positive diagonal rescaling.
    const double lr = config.learning_rate;
    for (std::size_t i = 0; i < dim; ++i) {
      if (g_reward[i] == 0.0 && g_kl[i] == 0.0) continue;
      policy.raw()[i] += lr * (g_reward[i] - config.beta * g_kl[i]) /
                         (1.0 + lr * config.beta * curvature[i]);
    }
    if (!policy.AllFinite()) {
      throw DivergenceError("non-finite logits after epoch " +
                            std::to_string(epoch + 1) + " (batch reward " +
                            Num(mean_reward) + ", kl " + Num(mean_kl) + ")");
    }
    if (config.baseline == Baseline::kRunningMean) {
      baseline = config.baseline_decay * b +
                 (1.0 - config.baseline_decay) * mean_reward;
    }

    const PolicyMetrics held = EvaluatePolicy(policy, reference, env, eval_set,
                                              config.eval_rollouts, eval_seed,
                                              config.execution);
    trace.reward.push_back(mean_reward);
    trace.kl.push_back(mean_kl);
    trace.a_q.push_back(held.a_q);
    trace.h_cc.push_back(held.h_cc);
  }
  return trace;
}

std::string TraceToCsv(const TrainTrace& trace) {
  std::string out = "epoch,reward,kl,a_q,h_cc\n";
  for (std::size_t e = 0; e < trace.reward.size(); ++e) {
    out += std::to_string(e + 1) + "," + Num(trace.reward[e]) + "," +
           Num(trace.kl[e]) + "," + Num(trace.a_q[e]) + "," +
           Num(trace.h_cc[e]) + "\n";
  }
  return out;
}

SweepResult SweepLambda(const SimEnvironment& env,
                        std::span<const Conversation> train,
                        std::span<const Conversation> heldout,
                        std::span<const double> lambdas,
                        std::span<const std::uint64_t> seeds,
                        const SftConfig& sft, const TrainConfig& config) {
  if (lambdas.empty()) throw SchemaError("lambda grid is empty");
  if (seeds.empty()) throw SchemaError("seed list is empty");
  const auto eval_set = heldout.empty() ? train : heldout;
  std::vector<std::vector<SweepRow>> by_lambda(lambdas.size());
  for (std::uint64_t seed : seeds) {
    SftConfig s = sft;
    s.seed = seed;
    const PolicyTable reference = PretrainSft(env.graph(), train, s);
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      RewardConfig reward = env.reward();
      reward.lambda = lambdas[i];
      const SimEnvironment env_l(env.graph(), env.bank(), reward,
                                 env.noise_rate(), env.labels());
      TrainConfig c = config;
      c.seed = seed;
      const TrainTrace trace = TrainRl(reference, env_l, train, heldout, c);
      const PolicyMetrics m =
          EvaluatePolicy(trace.policy, reference, env_l, eval_set,
                         std::max(config.eval_rollouts, kSweepRollouts),
                         MixSeed(seed, 0x5EE9), config.execution);
      by_lambda[i].push_back({lambdas[i], seed, m});
    }
  }
  SweepResult result;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    std::vector<double> aq, hcc, rw, kl, ac, ad;
    for (const auto& row : by_lambda[i]) {
      result.rows.push_back(row);
      aq.push_back(row.metrics.a_q);
      hcc.push_back(row.metrics.h_cc);
      rw.push_back(row.metrics.reward);
      kl.push_back(row.metrics.kl);
      ac.push_back(row.metrics.a_c);
      ad.push_back(row.metrics.a_d);
    }
    SweepRow med{lambdas[i], 0, {}};
    med.metrics.a_q = Median(aq);
    med.metrics.h_cc = Median(hcc);
    med.metrics.reward = Median(rw);
    med.metrics.kl = Median(kl);
    med.metrics.a_c = Median(ac);
    med.metrics.a_d = Median(ad);
    result.medians.push_back(med);
  }
  return result;
}

std::string SweepToCsv(const SweepResult& result) {
  std::string out = "lambda,seed,a_q,h_cc,reward,kl\n";
  auto row = [&](const SweepRow& r, const std::string& seed) {
    out += Num(r.lambda) + "," + seed + "," + Num(r.metrics.a_q) + "," +
           Num(r.metrics.h_cc) + "," + Num(r.metrics.reward) + "," +
           Num(r.metrics.kl) + "\n";
  };
  for (const auto& r : result.rows) row(r, std::to_string(r.seed));
  for (const auto& r : result.medians) row(r, "median");
  return out;
}

// ---------------------------------------------------------------------------
// Exact expectation and gradient estimators

namespace {

void CheckTiny(const PolicyTable& policy, const SimEnvironment& env) {
  if (env.labels().size() > 3) {
    throw InvariantError("exact enumeration needs at most three labels");
  }
  for (Step s : kAllSteps) {
    if (policy.actions(s).size() > 3) {
      throw InvariantError("exact enumeration needs at most three answers "
                           "per step");
    }
  }
}

// Mean length penalty term f over the rendering choices of one answer.
double ExpectedLengthExcess(const SimEnvironment& env, Step step, Label label,
                            Label target, std::size_t target_len) {
  const auto& lengths = env.AnswerLengths(step, label);
  if (label == target || lengths.empty()) return 0.0;
  const double g = static_cast<double>(target_len);
  const double tau = env.reward().length_tolerance;
  double sum = 0.0;
  for (std::size_t len : lengths) {
    const double excess = std::abs(static_cast<double>(len) - g) / g - tau;
    sum += std::min(1.0, std::max(0.0, excess));
  }
  return sum / static_cast<double>(lengths.size());
}

double ExpectedRecordReward(const PolicyTable& policy,
                            const SimEnvironment& env, const EpisodeSpec& spec) {
  const RewardConfig& rc = env.reward();
  const std::size_t n = spec.steps.size();
  if (n == 0) throw IncompleteConversation("conversation has no turns");
  for (std::size_t t = 0; t < n; ++t) {
    if (spec.target_lengths[t] == 0) {
      throw DegenerateTarget("target answer has no tokens");
    }
  }
  std::vector<Label> chosen(n);
  double total = 0.0;
  // Depth-first over answers; observations are independent per turn and
  // are summed out at each state.
  auto recurse = [&](auto&& self, std::size_t t, std::optional<Label> previous,
                     double prob, double additive) -> void {
    if (t == n) {
      double r = additive / static_cast<double>(n);
      if (rc.enable_consistency) {
        PartialPath path{};
        for (std::size_t i = 0; i < n; ++i) path[Ordinal(spec.steps[i])] = chosen[i];
        bool complete = true;
        for (const auto& slot : path) complete &= slot.has_value();
        if (complete || spec.coverage == PathCoverage::kPartialAllowed) {
          if (IsCompatiblePartialPath(env.graph(), path)) r += rc.lambda;
        } else {
          throw IncompleteConversation("conversation skips a step");
        }
      }
      total += prob * r;
      return;
    }
    const Step step = spec.steps[t];
    const auto actions = policy.actions(step);
    const std::size_t m = actions.size();
    std::array<double, kMaxActions> marginal{}, p{};
    const std::size_t bucket = PolicyTable::Bucket(previous);
    for (ClassLabel obs : env.labels()) {
      const double po = env.ObservationProbability(spec.truth, obs);
      if (po == 0.0) continue;
      policy.Probabilities(obs, step, bucket, {p.data(), m});
      for (std::size_t k = 0; k < m; ++k) marginal[k] += po * p[k];
    }
    for (std::size_t k = 0; k < m; ++k) {
      if (marginal[k] == 0.0) continue;
      const Label a = actions[k];
      double add = 0.0;
      if (rc.enable_correctness) add += a == spec.targets[t] ? 1.0 : 0.0;
      if (rc.enable_length) {
        add -= rc.length_weight *
               ExpectedLengthExcess(env, step, a, spec.targets[t],
                                    spec.target_lengths[t]);
      }
      if (rc.enable_nomatch && a == Label::kNoMatch) add -= rc.nomatch_weight;
      chosen[t] = a;
      self(self, t + 1, a, prob * marginal[k], additive + add);
    }
  };
  recurse(recurse, 0, std::nullopt, 1.0, 0.0);
  return total;
}

// Offsets of every state some record of `specs` can visit.
std::vector<std::pair<std::size_t, Step>> ReachableStates(
    const PolicyTable& policy, const SimEnvironment& env,
    const std::vector<EpisodeSpec>& specs) {
  std::set<std::pair<std::size_t, Step>> states;
  for (const auto& spec : specs) {
    for (std::size_t t = 0; t < spec.steps.size(); ++t) {
      std::vector<std::size_t> buckets;
      if (t == 0) {
        buckets.push_back(PolicyTable::kStartBucket);
      } else {
        for (Label l : policy.actions(spec.steps[t - 1])) {
          buckets.push_back(PolicyTable::Bucket(l));
        }
      }
      for (ClassLabel obs : env.labels()) {
        if (env.ObservationProbability(spec.truth, obs) == 0.0) continue;
        for (std::size_t b : buckets) {
          states.emplace(policy.Offset(obs, spec.steps[t], b), spec.steps[t]);
        }
      }
    }
  }
  return {states.begin(), states.end()};
}

}  // namespace

double ExpectedReward(const PolicyTable& policy, const SimEnvironment& env,
                      std::span<const Conversation> sample) {
  if (sample.empty()) throw EmptyDataset("empty sample");
  CheckTiny(policy, env);
  double sum = 0.0;
  for (const auto& c : sample) {
    sum += ExpectedRecordReward(policy, env, SpecOf(c));
  }
  return sum / static_cast<double>(sample.size());
}

std::vector<double> EstimateGradientFd(const PolicyTable& policy,
                                       const SimEnvironment& env,
                                       std::span<const Conversation> sample,
                                       double h) {
  if (!(h > 0.0) || !std::isfinite(h)) {
    throw InvalidStep("finite-difference step must be positive");
  }
  if (sample.empty()) throw EmptyDataset("empty sample");
  CheckTiny(policy, env);
  const auto specs = SpecsOf(sample);
  std::vector<double> grad(policy.raw().size(), 0.0);
  PolicyTable work = policy;
  for (const auto& [offset, step] : ReachableStates(policy, env, specs)) {
    for (std::size_t k = 0; k < policy.actions(step).size(); ++k) {
      const std::size_t i = offset + k;
      const double z = work.raw()[i];
      work.raw()[i] = z + h;
      const double up = ExpectedReward(work, env, sample);
      work.raw()[i] = z - h;
      const double down = ExpectedReward(work, env, sample);
      work.raw()[i] = z;
      grad[i] = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

std::vector<double> EstimateGradientScoreFunction(
    const PolicyTable& policy, const SimEnvironment& env,
    std::span<const Conversation> sample, std::size_t samples,
    std::uint64_t seed) {
  if (sample.empty()) throw EmptyDataset("empty sample");
  if (samples < 2) throw InvariantError("need at least two samples");
  const auto specs = SpecsOf(sample);
  std::vector<Episode> episodes(samples);
  std::vector<std::size_t> record(samples);
  ForEach(samples, Execution::kParallel, [&](std::size_t i) {
    Rng rng(MixSeed(seed, i));
    record[i] = rng.Index(specs.size());
    episodes[i] = RunEpisode(policy, env, specs[record[i]], rng);
  });
  // An answer cannot change rewards earned before it, so each turn is
  // credited with its reward-to-go. The baseline for (record, turn) is the
  // mean reward-to-go of the other samples of that record.
  auto to_go = [](const Episode& ep) {
    std::vector<double> g(ep.turn_reward.size() + 1, ep.breakdown.consistency);
    for (std::size_t t = ep.turn_reward.size(); t-- > 0;) {
      g[t] = g[t + 1] + ep.turn_reward[t];
    }
    return g;
  };
  std::vector<std::vector<double>> sums(specs.size());
  std::vector<double> counts(specs.size(), 0.0);
  for (std::size_t r = 0; r < specs.size(); ++r) {
    sums[r].assign(specs[r].steps.size() + 1, 0.0);
  }
  std::vector<std::vector<double>> returns(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    returns[i] = to_go(episodes[i]);
    for (std::size_t t = 0; t < returns[i].size(); ++t) {
      sums[record[i]][t] += returns[i][t];
    }
    counts[record[i]] += 1.0;
  }
  const double n = static_cast<double>(samples);
  std::vector<double> grad(policy.raw().size(), 0.0);
  std::array<double, kMaxActions> p{};
  for (std::size_t i = 0; i < samples; ++i) {
    const double others = counts[record[i]] - 1.0;
    const Episode& ep = episodes[i];
    for (std::size_t t = 0; t < ep.visits.size(); ++t) {
      const Visit& v = ep.visits[t];
      const double baseline =
          others > 0.0 ? (sums[record[i]][t] - returns[i][t]) / others : 0.0;
      const double adv = returns[i][t] - baseline;
      const std::size_t m = policy.actions(v.step).size();
      StateProbs(policy, v.offset, v.step, {p.data(), m});
      for (std::size_t k = 0; k < m; ++k) {
        grad[v.offset + k] += adv * ((k == v.action ? 1.0 : 0.0) - p[k]) / n;
      }
    }
  }
  return grad;
}

}  // namespace symreward
