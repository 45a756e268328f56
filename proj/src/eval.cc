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

#include "symreward/eval.h"

#include <cstdio>
#include <exception>
#include <map>
#include <tuple>

#include "symreward/errors.h"
#include "symreward/io.h"
#include "symreward/json_io.h"
#include "symreward/version.h"

namespace symreward {
namespace {

using nlohmann::json;

double Ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

json CountsToJson(const MetricCounts& c) {
  return {{"n_questions", c.n_questions},
          {"n_correct", c.n_correct},
          {"n_conversations", c.n_conversations},
          {"n_all_correct", c.n_all_correct},
          {"n_diagnosis_correct", c.n_diagnosis_correct},
          {"n_invalid_path", c.n_invalid_path},
          {"a_q", c.a_q()},
          {"a_c", c.a_c()},
          {"a_d", c.a_d()},
          {"h_cc", c.h_cc()}};
}

MetricCounts CountsFromJson(const json& j) {
  MetricCounts c;
  try {
    c.n_questions = j.at("n_questions").get<std::size_t>();
    c.n_correct = j.at("n_correct").get<std::size_t>();
    c.n_conversations = j.at("n_conversations").get<std::size_t>();
    c.n_all_correct = j.at("n_all_correct").get<std::size_t>();
    c.n_diagnosis_correct = j.at("n_diagnosis_correct").get<std::size_t>();
    c.n_invalid_path = j.at("n_invalid_path").get<std::size_t>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("metric counts: ") + e.what());
  }
  return c;
}

std::string Fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

struct Joined {
  const Conversation* conversation;
  const PredictionRecord* prediction;
};

}  // namespace

json PredictionToJson(const PredictionRecord& r) {
  json turns = json::array();
  for (const auto& [step, text] : r.turns) {
    turns.push_back({{"step", StepName(step)}, {"prediction", text}});
  }
  return {{"image_id", r.image_id},
          {"scenario", ScenarioName(r.scenario)},
          {"model_name", r.model_name},
          {"turns", std::move(turns)}};
}

PredictionRecord PredictionFromJson(const json& j) {
  PredictionRecord r;
  try {
    r.image_id = j.at("image_id").get<std::string>();
    r.scenario = ParseScenario(j.at("scenario").get<std::string>());
    if (j.contains("model_name")) {
      r.model_name = j.at("model_name").get<std::string>();
    }
    for (const json& t : j.at("turns")) {
      const std::string name = t.at("step").get<std::string>();
      auto step = ParseStep(name);
      if (!step) throw UnknownStep("unknown step '" + name + "'");
      r.turns.emplace_back(*step, t.at("prediction").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("prediction record: ") + e.what());
  }
  return r;
}

std::vector<PredictionRecord> ParsePredictionsJsonl(std::string_view text) {
  std::vector<PredictionRecord> out;
  std::size_t n = 0;
  for (const json& j : ParseJsonl(text)) {
    ++n;
    try {
      out.push_back(PredictionFromJson(j));
    } catch (const Error& e) {
      throw ParseError("prediction " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::vector<PredictionRecord> ReadPredictionsFile(
    const std::filesystem::path& file) {
  return ParsePredictionsJsonl(ReadTextFile(file));
}

std::vector<PredictionRecord> PredictionsFromTargets(
    std::span<const Conversation> dataset, std::string_view model_name) {
  std::vector<PredictionRecord> out;
  out.reserve(dataset.size());
  for (const auto& c : dataset) {
    PredictionRecord r{c.image_id, c.scenario, {}, std::string(model_name)};
    for (const Turn& t : c.turns) r.turns.emplace_back(t.step, t.target);
    out.push_back(std::move(r));
  }
  return out;
}

ConversationOutcome ScoreConversationCategories(
    const ReasoningGraph& graph, std::span<const Step> steps,
    std::span<const Label> predicted, const Path& target_path,
    PathCoverage coverage) {
  const PartialPath path = CanonicalPath(steps, predicted, coverage);
  ConversationOutcome o;
  o.n_turns = steps.size();
  for (std::size_t t = 0; t < steps.size(); ++t) {
    o.n_correct += predicted[t] == target_path[Ordinal(steps[t])];
  }
  const auto& dx = path[Ordinal(Step::kDiagnosis)];
  o.diagnosis_correct = !dx || *dx == target_path[Ordinal(Step::kDiagnosis)];
  o.path_valid = IsCompatiblePartialPath(graph, path);
  return o;
}

void MetricCounts::Add(const ConversationOutcome& o) {
  n_questions += o.n_turns;
  n_correct += o.n_correct;
  ++n_conversations;
  n_all_correct += o.n_correct == o.n_turns;
  n_diagnosis_correct += o.diagnosis_correct;
  n_invalid_path += !o.path_valid;
}

void MetricCounts::Merge(const MetricCounts& other) {
  n_questions += other.n_questions;
  n_correct += other.n_correct;
  n_conversations += other.n_conversations;
  n_all_correct += other.n_all_correct;
  n_diagnosis_correct += other.n_diagnosis_correct;
  n_invalid_path += other.n_invalid_path;
}

double MetricCounts::a_q() const { return Ratio(n_correct, n_questions); }
double MetricCounts::a_c() const { return Ratio(n_all_correct, n_conversations); }
double MetricCounts::a_d() const {
  return Ratio(n_diagnosis_correct, n_conversations);
}
double MetricCounts::h_cc() const {
  return Ratio(n_invalid_path, n_conversations);
}

MetricsReport Evaluate(const ReasoningGraph& graph, const Lexicon& lexicon,
                       std::span<const Conversation> dataset,
                       std::span<const PredictionRecord> predictions,
                       const EvalOptions& options) {
  if (options.reward) options.reward->Validate();
  std::map<std::pair<std::string, Scenario>, std::size_t> index;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (!index.emplace(std::make_pair(dataset[i].image_id, dataset[i].scenario), i)
             .second) {
      throw JoinError("dataset repeats (" + dataset[i].image_id + ", " +
                      std::string(ScenarioName(dataset[i].scenario)) + ")");
    }
  }
  std::vector<const PredictionRecord*> matched(dataset.size(), nullptr);
  for (const auto& p : predictions) {
    const std::string key_text =
        "(" + p.image_id + ", " + std::string(ScenarioName(p.scenario)) + ")";
    auto it = index.find({p.image_id, p.scenario});
    if (it == index.end()) {
      throw JoinError("prediction " + key_text + " has no dataset conversation");
    }
    if (matched[it->second]) {
      throw JoinError("prediction " + key_text + " appears twice");
    }
    const Conversation& c = dataset[it->second];
    if (p.turns.size() != c.turns.size()) {
      throw JoinError("prediction " + key_text + " has " +
                      std::to_string(p.turns.size()) + " turns, dataset has " +
                      std::to_string(c.turns.size()));
    }
    for (std::size_t t = 0; t < p.turns.size(); ++t) {
      if (p.turns[t].first != c.turns[t].step) {
        throw JoinError("prediction " + key_text + " turn " +
                        std::to_string(t) + " answers " +
                        std::string(StepName(p.turns[t].first)) +
                        ", dataset asks " +
                        std::string(StepName(c.turns[t].step)));
      }
    }
    matched[it->second] = &p;
  }
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (!matched[i]) {
      throw JoinError("no prediction for (" + dataset[i].image_id + ", " +
                      std::string(ScenarioName(dataset[i].scenario)) + ")");
    }
  }

  const std::size_t n = dataset.size();
  std::vector<ConversationOutcome> outcomes(n);
  std::vector<RewardBreakdown> rewards(options.reward ? n : 0);
  std::exception_ptr failure;

  auto score = [&](std::size_t i) {
    const Conversation& c = dataset[i];
    const PredictionRecord& p = *matched[i];
    const PathCoverage coverage = AllowsPartialCoverage(c.scenario)
                                      ? PathCoverage::kPartialAllowed
                                      : PathCoverage::kComplete;
    std::vector<Step> steps;
    std::vector<Label> predicted;
    for (const auto& [step, text] : p.turns) {
      steps.push_back(step);
      predicted.push_back(Classify(lexicon, step, text).category);
    }
    outcomes[i] = ScoreConversationCategories(graph, steps, predicted,
                                              c.target_path, coverage);
    if (options.reward) {
      std::vector<RewardTurn> turns;
      for (std::size_t t = 0; t < c.turns.size(); ++t) {
        turns.push_back({c.turns[t].step, p.turns[t].second, c.turns[t].target,
                         std::nullopt});
      }
      rewards[i] = ComputeReward(graph, lexicon, turns, *options.reward,
                                 coverage);
    }
  };

  if (options.execution == Execution::kParallel) {
#pragma omp parallel for schedule(dynamic, 32)
    for (std::size_t i = 0; i < n; ++i) {
      try {
        score(i);
      } catch (...) {
#pragma omp critical(symreward_eval_error)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (std::size_t i = 0; i < n; ++i) score(i);
  }

  MetricsReport report;
  for (std::size_t i = 0; i < n; ++i) {
    report.overall.Add(outcomes[i]);
    report.per_scenario[std::string(ScenarioName(dataset[i].scenario))].Add(
        outcomes[i]);
  }
  if (options.reward) {
    RewardMeans m;
    for (const auto& b : rewards) {
      m.correctness += b.correctness;
      m.consistency += b.consistency;
      m.length_penalty += b.length_penalty;
      m.nomatch_penalty += b.nomatch_penalty;
      m.total += b.total;
    }
    if (n > 0) {
      const double k = static_cast<double>(n);
      m.correctness /= k;
      m.consistency /= k;
      m.length_penalty /= k;
      m.nomatch_penalty /= k;
      m.total /= k;
    }
    report.reward_means = m;
  }
  report.dataset_hash = options.dataset_hash;
  report.graph_hash = graph.content_hash();
  report.lexicon_hash = lexicon.content_hash();
  report.toolkit_version = std::string(kToolkitVersion);
  if (!predictions.empty()) report.model_name = predictions.front().model_name;
  return report;
}

json ReportToJson(const MetricsReport& r) {
  json scenarios = json::object();
  for (const auto& [name, c] : r.per_scenario) scenarios[name] = CountsToJson(c);
  json j = {{"toolkit_version", r.toolkit_version},
            {"dataset_hash", r.dataset_hash},
            {"graph_hash", r.graph_hash},
            {"lexicon_hash", r.lexicon_hash},
            {"model_name", r.model_name},
            {"overall", CountsToJson(r.overall)},
            {"per_scenario", std::move(scenarios)}};
  if (r.reward_means) {
    const auto& m = *r.reward_means;
    j["reward_means"] = {{"correctness", m.correctness},
                         {"consistency", m.consistency},
                         {"length_penalty", m.length_penalty},
                         {"nomatch_penalty", m.nomatch_penalty},
                         {"total", m.total}};
  }
  return j;
}

MetricsReport ReportFromJson(const json& j) {
  MetricsReport r;
  try {
    r.toolkit_version = j.at("toolkit_version").get<std::string>();
    r.dataset_hash = j.at("dataset_hash").get<std::string>();
    r.graph_hash = j.value("graph_hash", "");
    r.lexicon_hash = j.value("lexicon_hash", "");
    r.model_name = j.value("model_name", "");
    r.overall = CountsFromJson(j.at("overall"));
    for (auto it = j.at("per_scenario").begin(); it != j.at("per_scenario").end();
         ++it) {
      r.per_scenario[it.key()] = CountsFromJson(*it);
    }
    if (j.contains("reward_means")) {
      const json& m = j.at("reward_means");
      r.reward_means = RewardMeans{
          m.at("correctness").get<double>(), m.at("consistency").get<double>(),
          m.at("length_penalty").get<double>(),
          m.at("nomatch_penalty").get<double>(), m.at("total").get<double>()};
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("metrics report: ") + e.what());
  }
  return r;
}

std::string ReportToCsv(const MetricsReport& r) {
  std::string out =
      "scope,n_questions,n_conversations,a_q,a_c,a_d,h_cc,model_name,"
      "dataset_hash,graph_hash,lexicon_hash,toolkit_version\n";
  auto row = [&](const std::string& scope, const MetricCounts& c) {
    out += scope + "," + std::to_string(c.n_questions) + "," +
           std::to_string(c.n_conversations) + "," + Fixed(c.a_q()) + "," +
           Fixed(c.a_c()) + "," + Fixed(c.a_d()) + "," + Fixed(c.h_cc()) +
           "," + r.model_name + "," + r.dataset_hash + "," + r.graph_hash +
           "," + r.lexicon_hash + "," + r.toolkit_version + "\n";
  };
  row("all", r.overall);
  for (const auto& [name, c] : r.per_scenario) row(name, c);
  return out;
}

std::vector<MetricDelta> CompareReports(const MetricsReport& baseline,
                                        const MetricsReport& candidate) {
  if (baseline.dataset_hash != candidate.dataset_hash) {
    throw DatasetMismatch("reports were computed on different datasets (" +
                          baseline.dataset_hash + " vs " +
                          candidate.dataset_hash + ")");
  }
  std::vector<MetricDelta> out;
  auto add = [&](const std::string& scope, const MetricCounts& b,
                 const MetricCounts& c) {
    const std::tuple<const char*, double, double> metrics[] = {
        {"a_q", b.a_q(), c.a_q()},
        {"a_c", b.a_c(), c.a_c()},
        {"a_d", b.a_d(), c.a_d()},
        {"h_cc", b.h_cc(), c.h_cc()}};
    for (const auto& [name, bv, cv] : metrics) {
      MetricDelta d{scope, name, bv, cv, 100.0 * (cv - bv), 0.0};
      if (bv != 0.0) d.relative_percent = 100.0 * (cv - bv) / bv;
      out.push_back(d);
    }
  };
  add("all", baseline.overall, candidate.overall);
  for (const auto& [name, b] : baseline.per_scenario) {
    auto it = candidate.per_scenario.find(name);
    if (it != candidate.per_scenario.end()) add(name, b, it->second);
  }
  return out;
}

std::string DeltasToCsv(std::span<const MetricDelta> deltas) {
  std::string out = "scope,metric,baseline,candidate,delta_points,relative_percent\n";
  for (const auto& d : deltas) {
    out += d.scope + "," + d.metric + "," + Fixed(d.baseline) + "," +
           Fixed(d.candidate) + "," + Fixed(d.delta_points) + "," +
           Fixed(d.relative_percent) + "\n";
  }
  return out;
}

}  // namespace symreward
