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

#include "symreward/synthesizer.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <exception>
#include <set>

#include "json.hpp"
#include "symreward/errors.h"
#include "symreward/hashing.h"
#include "symreward/json_io.h"
#include "symreward/rng.h"
#include "symreward/version.h"

namespace symreward {
namespace {

// Stream tags; arbitrary but fixed.
constexpr std::uint64_t kStepOrderStream = 0x4949;
constexpr std::uint64_t kHypothesisStream = 0x4859;
constexpr std::uint64_t kScenarioStream = 0x5343;
constexpr std::uint64_t kSplitStream = 0x5350;

constexpr std::array<std::string_view, kNumClassLabels> kClassNames = {
    "BloodContamination", "ParticleContamination", "AML", "MM", "Healthy"};
constexpr std::array<std::string_view, 7> kScenarioNames = {
    "SI", "DF", "II", "CQ_R", "CQ_W", "RQ_R", "RQ_W"};

bool IsCq(Scenario s) { return s == Scenario::kCQ_R || s == Scenario::kCQ_W; }
bool IsRq(Scenario s) { return s == Scenario::kRQ_R || s == Scenario::kRQ_W; }
bool IsWrong(Scenario s) {
  return s == Scenario::kCQ_W || s == Scenario::kRQ_W;
}

std::string Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::pair<std::string, std::string>> ParseAssignments(
    std::string_view spec) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t start = 0;
  while (start <= spec.size()) {
    auto end = spec.find(',', start);
    if (end == std::string_view::npos) end = spec.size();
    const std::string item = Trim(spec.substr(start, end - start));
    start = end + 1;
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw SchemaError("expected name=value, got '" + item + "'");
    }
    out.emplace_back(Trim(item.substr(0, eq)), Trim(item.substr(eq + 1)));
  }
  return out;
}

void ReplaceAll(std::string& s, std::string_view from, std::string_view to) {
  for (auto pos = s.find(from); pos != std::string::npos;
       pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

// Picks a template, then one of its accepted rephrasings or itself. Always
// makes two draws so the stream position does not depend on the table.
std::string PickText(Rng& rng, const std::vector<std::string>& pool,
                     const VariantTable* variants) {
  const std::string& base = pool[rng.Index(pool.size())];
  const std::uint64_t draw = rng.Next();
  if (!variants) return base;
  auto it = variants->find(base);
  if (it == variants->end() || it->second.empty()) return base;
  const std::size_t k = draw % (it->second.size() + 1);
  return k == 0 ? base : it->second[k - 1];
}

const std::vector<std::string>& PoolOrThrow(const SplitPool& pool, Split split,
                                            const std::string& what) {
  const auto& list = pool.of(split);
  if (list.empty()) {
    throw MissingTemplate("no " + std::string(SplitName(split)) + " " + what);
  }
  return list;
}

std::vector<Step> TurnOrder(Scenario scenario, std::uint64_t seed) {
  switch (scenario) {
    case Scenario::kDF:
      return {Step::kDiagnosis, Step::kImageQuality, Step::kCellQuality,
              Step::kAbnormality, Step::kProliferation};
    case Scenario::kII: {
      Rng rng(MixSeed(seed, kStepOrderStream));
      std::vector<Step> order;
      for (std::size_t i = 0; i < kNumSteps; ++i) {
        order.push_back(kAllSteps[rng.Index(kNumSteps)]);
      }
      return order;
    }
    default:
      return {kAllSteps.begin(), kAllSteps.end()};
  }
}

}  // namespace

std::string_view ClassLabelName(ClassLabel label) {
  return kClassNames[static_cast<std::size_t>(label)];
}

ClassLabel ParseClassLabel(std::string_view name) {
  // Case-insensitive, so "healthy=2" works on the command line.
  auto same = [](std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
             return std::tolower(static_cast<unsigned char>(x)) ==
                    std::tolower(static_cast<unsigned char>(y));
           });
  };
  for (std::size_t i = 0; i < kNumClassLabels; ++i) {
    if (same(kClassNames[i], name)) return kAllClassLabels[i];
  }
  throw UnknownLabel("unknown class label '" + std::string(name) + "'");
}

std::string_view ScenarioName(Scenario scenario) {
  return kScenarioNames[static_cast<std::size_t>(scenario)];
}

Scenario ParseScenario(std::string_view name) {
  for (std::size_t i = 0; i < kScenarioNames.size(); ++i) {
    if (kScenarioNames[i] == name) return kAllScenarios[i];
  }
  throw SchemaError("unknown scenario '" + std::string(name) + "'");
}

bool AllowsPartialCoverage(Scenario scenario) {
  return scenario == Scenario::kII;
}

Path TargetPathFor(const ReasoningGraph& graph, ClassLabel label) {
  using L = Label;
  Path p{};
  switch (label) {
    case ClassLabel::kHealthy:
      p = {L::kHighQuality, L::kAdequate, L::kNormal, L::kNormalProlif,
           L::kHealthy};
      break;
    case ClassLabel::kAML:
      p = {L::kHighQuality, L::kAdequate, L::kAbnormal, L::kBlastProlif,
           L::kAML};
      break;
    case ClassLabel::kMM:
      p = {L::kHighQuality, L::kAdequate, L::kAbnormal, L::kPlasmaProlif,
           L::kMM};
      break;
    case ClassLabel::kBloodContamination:
      p = {L::kHighQuality, L::kBlood, L::kInadequate, L::kInadequate,
           L::kInconclusive};
      break;
    case ClassLabel::kParticleContamination:
      p = {L::kHighQuality, L::kClot, L::kInadequate, L::kInadequate,
           L::kInconclusive};
      break;
  }
  if (!graph.Contains(p)) {
    throw InvariantError("graph has no path for class " +
                         std::string(ClassLabelName(label)) + ": " +
                         PathToString(p));
  }
  return p;
}

Path TargetPathFor(const ReasoningGraph& graph, std::string_view label) {
  return TargetPathFor(graph, ParseClassLabel(label));
}

VariantTable BuildVariantTable(const TemplateBank& bank,
                               const Lexicon& lexicon, Paraphraser& paraphraser,
                               int n) {
  VariantTable table;
  for (Step step : kAllSteps) {
    for (Split split : {Split::kTrain, Split::kEval}) {
      const auto& questions = bank.questions(step).of(split);
      for (const auto& q : questions) {
        ParaphraseRequest req{ParaphraseRequest::Kind::kQuestion, q, "", n};
        std::vector<std::string> kept;
        std::set<std::string> seen{q};
        for (auto& v : paraphraser.Rephrase(req)) {
          if (seen.insert(v).second) kept.push_back(std::move(v));
        }
        if (!kept.empty()) table[q] = std::move(kept);
      }
      const std::string context = questions.empty() ? "" : questions.front();
      for (Label label : StepCategories(step)) {
        for (const auto& a : bank.answers(step, label).of(split)) {
          ParaphraseRequest req{ParaphraseRequest::Kind::kAnswer, a, context,
                                n};
          auto kept = FilterVariants(lexicon, step, label, a,
                                     paraphraser.Rephrase(req));
          if (!kept.empty()) table[a] = std::move(kept);
        }
      }
    }
  }
  return table;
}

Conversation SynthesizeConversation(const SynthesisContext& ctx,
                                    const AnnotationRecord& record,
                                    Scenario scenario, std::uint64_t seed) {
  Conversation conv;
  conv.image_id = record.image_id;
  conv.class_label = record.class_label;
  conv.scenario = scenario;
  conv.seed = seed;
  conv.split = record.split;
  conv.target_path = TargetPathFor(ctx.graph, record.class_label);

  const TemplateBank& bank = ctx.bank;
  const Split split = record.split;
  std::array<std::uint64_t, kNumSteps> occurrence{};

  for (Step step : TurnOrder(scenario, seed)) {
    const Label target = conv.target_path[Ordinal(step)];
    Rng rng(MixSeed(MixSeed(seed, Ordinal(step) + 1),
                    occurrence[Ordinal(step)]++));
    const std::string step_name(StepName(step));
    Turn turn;
    turn.step = step;
    turn.prompt = PickText(
        rng, PoolOrThrow(bank.questions(step), split, step_name + " question"),
        ctx.variants);
    turn.target = PickText(
        rng,
        PoolOrThrow(bank.answers(step, target), split,
                    step_name + "/" + std::string(LabelName(target)) +
                        " answer"),
        ctx.variants);

    if (step == Step::kDiagnosis && (IsCq(scenario) || IsRq(scenario))) {
      Rng hrng(MixSeed(seed, kHypothesisStream));
      Label hyp = target;
      if (IsWrong(scenario)) {
        std::vector<Label> others;
        for (Label d : StepCategories(Step::kDiagnosis)) {
          if (d != Label::kNoMatch && d != target) others.push_back(d);
        }
        hyp = others[hrng.Index(others.size())];
      }
      const std::string kind(ScenarioName(scenario));
      std::string wrapper = bank.hypothesis(kind);
      if (wrapper.empty()) {
        throw MissingTemplate("no hypothesis wrapper for " + kind);
      }
      const std::string hyp_name(LabelName(hyp));
      if (IsCq(scenario)) {
        ReplaceAll(wrapper, "[statement]",
                   PickText(hrng,
                            PoolOrThrow(bank.statements(hyp), split,
                                        "statement for " + hyp_name),
                            nullptr));
      } else {
        ReplaceAll(wrapper, "[rationale]",
                   PickText(hrng,
                            PoolOrThrow(bank.rationales(hyp), split,
                                        "rationale for " + hyp_name),
                            nullptr));
        ReplaceAll(wrapper, "[Question]", turn.prompt);
      }
      turn.prompt = std::move(wrapper);
      conv.hypothesis = hyp;
    }
    conv.turns.push_back(std::move(turn));
  }
  return conv;
}

ClassCounts ReferenceCorpusCounts() {
  ClassCounts c{};
  c[static_cast<std::size_t>(ClassLabel::kBloodContamination)] = 10083;
  c[static_cast<std::size_t>(ClassLabel::kParticleContamination)] = 3510;
  c[static_cast<std::size_t>(ClassLabel::kAML)] = 1531;
  c[static_cast<std::size_t>(ClassLabel::kMM)] = 932;
  c[static_cast<std::size_t>(ClassLabel::kHealthy)] = 284;
  return c;
}

ClassCounts ParseClassCounts(std::string_view spec) {
  if (Trim(spec) == "paper-default") return ReferenceCorpusCounts();
  ClassCounts c{};
  for (const auto& [name, value] : ParseAssignments(spec)) {
    const ClassLabel label = ParseClassLabel(name);
    std::size_t pos = 0;
    long long n = -1;
    try {
      n = std::stoll(value, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != value.size() || n < 0) {
      throw SchemaError("count for " + name + " must be a non-negative integer");
    }
    c[static_cast<std::size_t>(label)] = static_cast<std::size_t>(n);
  }
  return c;
}

std::vector<std::pair<Scenario, double>> ParseScenarioMix(
    std::string_view spec) {
  std::vector<std::pair<Scenario, double>> mix;
  for (const auto& [name, value] : ParseAssignments(spec)) {
    std::size_t pos = 0;
    double w = -1.0;
    try {
      w = std::stod(value, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != value.size() || !(w >= 0.0) || !std::isfinite(w)) {
      throw SchemaError("weight for " + name + " must be a non-negative number");
    }
    mix.emplace_back(ParseScenario(name), w);
  }
  if (mix.empty()) throw SchemaError("scenario mix is empty");
  return mix;
}

Dataset SynthesizeDataset(const SynthesisContext& ctx,
                          const DatasetOptions& options) {
  if (!(options.split_fraction > 0.0 && options.split_fraction < 1.0)) {
    throw SchemaError("split fraction must lie strictly between 0 and 1");
  }
  double mix_total = 0.0;
  for (const auto& [s, w] : options.scenario_mix) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw SchemaError("scenario weights must be non-negative");
    }
    mix_total += w;
  }
  if (!(mix_total > 0.0)) throw SchemaError("scenario weights sum to zero");

  const TemplateBank& bank = ctx.bank;
  bool wants_cq = false, wants_rq = false;
  for (const auto& [s, w] : options.scenario_mix) {
    if (w > 0.0 && IsCq(s)) wants_cq = true;
    if (w > 0.0 && IsRq(s)) wants_rq = true;
  }

  // Record layout: class order, then index within class.
  std::vector<AnnotationRecord> records;
  std::array<std::array<std::size_t, 2>, kNumClassLabels> split_counts{};
  std::array<bool, 2> split_used{};
  for (std::size_t c = 0; c < kNumClassLabels; ++c) {
    const std::size_t n = options.counts[c];
    const auto n_train = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * options.split_fraction + 1e-9));
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(MixSeed(options.seed, kSplitStream + c));
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.Index(i)]);
    std::vector<Split> split(n, Split::kEval);
    for (std::size_t i = 0; i < n_train; ++i) split[perm[i]] = Split::kTrain;
    for (std::size_t i = 0; i < n; ++i) {
      char id[32];
      std::snprintf(id, sizeof(id), "-%05zu", i);
      records.push_back({"bma-" + std::string(ClassLabelName(kAllClassLabels[c])) + id,
                         kAllClassLabels[c], split[i]});
    }
    split_counts[c] = {n_train, n - n_train};
    if (n_train > 0) split_used[0] = true;
    if (n > n_train) split_used[1] = true;
  }

  // Both splits must be servable, and from disjoint strings.
  std::array<std::set<std::string>, 2> strings;
  auto add = [&](int s, const std::string& text) {
    strings[s].insert(text);
    if (ctx.variants) {
      auto it = ctx.variants->find(text);
      if (it != ctx.variants->end()) {
        strings[s].insert(it->second.begin(), it->second.end());
      }
    }
  };
  for (int s = 0; s < 2; ++s) {
    if (!split_used[s]) continue;
    const Split split = s == 0 ? Split::kTrain : Split::kEval;
    const std::string sname(SplitName(split));
    for (std::size_t c = 0; c < kNumClassLabels; ++c) {
      if (split_counts[c][s] == 0) continue;
      const Path path = TargetPathFor(ctx.graph, kAllClassLabels[c]);
      for (Step step : kAllSteps) {
        const auto& q = bank.questions(step).of(split);
        const auto& a = bank.answers(step, path[Ordinal(step)]).of(split);
        if (q.empty() || a.empty()) {
          throw InsufficientTemplates(
              "no " + sname + " templates for " + std::string(StepName(step)) +
              "/" + std::string(LabelName(path[Ordinal(step)])));
        }
        for (const auto& t : q) add(s, t);
        for (const auto& t : a) add(s, t);
      }
      if (wants_cq || wants_rq) {
        for (Label d : StepCategories(Step::kDiagnosis)) {
          if (d == Label::kNoMatch) continue;
          if ((wants_cq && bank.statements(d).of(split).empty()) ||
              (wants_rq && bank.rationales(d).of(split).empty())) {
            throw InsufficientTemplates("no " + sname +
                                        " hypothesis content for " +
                                        std::string(LabelName(d)));
          }
          for (const auto& t : bank.statements(d).of(split)) add(s, t);
          for (const auto& t : bank.rationales(d).of(split)) add(s, t);
        }
      }
    }
  }
  for (const auto& text : strings[0]) {
    if (strings[1].count(text)) {
      throw InsufficientTemplates("string used by both splits: '" + text + "'");
    }
  }

  std::vector<double> weights;
  for (const auto& [s, w] : options.scenario_mix) weights.push_back(w);

  const std::size_t total = records.size();
  Dataset out;
  out.conversations.resize(total);
  std::vector<std::string> lines(total);
  std::exception_ptr failure;

  auto generate = [&](std::size_t g) {
    const std::uint64_t record_seed = MixSeed(options.seed, g);
    Rng srng(MixSeed(record_seed, kScenarioStream));
    const Scenario scenario =
        options.scenario_mix[srng.Weighted(weights)].first;
    out.conversations[g] =
        SynthesizeConversation(ctx, records[g], scenario, record_seed);
    lines[g] = ConversationToJson(out.conversations[g]).dump();
  };

  if (options.execution == Execution::kParallel) {
#pragma omp parallel for schedule(static)
    for (std::size_t g = 0; g < total; ++g) {
      try {
        generate(g);
      } catch (...) {
#pragma omp critical(symreward_synth_error)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (std::size_t g = 0; g < total; ++g) generate(g);
  }

  std::string stream;
  for (const auto& line : lines) {
    stream += line;
    stream += '\n';
  }

  DatasetManifest& m = out.manifest;
  m.toolkit_version = std::string(kToolkitVersion);
  m.graph_hash = ctx.graph.content_hash();
  m.templates_hash = bank.content_hash();
  m.variants_hash =
      ctx.variants ? Sha256Hex(nlohmann::json(*ctx.variants).dump()) : "";
  nlohmann::json opts = {{"seed", options.seed},
                         {"split_fraction", options.split_fraction},
                         {"counts", options.counts}};
  for (const auto& [s, w] : options.scenario_mix) {
    opts["scenario_mix"].push_back({std::string(ScenarioName(s)), w});
  }
  m.config_hash = Sha256Hex(m.graph_hash + "\n" + m.templates_hash + "\n" +
                            m.variants_hash + "\n" + opts.dump());
  m.seed = options.seed;
  m.split_fraction = options.split_fraction;
  m.class_split_counts = split_counts;
  for (const auto& conv : out.conversations) {
    ++m.scenario_counts[std::string(ScenarioName(conv.scenario))];
  }
  m.total = total;
  m.dataset_hash = Sha256Hex(stream);
  return out;
}

}  // namespace symreward
