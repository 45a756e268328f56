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

// Acceptance run: one PASS or FAIL line per criterion, nonzero exit if any
// criterion fails. Every tolerance and time limit is fixed below.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "symreward/batch.h"
#include "symreward/classifier.h"
#include "symreward/errors.h"
#include "symreward/eval.h"
#include "symreward/graph.h"
#include "symreward/hashing.h"
#include "symreward/io.h"
#include "symreward/json_io.h"
#include "symreward/policy_sim.h"
#include "symreward/reward.h"
#include "symreward/rng.h"
#include "symreward/service.h"
#include "symreward/synthesizer.h"
#include "symreward/templates.h"
#include "test_support.h"

namespace symreward {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::AllClasses;
using testing::BalancedSplit;
using testing::DefaultGraph;
using testing::DefaultLexicon;
using testing::DefaultParaphrases;
using testing::DefaultTemplates;

// Pinned tolerances and limits.
constexpr double kClassifierSeconds = 1.0;
constexpr double kPathSeconds = 1.0;
constexpr double kSumTolerance = 1e-12;
constexpr double kToggleTolerance = 1e-12;
constexpr double kGradientRelTolerance = 0.05;
constexpr double kGradientSignificance = 0.01;
constexpr std::size_t kGradientSamples = 100000;
constexpr double kGradientSeconds = 120.0;
constexpr double kSweepHccDrop = 0.30;
constexpr double kSweepSeconds = 300.0;
constexpr double kSftRlSeconds = 300.0;
constexpr std::size_t kSimPerClass = 100;
constexpr std::uint64_t kSimDataSeed = 7;
constexpr int kSimEvalRollouts = 8;
const std::vector<std::uint64_t> kSeeds = {1, 2, 3};

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void Criterion(const std::string& name, const std::function<Outcome()>& body) {
  Outcome o;
  const auto start = Clock::now();
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  std::printf("%s  %-28s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name.c_str(),
              o.detail.c_str(), Seconds(start));
  std::fflush(stdout);
  failures += !o.pass;
}

std::string Fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

std::string Cli() {
  const char* cli = std::getenv("SYMREWARD_CLI");
  return cli ? cli : "build/symreward";
}

int Exec(const std::string& args) {
  const std::string cmd = "'" + Cli() + "' --config-dir '" +
                          testing::ConfigDir().string() + "' " + args +
                          " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path Scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "symreward_acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const std::string& AnswerFor(std::mt19937_64& rng, Step step, Label l) {
  const auto& pool = l == Label::kNoMatch
                         ? DefaultTemplates().distractors().train
                         : DefaultTemplates().answers(step, l).train;
  return pool[rng() % pool.size()];
}

double Median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v.size() % 2 ? v[v.size() / 2]
                      : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

// ---------------------------------------------------------------------------

Outcome ClassifierGolden() {
  const json cases =
      json::parse(ReadTextFile(testing::TestDataDir() / "classifier_golden.json"));
  std::set<std::pair<Step, Label>> covered;
  std::size_t agree = 0, negation = 0, casing = 0, traps = 0, phrase_neg = 0;
  const auto start = Clock::now();
  for (const auto& c : cases) {
    const Step step = *ParseStep(c.at("step").get<std::string>());
    const Label expected = *ParseLabel(c.at("expected").get<std::string>());
    agree += Classify(DefaultLexicon(), step, c.at("text").get<std::string>())
                 .category == expected;
    covered.insert({step, expected});
    const std::string why = c.at("why");
    negation += why.find("negat") != std::string::npos;
    casing += why.find("casing") != std::string::npos;
    traps += why.find("trap") != std::string::npos ||
             why.find("must not fire") != std::string::npos;
    phrase_neg += why.find("phrase containing a negator") != std::string::npos;
  }
  const double elapsed = Seconds(start);
  std::size_t cells = 0, missing = 0;
  for (Step s : kAllSteps) {
    for (Label l : StepCategories(s)) {
      ++cells;
      missing += !covered.count({s, l});
    }
  }
  const bool pass = cases.size() >= 60 && agree == cases.size() &&
                    missing == 0 && negation > 0 && casing > 0 && traps > 0 &&
                    phrase_neg > 0 && elapsed < kClassifierSeconds;
  return {pass, Fmt("%zu/%zu agree, %zu/%zu (step, category) cells, %.3fs < %.0fs",
                    agree, cases.size(), cells - missing, cells, elapsed,
                    kClassifierSeconds)};
}

Outcome TemplateRoundTrip() {
  const auto& bank = DefaultTemplates();
  std::size_t answers = 0, wrong = 0;
  for (Step s : kAllSteps) {
    for (Label l : StepCategories(s)) {
      if (l == Label::kNoMatch) continue;
      for (Split split : {Split::kTrain, Split::kEval}) {
        for (const auto& text : bank.answers(s, l).of(split)) {
          ++answers;
          wrong += Classify(DefaultLexicon(), s, text).category != l;
        }
      }
    }
  }
  const auto issues = CheckTemplateBank(DefaultGraph(), DefaultLexicon(), bank,
                                        &DefaultParaphrases());
  const std::size_t variants = DefaultParaphrases().all().size();
  return {wrong == 0 && issues.empty() && answers > 0 && variants > 0,
          Fmt("%zu answer templates, %zu paraphrases, %zu misclassified, "
              "%zu bank issues",
              answers, variants, wrong, issues.size())};
}

Outcome PathBruteForce() {
  const auto start = Clock::now();
  std::size_t tuples = 0;
  std::set<Path> accepted;
  std::array<Label, kNumSteps> t{};
  std::function<void(std::size_t)> walk = [&](std::size_t i) {
    if (i == kNumSteps) {
      ++tuples;
      if (IsValidPath(DefaultGraph(), t)) accepted.insert(t);
      return;
    }
    for (Label l : StepCategories(kAllSteps[i])) {
      t[i] = l;
      walk(i + 1);
    }
  };
  walk(0);
  const double elapsed = Seconds(start);
  const auto& paths = DefaultGraph().concrete_paths();
  const bool same = std::set<Path>(paths.begin(), paths.end()) == accepted;
  return {tuples == 1200 && accepted.size() == 8 && same &&
              elapsed < kPathSeconds,
          Fmt("%zu tuples, %zu accepted, equal to the expansion: %s, %.3fs < %.0fs",
              tuples, accepted.size(), same ? "yes" : "no", elapsed,
              kPathSeconds)};
}

Outcome RewardDecomposition() {
  std::mt19937_64 rng(1000);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<RewardTurn> turns;
    const Path& target =
        DefaultGraph().concrete_paths()[rng() % DefaultGraph().concrete_paths().size()];
    for (Step s : kAllSteps) {
      const auto cats = StepCategories(s);
      turns.push_back({s, AnswerFor(rng, s, cats[rng() % cats.size()]),
                       AnswerFor(rng, s, target[Ordinal(s)]), std::nullopt});
    }
    RewardConfig rc;
    rc.lambda = (rng() % 9) * 0.25;
    const auto b = ComputeReward(DefaultGraph(), DefaultLexicon(), turns, rc);
    const double sum =
        b.correctness + b.consistency + b.length_penalty + b.nomatch_penalty;
    worst = std::max(worst, std::abs(b.total - sum));
  }
  int violations = 0;
  double max_total = -1e9;
  for (int i = 0; i < 500; ++i) {
    const Path& target =
        DefaultGraph().concrete_paths()[rng() % DefaultGraph().concrete_paths().size()];
    std::vector<RewardTurn> turns;
    for (Step s : kAllSteps) {
      const std::string& text = AnswerFor(rng, s, target[Ordinal(s)]);
      turns.push_back({s, text, text, std::nullopt});
    }
    const double clean =
        ComputeReward(DefaultGraph(), DefaultLexicon(), turns, RewardConfig{}).total;
    const std::size_t k = rng() % kNumSteps;
    const auto cats = StepCategories(turns[k].step);
    Label other;
    do {
      other = cats[rng() % cats.size()];
    } while (other == target[k]);
    turns[k].prediction = AnswerFor(rng, turns[k].step, other);
    const double corrupted =
        ComputeReward(DefaultGraph(), DefaultLexicon(), turns, RewardConfig{}).total;
    violations += corrupted > clean;
    max_total = std::max(max_total, clean);
  }
  return {worst <= kSumTolerance && violations == 0,
          Fmt("max |total - sum| %.1e <= %.0e over 1000; %d of 500 "
              "corruptions raised the total",
              worst, kSumTolerance, violations)};
}

// Toy-policy metrics for the ablation and training criteria.
struct SimData {
  std::vector<Conversation> train, heldout;
};

const SimData& Sim() {
  static const SimData d = [] {
    auto [train, heldout] =
        BalancedSplit(DefaultGraph(), kSimPerClass, AllClasses(), kSimDataSeed);
    return SimData{std::move(train), std::move(heldout)};
  }();
  return d;
}

struct SimRun {
  PolicyMetrics sft, rl;
};

SimRun TrainOnce(const RewardConfig& reward, double beta, std::uint64_t seed) {
  const SimEnvironment env(DefaultGraph(), DefaultTemplates(), reward, 0.3,
                           LabelsOf(Sim().train));
  SftConfig s;
  s.seed = seed;
  const PolicyTable sft = PretrainSft(DefaultGraph(), Sim().train, s);
  TrainConfig t;
  t.beta = beta;
  t.seed = seed;
  const TrainTrace trace = TrainRl(sft, env, Sim().train, Sim().heldout, t);
  const std::uint64_t eval_seed = MixSeed(seed, 0xACCE);
  return {EvaluatePolicy(sft, sft, env, Sim().heldout, kSimEvalRollouts, eval_seed),
          EvaluatePolicy(trace.policy, sft, env, Sim().heldout, kSimEvalRollouts,
                         eval_seed)};
}

Outcome AblationArithmetic() {
  const fs::path dir = Scratch("ablation");
  const std::string data = (dir / "d.jsonl").string();
  if (Exec("synth --counts Healthy=12,AML=12,MM=12,BloodContamination=12,"
           "ParticleContamination=12 --scenario-mix SI=1,DF=1,II=1,CQ_W=1,RQ_R=1"
           " --seed 5 --out '" + data + "'") != 0) {
    return {false, "synth failed"};
  }
  // Predictions from a uniform policy so every component varies.
  const auto dataset = ReadDatasetFile(data);
  const SimEnvironment env(DefaultGraph(), DefaultTemplates(), RewardConfig{},
                           0.3, AllClasses());
  const PolicyTable uniform(DefaultGraph());
  std::string preds;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Conversation c = Rollout(uniform, env, dataset[i], 500 + i);
    PredictionRecord p{c.image_id, c.scenario, {}, "uniform"};
    for (const auto& t : c.turns) p.turns.emplace_back(t.step, *t.prediction);
    preds += PredictionToJson(p).dump() + "\n";
  }
  WriteTextFile(dir / "p.jsonl", preds);
  auto score = [&](const std::string& flag) {
    const fs::path out = dir / ("s" + flag + ".jsonl");
    if (Exec("score --dataset '" + data + "' --predictions '" +
             (dir / "p.jsonl").string() + "' " + flag + " --out '" +
             out.string() + "'") != 0) {
      throw IoError("score " + flag + " failed");
    }
    std::vector<json> rows;
    for (const auto& line : SplitLines(ReadTextFile(out))) {
      const json j = json::parse(line);
      if (!j.contains("meta")) rows.push_back(j.at("breakdown"));
    }
    return rows;
  };
  const auto full = score("");
  const std::map<std::string, std::string> toggles = {
      {"--no-rc", "correctness"},
      {"--no-rs", "consistency"},
      {"--no-rm", "nomatch_penalty"},
      {"--no-rl", "length_penalty"}};
  double worst = 0.0;
  std::size_t nonzero = 0;
  for (const auto& [flag, component] : toggles) {
    const auto off = score(flag);
    if (off.size() != full.size()) return {false, "row count differs"};
    for (std::size_t i = 0; i < full.size(); ++i) {
      const double delta =
          full[i].at("total").get<double>() - off[i].at("total").get<double>();
      const double value = full[i].at(component).get<double>();
      worst = std::max(worst, std::abs(delta - value));
      nonzero += value != 0.0;
    }
  }

  // Direction on the toy policy, medians over seeds.
  RewardConfig no_rs, no_rc;
  no_rs.enable_consistency = false;
  no_rc.enable_correctness = false;
  std::vector<double> hcc_full, hcc_no_rs, aq_full, aq_no_rc;
  for (std::uint64_t seed : kSeeds) {
    const SimRun f = TrainOnce(RewardConfig{}, 0.1, seed);
    hcc_full.push_back(f.rl.h_cc);
    aq_full.push_back(f.rl.a_q);
    hcc_no_rs.push_back(TrainOnce(no_rs, 0.1, seed).rl.h_cc);
    aq_no_rc.push_back(TrainOnce(no_rc, 0.1, seed).rl.a_q);
  }
  const double chance = [] {
    double c = 0.0;
    for (Step s : kAllSteps) c += 1.0 / DefaultGraph().categories(s).size();
    return c / kNumSteps;
  }();
  const bool arithmetic = worst <= kToggleTolerance && nonzero > 0;
  const bool rs_dir = Median(hcc_no_rs) > Median(hcc_full);
  const bool rc_dir = Median(aq_no_rc) < Median(aq_full);
  return {arithmetic && rs_dir && rc_dir,
          Fmt("toggle error %.1e <= %.0e over %zu rows x 4; H_cc w/o R_S %.3f > "
              "full %.3f; A_Q w/o R_C %.3f < full %.3f (chance %.3f)",
              worst, kToggleTolerance, full.size(), Median(hcc_no_rs),
              Median(hcc_full), Median(aq_no_rc), Median(aq_full), chance)};
}

Outcome MetricsInvariants() {
  auto [train, heldout] = BalancedSplit(
      DefaultGraph(), 10, AllClasses(), 3,
      {{Scenario::kSI, 1}, {Scenario::kDF, 1}, {Scenario::kII, 1},
       {Scenario::kCQ_R, 1}, {Scenario::kCQ_W, 1}, {Scenario::kRQ_R, 1},
       {Scenario::kRQ_W, 1}});
  std::vector<Conversation> data = train;
  data.insert(data.end(), heldout.begin(), heldout.end());
  std::mt19937_64 rng(100);
  int order_violations = 0, slice_violations = 0;
  auto slices_ok = [](const MetricsReport& r) {
    MetricCounts sum;
    for (const auto& [name, c] : r.per_scenario) sum.Merge(c);
    const MetricCounts& o = r.overall;
    return sum.n_questions == o.n_questions && sum.n_correct == o.n_correct &&
           sum.n_conversations == o.n_conversations &&
           sum.n_all_correct == o.n_all_correct &&
           sum.n_diagnosis_correct == o.n_diagnosis_correct &&
           sum.n_invalid_path == o.n_invalid_path;
  };
  for (int set = 0; set < 100; ++set) {
    const double keep = (rng() % 101) / 100.0;
    std::vector<PredictionRecord> preds;
    for (const auto& c : data) {
      PredictionRecord p{c.image_id, c.scenario, {}, "random"};
      for (const auto& t : c.turns) {
        const auto cats = StepCategories(t.step);
        const bool right = (rng() % 1000) / 1000.0 < keep;
        p.turns.emplace_back(t.step, right ? t.target
                                           : AnswerFor(rng, t.step,
                                                       cats[rng() % cats.size()]));
      }
      preds.push_back(std::move(p));
    }
    const MetricsReport r =
        Evaluate(DefaultGraph(), DefaultLexicon(), data, preds, EvalOptions{});
    auto ordered = [](const MetricCounts& c) {
      return c.a_c() <= c.a_q() && c.a_c() <= c.a_d();
    };
    order_violations += !ordered(r.overall);
    for (const auto& [name, c] : r.per_scenario) order_violations += !ordered(c);
    slice_violations += !slices_ok(r);
  }
  const MetricsReport self = Evaluate(DefaultGraph(), DefaultLexicon(), data,
                                      PredictionsFromTargets(data, "self"),
                                      EvalOptions{});
  bool self_ok = slices_ok(self);
  for (const MetricCounts* c : {&self.overall}) {
    self_ok &= c->a_q() == 1.0 && c->a_c() == 1.0 && c->a_d() == 1.0 &&
               c->h_cc() == 0.0;
  }
  for (const auto& [name, c] : self.per_scenario) {
    self_ok &= c.a_q() == 1.0 && c.a_c() == 1.0 && c.a_d() == 1.0 &&
               c.h_cc() == 0.0;
  }
  return {order_violations == 0 && slice_violations == 0 && self_ok,
          Fmt("100 random sets over %zu conversations: %d ordering and %d "
              "slice violations; self-predictions all 1.0 / H_cc 0: %s",
              data.size(), order_violations, slice_violations,
              self_ok ? "yes" : "no")};
}

Outcome DatasetReproduction() {
  const fs::path dir = Scratch("reference");
  const std::string a = (dir / "a.jsonl").string(), b = (dir / "b.jsonl").string();
  if (Exec("synth --counts paper-default --seed 0 --out '" + a + "'") != 0 ||
      Exec("synth --counts paper-default --seed 0 --out '" + b + "'") != 0) {
    return {false, "synth failed"};
  }
  const bool same = Sha256File(a) == Sha256File(b);
  const auto data = ReadDatasetFile(a);
  std::array<std::size_t, kNumClassLabels> counts{};
  std::set<std::string> train_text, eval_text;
  for (const auto& c : data) {
    ++counts[static_cast<std::size_t>(c.class_label)];
    for (const auto& t : c.turns) {
      (c.split == Split::kTrain ? train_text : eval_text).insert(t.target);
    }
  }
  std::size_t shared = 0;
  for (const auto& t : eval_text) shared += train_text.count(t);
  std::size_t bank_overlap = 0;
  for (const auto& issue : CheckTemplateBank(DefaultGraph(), DefaultLexicon(),
                                             DefaultTemplates(),
                                             &DefaultParaphrases())) {
    bank_overlap += issue.message.find("both train and eval") != std::string::npos;
  }
  auto n = [&](ClassLabel c) { return counts[static_cast<std::size_t>(c)]; };
  const bool class_ok = n(ClassLabel::kBloodContamination) == 10083 &&
                        n(ClassLabel::kParticleContamination) == 3510 &&
                        n(ClassLabel::kAML) == 1531 && n(ClassLabel::kMM) == 932 &&
                        n(ClassLabel::kHealthy) == 284;
  const bool pass = data.size() == 16340 && class_ok && same && shared == 0 &&
                    bank_overlap == 0;
  return {pass,
          Fmt("%zu conversations (BloodContamination %zu, ParticleContamination "
              "%zu, AML %zu, MM %zu, Healthy %zu); identical hash: %s; "
              "%zu answer texts shared across splits",
              data.size(), n(ClassLabel::kBloodContamination),
              n(ClassLabel::kParticleContamination), n(ClassLabel::kAML),
              n(ClassLabel::kMM), n(ClassLabel::kHealthy), same ? "yes" : "no",
              shared)};
}

// Regex for a wrapper with each [slot] matching any text.
std::regex ShapeOf(std::string wrapper) {
  std::string out;
  static const std::regex special(R"([.^$|()\\*+?{}])");
  std::size_t i = 0;
  while (i < wrapper.size()) {
    if (wrapper[i] == '[') {
      const std::size_t close = wrapper.find(']', i);
      out += "(.+)";
      i = close + 1;
      continue;
    }
    out += std::regex_replace(std::string(1, wrapper[i]), special, R"(\$&)");
    ++i;
  }
  return std::regex(out);
}

Outcome ScenarioContracts() {
  auto [train, heldout] = BalancedSplit(
      DefaultGraph(), 40, AllClasses(), 8,
      {{Scenario::kDF, 1}, {Scenario::kII, 1}, {Scenario::kCQ_W, 1},
       {Scenario::kRQ_W, 1}});
  std::vector<Conversation> data = train;
  data.insert(data.end(), heldout.begin(), heldout.end());
  std::size_t df = 0, ii = 0, cq = 0, rq = 0, bad = 0;
  const auto& bank = DefaultTemplates();
  for (const auto& c : data) {
    const Label target_dx = c.target_path[Ordinal(Step::kDiagnosis)];
    switch (c.scenario) {
      case Scenario::kDF:
        ++df;
        bad += c.turns.empty() || c.turns[0].step != Step::kDiagnosis;
        break;
      case Scenario::kII:
        ++ii;
        for (const auto& t : c.turns) bad += Ordinal(t.step) >= kNumSteps;
        break;
      case Scenario::kCQ_W:
      case Scenario::kRQ_W: {
        const bool is_cq = c.scenario == Scenario::kCQ_W;
        (is_cq ? cq : rq) += 1;
        if (!c.hypothesis || *c.hypothesis == target_dx) {
          ++bad;
          break;
        }
        const Turn* dx = nullptr;
        for (const auto& t : c.turns) {
          if (t.step == Step::kDiagnosis) dx = &t;
        }
        if (dx == nullptr) {
          ++bad;
          break;
        }
        const std::string wrapper = bank.hypothesis(is_cq ? "CQ_W" : "RQ_W");
        std::smatch m;
        if (!std::regex_match(dx->prompt, m, ShapeOf(wrapper))) {
          ++bad;
          break;
        }
        const std::string filler = m[1].str();
        const auto& pool = is_cq ? bank.statements(*c.hypothesis)
                                 : bank.rationales(*c.hypothesis);
        bool found = false;
        for (Split s : {Split::kTrain, Split::kEval}) {
          for (const auto& x : pool.of(s)) found |= x == filler;
        }
        bad += !found;
        break;
      }
      default:
        break;
    }
  }
  return {bad == 0 && df > 0 && ii > 0 && cq > 0 && rq > 0,
          Fmt("DF %zu, II %zu, CQ_W %zu, RQ_W %zu conversations; %zu violations",
              df, ii, cq, rq, bad)};
}

Outcome GradientOracle() {
  const std::vector<ClassLabel> labels = {ClassLabel::kAML, ClassLabel::kHealthy};
  auto [train, heldout] = BalancedSplit(testing::TinyGraph(), 5, labels, 12);
  const std::vector<Conversation> sample(train.begin(), train.begin() + 4);
  const SimEnvironment env(testing::TinyGraph(), DefaultTemplates(),
                           RewardConfig{}, 0.3, labels);
  PolicyTable p(testing::TinyGraph());
  Rng rng(21);
  for (double& z : p.raw()) z = rng.Uniform() * 2.0 - 1.0;
  const auto start = Clock::now();
  const auto fd = EstimateGradientFd(p, env, sample, 1e-4);
  const auto sf = EstimateGradientScoreFunction(p, env, sample, kGradientSamples, 77);
  const double elapsed = Seconds(start);
  std::size_t significant = 0, bad = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    if (std::abs(fd[i]) <= kGradientSignificance) continue;
    ++significant;
    const double rel = std::abs(sf[i] - fd[i]) / std::abs(fd[i]);
    worst = std::max(worst, rel);
    bad += rel > kGradientRelTolerance;
  }
  return {bad == 0 && significant > 0 && elapsed < kGradientSeconds,
          Fmt("%zu coordinates with |g| > %.2f, worst relative error %.2f%% <= "
              "%.0f%%, %zu samples, %.1fs < %.0fs",
              significant, kGradientSignificance, 100 * worst,
              100 * kGradientRelTolerance, kGradientSamples, elapsed,
              kGradientSeconds)};
}

Outcome LambdaSweep() {
  const SimEnvironment env(DefaultGraph(), DefaultTemplates(), RewardConfig{},
                           0.3, LabelsOf(Sim().train));
  const std::vector<double> grid = {0, 0.25, 0.5, 1, 2, 8};
  const auto start = Clock::now();
  const SweepResult r = SweepLambda(env, Sim().train, Sim().heldout, grid, kSeeds,
                                    SftConfig{}, TrainConfig{});
  const double elapsed = Seconds(start);
  std::map<double, PolicyMetrics> m;
  for (const auto& row : r.medians) m[row.lambda] = row.metrics;
  const double drop = 1.0 - m[1].h_cc / m[0].h_cc;
  std::string curve;
  for (const auto& row : r.medians) {
    curve += Fmt(" %g:%.3f/%.3f", row.lambda, row.metrics.a_q, row.metrics.h_cc);
  }
  return {drop >= kSweepHccDrop && m[8].a_q < m[0.5].a_q &&
              elapsed < kSweepSeconds,
          Fmt("H_cc(1) %.3f vs H_cc(0) %.3f, drop %.0f%% >= %.0f%%; A_Q(8) %.3f "
              "< A_Q(0.5) %.3f; %.0fs < %.0fs; lambda:A_Q/H_cc%s",
              m[1].h_cc, m[0].h_cc, 100 * drop, 100 * kSweepHccDrop, m[8].a_q,
              m[0.5].a_q, elapsed, kSweepSeconds, curve.c_str())};
}

Outcome SftToRl() {
  const auto start = Clock::now();
  int improved = 0;
  std::string detail;
  for (std::uint64_t seed : kSeeds) {
    const SimRun r = TrainOnce(RewardConfig{}, TrainConfig{}.beta, seed);
    improved += r.rl.reward >= r.sft.reward;
    detail += Fmt(" seed %llu: %.3f -> %.3f;", static_cast<unsigned long long>(seed),
                  r.sft.reward, r.rl.reward);
  }
  const double elapsed = Seconds(start);
  return {improved == 3 && elapsed < kSftRlSeconds,
          Fmt("held-out reward SFT -> RL improved in %d/3 seeds (%.0fs < %.0fs);",
              improved, elapsed, kSftRlSeconds) + detail};
}

Outcome KlMonotonicity() {
  const std::vector<double> betas = {0.0, 0.1, 1.0, 10.0};
  std::vector<double> medians;
  for (double beta : betas) {
    std::vector<double> kls;
    for (std::uint64_t seed : kSeeds) {
      kls.push_back(TrainOnce(RewardConfig{}, beta, seed).rl.kl);
    }
    medians.push_back(Median(kls));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < medians.size(); ++i) {
    monotone &= medians[i] <= medians[i - 1];
  }
  const bool default_beta = TrainConfig{}.beta == 0.1;
  return {monotone && default_beta,
          Fmt("median KL at beta 0/0.1/1/10: %.4f %.4f %.4f %.4f; default beta "
              "%.1f",
              medians[0], medians[1], medians[2], medians[3], TrainConfig{}.beta)};
}

Outcome ServiceEquivalence() {
  ServiceOptions options;
  options.config_dir = testing::ConfigDir();
  const ScoringService service(options);
  httplib::Server server;
  service.Register(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  struct Stop {
    httplib::Server& s;
    std::thread& t;
    ~Stop() {
      s.stop();
      t.join();
    }
  } stop{server, thread};

  std::mt19937_64 rng(512);
  json convs = json::array();
  std::vector<std::vector<RewardTurn>> direct;
  for (int i = 0; i < 512; ++i) {
    const Path& target =
        DefaultGraph().concrete_paths()[rng() % DefaultGraph().concrete_paths().size()];
    json turns = json::array();
    std::vector<RewardTurn> d;
    for (Step s : kAllSteps) {
      const auto cats = StepCategories(s);
      const Label pred = rng() % 3 ? target[Ordinal(s)] : cats[rng() % cats.size()];
      const std::string p = AnswerFor(rng, s, pred);
      const std::string t = AnswerFor(rng, s, target[Ordinal(s)]);
      turns.push_back({{"step", StepName(s)}, {"prediction", p}, {"target", t}});
      d.push_back({s, p, t, std::nullopt});
    }
    convs.push_back({{"id", i}, {"turns", turns}});
    direct.push_back(std::move(d));
  }
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(60, 0);
  auto res = client.Post("/v1/score", json{{"conversations", convs}}.dump(),
                         "application/json");
  if (!res || res->status != 200) return {false, "score request failed"};
  const json body = json::parse(res->body);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < 512; ++i) {
    const json& item = body.at("results").at(i);
    const RewardBreakdown b =
        ComputeReward(DefaultGraph(), DefaultLexicon(), direct[i], RewardConfig{});
    const json& got = item.at("breakdown");
    mismatches += item.at("id") != static_cast<int>(i);
    mismatches += got.at("total").get<double>() != b.total;
    mismatches += got.at("correctness").get<double>() != b.correctness;
    mismatches += got.at("consistency").get<double>() != b.consistency;
    mismatches += got.at("length_penalty").get<double>() != b.length_penalty;
    mismatches += got.at("nomatch_penalty").get<double>() != b.nomatch_penalty;
  }

  json mixed = json::array({convs[0], convs[1], convs[2]});
  mixed[1]["turns"].erase(3);
  res = client.Post("/v1/score", json{{"conversations", mixed}}.dump(),
                    "application/json");
  if (!res || res->status != 200) return {false, "mixed batch failed"};
  const json m = json::parse(res->body).at("results");
  const bool partial = m.size() == 3 && m[0].at("status") == 200 &&
                       m[1].at("status") == 422 && m[2].at("status") == 200;
  return {mismatches == 0 && partial,
          Fmt("512 conversations, %zu bitwise mismatches; malformed item -> "
              "per-item 422 with the batch scored: %s",
              mismatches, partial ? "yes" : "no")};
}

}  // namespace
}  // namespace symreward

int main() {
  using namespace symreward;
  Criterion("classifier-golden-suite", ClassifierGolden);
  Criterion("template-round-trip", TemplateRoundTrip);
  Criterion("path-brute-force", PathBruteForce);
  Criterion("reward-decomposition", RewardDecomposition);
  Criterion("ablation-arithmetic", AblationArithmetic);
  Criterion("metrics-invariants", MetricsInvariants);
  Criterion("dataset-reproduction", DatasetReproduction);
  Criterion("scenario-contracts", ScenarioContracts);
  Criterion("gradient-oracle", GradientOracle);
  Criterion("lambda-sweep-direction", LambdaSweep);
  Criterion("sft-to-rl-direction", SftToRl);
  Criterion("kl-monotonicity", KlMonotonicity);
  Criterion("service-equivalence", ServiceEquivalence);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
