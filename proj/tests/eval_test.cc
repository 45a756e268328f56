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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "symreward/errors.h"
#include "symreward/eval.h"
#include "symreward/synthesizer.h"
#include "test_support.h"

namespace symreward {
namespace {

using testing::DefaultGraph;
using testing::DefaultLexicon;
using testing::DefaultTemplates;

const std::string kDistractor = "The picture resembles a lung sample.";

std::vector<Conversation> MakeDataset(std::size_t per_class,
                                      const std::string& mix,
                                      std::uint64_t seed) {
  DatasetOptions opts;
  opts.counts.fill(per_class);
  opts.seed = seed;
  opts.scenario_mix = ParseScenarioMix(mix);
  SynthesisContext ctx{DefaultGraph(), DefaultTemplates(), nullptr};
  return SynthesizeDataset(ctx, opts).conversations;
}

EvalOptions Opts(std::string hash = "h") {
  EvalOptions o;
  o.dataset_hash = std::move(hash);
  return o;
}

// A prediction that is correct, wrong-but-valid-category, or NoMatch.
std::string RandomAnswer(std::mt19937_64& rng, Step step,
                         const std::string& target) {
  switch (rng() % 3) {
    case 0:
      return target;
    case 1: {
      const auto cats = StepCategories(step);
      const Label l = cats[rng() % (cats.size() - 1)];  // skip NoMatch
      const auto& pool = DefaultTemplates().answers(step, l).train;
      return pool.empty() ? kDistractor : pool[rng() % pool.size()];
    }
    default:
      return kDistractor;
  }
}

TEST_CASE("perfect predictions") {
  const auto data =
      MakeDataset(6, "SI=1,DF=1,II=1,CQ_R=1,CQ_W=1,RQ_R=1,RQ_W=1", 3);
  const auto preds = PredictionsFromTargets(data, "oracle");
  const auto r = Evaluate(DefaultGraph(), DefaultLexicon(), data, preds, Opts());
  CHECK(r.overall.a_q() == 1.0);
  CHECK(r.overall.a_c() == 1.0);
  CHECK(r.overall.a_d() == 1.0);
  CHECK(r.overall.h_cc() == 0.0);
  CHECK(r.overall.n_conversations == 30);
  CHECK(r.model_name == "oracle");
  for (const auto& [name, c] : r.per_scenario) {
    CHECK(c.h_cc() == 0.0);
    CHECK(c.a_c() == 1.0);
  }
}

TEST_CASE("direct ratios on a hand-built set") {
  auto data = MakeDataset(2, "SI=1", 1);  // 10 SI conversations
  REQUIRE(data.size() == 10);
  auto preds = PredictionsFromTargets(data, "m");
  // Conversation 7: wrong diagnosis only.
  preds[7].turns[4].second = kDistractor;
  // Conversation 8: two misses, diagnosis right.
  preds[8].turns[0].second = kDistractor;
  preds[8].turns[2].second = kDistractor;
  // Conversation 9: one miss.
  preds[9].turns[1].second = kDistractor;
  const auto r = Evaluate(DefaultGraph(), DefaultLexicon(), data, preds, Opts());
  CHECK(r.overall.n_questions == 50);
  CHECK(r.overall.n_correct == 46);
  CHECK(r.overall.a_q() == doctest::Approx(0.92).epsilon(1e-12));
  CHECK(r.overall.a_c() == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(r.overall.a_d() == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(r.overall.h_cc() == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("all NoMatch predictions") {
  const auto data = MakeDataset(3, "SI=1,DF=1", 8);
  auto preds = PredictionsFromTargets(data, "m");
  for (auto& p : preds) {
    for (auto& t : p.turns) t.second = kDistractor;
  }
  const auto r = Evaluate(DefaultGraph(), DefaultLexicon(), data, preds, Opts());
  CHECK(r.overall.a_q() == 0.0);
  CHECK(r.overall.a_c() == 0.0);
  CHECK(r.overall.a_d() == 0.0);
  CHECK(r.overall.h_cc() == 1.0);
}

TEST_CASE("random prediction sets keep the metric invariants") {
  const auto data =
      MakeDataset(8, "SI=2,DF=1,II=1,CQ_R=1,CQ_W=1,RQ_R=1,RQ_W=1", 17);
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 100; ++trial) {
    auto preds = PredictionsFromTargets(data, "random");
    for (std::size_t i = 0; i < preds.size(); ++i) {
      for (std::size_t t = 0; t < preds[i].turns.size(); ++t) {
        preds[i].turns[t].second =
            RandomAnswer(rng, preds[i].turns[t].first, data[i].turns[t].target);
      }
    }
    const auto r =
        Evaluate(DefaultGraph(), DefaultLexicon(), data, preds, Opts());
    const auto& o = r.overall;
    CHECK(o.a_c() <= o.a_q());
    CHECK(o.a_c() <= o.a_d());
    for (double m : {o.a_q(), o.a_c(), o.a_d(), o.h_cc()}) {
      CHECK(m >= 0.0);
      CHECK(m <= 1.0);
    }

    // Slices recombine into the overall metrics.
    double wq = 0, wc = 0, wd = 0, wh = 0;
    std::size_t turns = 0, convs = 0;
    for (const auto& [name, c] : r.per_scenario) {
      CHECK(c.a_c() <= c.a_q());
      CHECK(c.a_c() <= c.a_d());
      wq += c.a_q() * c.n_questions;
      wc += c.a_c() * c.n_conversations;
      wd += c.a_d() * c.n_conversations;
      wh += c.h_cc() * c.n_conversations;
      turns += c.n_questions;
      convs += c.n_conversations;
    }
    CHECK(turns == o.n_questions);
    CHECK(convs == o.n_conversations);
    CHECK(std::abs(wq / turns - o.a_q()) < 1e-12);
    CHECK(std::abs(wc / convs - o.a_c()) < 1e-12);
    CHECK(std::abs(wd / convs - o.a_d()) < 1e-12);
    CHECK(std::abs(wh / convs - o.h_cc()) < 1e-12);

    // Record order does not matter, nor does the execution mode.
    if (trial % 10 == 0) {
      auto shuffled = preds;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      EvalOptions serial = Opts();
      serial.execution = Execution::kSerial;
      const auto r2 = Evaluate(DefaultGraph(), DefaultLexicon(), data,
                               shuffled, serial);
      CHECK(ReportToJson(r2).dump() == ReportToJson(r).dump());
    }
  }
}

TEST_CASE("II conversations are judged on answered steps") {
  const auto data = MakeDataset(20, "II=1", 5);
  const auto preds = PredictionsFromTargets(data, "m");
  const auto r = Evaluate(DefaultGraph(), DefaultLexicon(), data, preds, Opts());
  CHECK(r.overall.h_cc() == 0.0);
  CHECK(r.overall.a_d() == 1.0);

  // Find one without a Diagnosis turn and spoil a different turn.
  for (std::size_t i = 0; i < data.size(); ++i) {
    const bool has_dx =
        std::any_of(data[i].turns.begin(), data[i].turns.end(),
                    [](const Turn& t) { return t.step == Step::kDiagnosis; });
    if (has_dx) continue;
    std::vector<Conversation> one{data[i]};
    auto p = PredictionsFromTargets(one, "m");
    for (auto& t : p[0].turns) {
      if (t.first == p[0].turns[0].first) t.second = kDistractor;
    }
    const auto r1 = Evaluate(DefaultGraph(), DefaultLexicon(), one, p, Opts());
    CHECK(r1.overall.a_d() == 1.0);
    CHECK(r1.overall.a_c() == 0.0);
    CHECK(r1.overall.h_cc() == 1.0);
    return;
  }
  FAIL("no II conversation without a Diagnosis turn");
}

TEST_CASE("duplicate steps use the latest answer") {
  const auto data = MakeDataset(30, "II=1", 9);
  for (const auto& c : data) {
    std::vector<std::size_t> dx;
    for (std::size_t t = 0; t < c.turns.size(); ++t) {
      if (c.turns[t].step == Step::kDiagnosis) dx.push_back(t);
    }
    if (dx.size() < 2) continue;
    std::vector<Conversation> one{c};
    auto p = PredictionsFromTargets(one, "m");
    p[0].turns[dx.front()].second = kDistractor;  // early answer wrong
    auto r = Evaluate(DefaultGraph(), DefaultLexicon(), one, p, Opts());
    CHECK(r.overall.a_d() == 1.0);
    CHECK(r.overall.h_cc() == 0.0);
    CHECK(r.overall.a_c() == 0.0);
    p = PredictionsFromTargets(one, "m");
    p[0].turns[dx.back()].second = kDistractor;  // latest answer wrong
    r = Evaluate(DefaultGraph(), DefaultLexicon(), one, p, Opts());
    CHECK(r.overall.a_d() == 0.0);
    CHECK(r.overall.h_cc() == 1.0);
    return;
  }
  FAIL("no II conversation with a repeated Diagnosis turn");
}

TEST_CASE("join errors") {
  const auto data = MakeDataset(1, "SI=1", 2);
  auto preds = PredictionsFromTargets(data, "m");

  auto orphan = preds;
  orphan[0].image_id = "nope";
  CHECK_THROWS_AS(Evaluate(DefaultGraph(), DefaultLexicon(), data, orphan, Opts()),
                  JoinError);
  auto missing = preds;
  missing.pop_back();
  CHECK_THROWS_AS(Evaluate(DefaultGraph(), DefaultLexicon(), data, missing, Opts()),
                  JoinError);
  auto dup = preds;
  dup.push_back(dup[0]);
  CHECK_THROWS_AS(Evaluate(DefaultGraph(), DefaultLexicon(), data, dup, Opts()),
                  JoinError);
  auto wrong_scenario = preds;
  wrong_scenario[0].scenario = Scenario::kDF;
  CHECK_THROWS_AS(
      Evaluate(DefaultGraph(), DefaultLexicon(), data, wrong_scenario, Opts()),
      JoinError);
  auto swapped = preds;
  std::swap(swapped[0].turns[0].first, swapped[0].turns[1].first);
  CHECK_THROWS_AS(Evaluate(DefaultGraph(), DefaultLexicon(), data, swapped, Opts()),
                  JoinError);
  auto short_turns = preds;
  short_turns[0].turns.pop_back();
  CHECK_THROWS_AS(
      Evaluate(DefaultGraph(), DefaultLexicon(), data, short_turns, Opts()),
      JoinError);
}

TEST_CASE("reward means") {
  const auto data = MakeDataset(4, "SI=1,DF=1,CQ_W=1", 4);
  const auto preds = PredictionsFromTargets(data, "m");
  EvalOptions o = Opts();
  o.reward = RewardConfig{};
  const auto r = Evaluate(DefaultGraph(), DefaultLexicon(), data, preds, o);
  REQUIRE(r.reward_means);
  CHECK(r.reward_means->total == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(r.reward_means->length_penalty == 0.0);
}

TEST_CASE("report comparison") {
  MetricsReport a, b;
  a.dataset_hash = b.dataset_hash = "abc";
  a.overall.n_conversations = b.overall.n_conversations = 1000;
  a.overall.n_all_correct = 476;
  b.overall.n_all_correct = 700;
  const auto deltas = CompareReports(a, b);
  const auto it = std::find_if(deltas.begin(), deltas.end(), [](const auto& d) {
    return d.scope == "all" && d.metric == "a_c";
  });
  REQUIRE(it != deltas.end());
  CHECK(it->delta_points == doctest::Approx(22.4).epsilon(1e-12));

  for (const auto& d : CompareReports(a, a)) CHECK(d.delta_points == 0.0);

  b.dataset_hash = "other";
  CHECK_THROWS_AS(CompareReports(a, b), DatasetMismatch);
}

TEST_CASE("report serialization") {
  const auto data = MakeDataset(2, "SI=1,II=1", 6);
  const auto preds = PredictionsFromTargets(data, "m");
  EvalOptions o = Opts("deadbeef");
  o.reward = RewardConfig{};
  const auto r = Evaluate(DefaultGraph(), DefaultLexicon(), data, preds, o);
  const auto j = ReportToJson(r);
  CHECK(ReportToJson(ReportFromJson(j)).dump() == j.dump());
  CHECK(j["dataset_hash"] == "deadbeef");
  CHECK(j["graph_hash"] == DefaultGraph().content_hash());
  const std::string csv = ReportToCsv(r);
  CHECK(csv.rfind("scope,n_questions,n_conversations,a_q,a_c,a_d,h_cc", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 1 + r.per_scenario.size());

  const auto back = ParsePredictionsJsonl(
      "{\"meta\": {\"x\": 1}}\n" + PredictionToJson(preds[0]).dump() + "\n");
  REQUIRE(back.size() == 1);
  CHECK(PredictionToJson(back[0]).dump() == PredictionToJson(preds[0]).dump());
  CHECK_THROWS_AS(ParsePredictionsJsonl("{\"image_id\": \"x\"}\n"), ParseError);
}

}  // namespace
}  // namespace symreward
