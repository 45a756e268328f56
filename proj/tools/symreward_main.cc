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

// symreward command-line entry point.
//
// Exit codes: 0 success, 1 validation failure, 2 I/O or usage error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "symreward/batch.h"
#include "symreward/classifier.h"
#include "symreward/errors.h"
#include "symreward/eval.h"
#include "symreward/graph.h"
#include "symreward/hashing.h"
#include "symreward/io.h"
#include "symreward/json_io.h"
#include "symreward/paraphraser.h"
#include "symreward/policy_sim.h"
#include "symreward/reward.h"
#include "symreward/service.h"
#include "symreward/synthesizer.h"
#include "symreward/templates.h"
#include "symreward/version.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace symreward {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitIo = 2;

// Usage problems found after parsing, e.g. conflicting flags.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GlobalFlags {
  std::string config_dir;
  std::string run_config;
  std::string graph, lexicon, templates, paraphrases;
  bool serial = false;
};

// Paths and defaults after merging --run-config with explicit flags.
struct RunConfig {
  fs::path graph, lexicon, templates, paraphrases;
  std::optional<std::uint64_t> seed;
  json reward = json::object();
  Execution execution = Execution::kParallel;
};

RunConfig ResolveRunConfig(const GlobalFlags& flags) {
  fs::path dir = flags.config_dir;
  if (dir.empty()) {
    const char* env = std::getenv("SYMREWARD_CONFIG_DIR");
    dir = env ? fs::path(env) : fs::path("config");
  }
  const std::string id(kDefaultConfigId);
  RunConfig rc{dir / "graphs" / (id + ".json"),
               dir / "lexicons" / (id + ".json"),
               dir / "templates" / (id + ".json"),
               dir / "paraphrases" / (id + ".json"),
               std::nullopt, json::object(), Execution::kParallel};
  if (!flags.run_config.empty()) {
    json j;
    try {
      j = json::parse(ReadTextFile(flags.run_config));
    } catch (const json::exception& e) {
      throw ParseError("run config: " + std::string(e.what()));
    }
    if (!j.is_object()) throw SchemaError("run config must be an object");
    const fs::path base = fs::path(flags.run_config).parent_path();
    auto path = [&](const char* key, fs::path& out) {
      if (!j.contains(key)) return;
      const fs::path p = j.at(key).get<std::string>();
      out = p.is_absolute() ? p : base / p;
    };
    for (const auto& [key, value] : j.items()) {
      static const std::set<std::string> known = {
          "graph", "lexicon", "templates", "paraphrases", "seed", "reward"};
      if (!known.count(key)) throw SchemaError("run config: unknown key '" + key + "'");
    }
    try {
      path("graph", rc.graph);
      path("lexicon", rc.lexicon);
      path("templates", rc.templates);
      path("paraphrases", rc.paraphrases);
      if (j.contains("seed")) rc.seed = j.at("seed").get<std::uint64_t>();
      if (j.contains("reward")) rc.reward = j.at("reward");
    } catch (const json::exception& e) {
      throw SchemaError("run config: " + std::string(e.what()));
    }
  }
  if (!flags.graph.empty()) rc.graph = flags.graph;
  if (!flags.lexicon.empty()) rc.lexicon = flags.lexicon;
  if (!flags.templates.empty()) rc.templates = flags.templates;
  if (!flags.paraphrases.empty()) rc.paraphrases = flags.paraphrases;
  if (flags.serial) rc.execution = Execution::kSerial;
  return rc;
}

// Loaded configs; only the requested ones are read.
struct Configs {
  std::optional<ReasoningGraph> graph;
  std::optional<Lexicon> lexicon;
  std::optional<TemplateBank> templates;
  std::optional<ParaphrasePool> paraphrases;
};

Configs Load(const RunConfig& rc, bool graph, bool lexicon, bool templates,
             bool paraphrases) {
  Configs c;
  if (graph) c.graph = LoadGraphFile(rc.graph);
  if (lexicon) c.lexicon = LoadLexiconFile(rc.lexicon);
  if (templates) c.templates = LoadTemplateBankFile(rc.templates);
  if (paraphrases) c.paraphrases = LoadParaphrasePoolFile(rc.paraphrases);
  return c;
}

std::string Hex(const std::string& s) { return s.substr(0, 12); }

json Meta(const Configs& c) {
  json m = {{"toolkit_version", kToolkitVersion}};
  if (c.graph) m["graph_hash"] = c.graph->content_hash();
  if (c.lexicon) m["lexicon_hash"] = c.lexicon->content_hash();
  if (c.templates) m["templates_hash"] = c.templates->content_hash();
  if (c.paraphrases) m["paraphrases_hash"] = c.paraphrases->content_hash();
  return m;
}

// "# key=value" lines for CSV outputs.
std::string CsvPreamble(const json& meta) {
  std::string out;
  for (const auto& [k, v] : meta.items()) {
    out += "# " + k + "=" + (v.is_string() ? v.get<std::string>() : v.dump()) + "\n";
  }
  return out;
}

std::vector<double> ParseDoubles(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("not a number: '" + item + "'");
    }
  }
  return out;
}

std::vector<std::uint64_t> ParseSeeds(const std::string& list) {
  std::vector<std::uint64_t> out;
  for (double d : ParseDoubles(list)) {
    if (d < 0 || d != static_cast<double>(static_cast<std::uint64_t>(d))) {
      throw UsageError("seeds must be non-negative integers");
    }
    out.push_back(static_cast<std::uint64_t>(d));
  }
  return out;
}

struct RewardFlags {
  bool no_rc = false, no_rs = false, no_rm = false, no_rl = false;
  std::optional<double> lambda;
};

void AddRewardFlags(CLI::App* cmd, RewardFlags& f) {
  cmd->add_flag("--no-rc", f.no_rc, "Disable the correctness term");
  cmd->add_flag("--no-rs", f.no_rs, "Disable the path consistency term");
  cmd->add_flag("--no-rm", f.no_rm, "Disable the NoMatch penalty");
  cmd->add_flag("--no-rl", f.no_rl, "Disable the length penalty");
  cmd->add_option("--lambda", f.lambda, "Consistency bonus weight");
}

RewardConfig BuildReward(const RunConfig& rc, const RewardFlags& f) {
  json overrides = rc.reward;
  if (f.lambda) overrides["lambda"] = *f.lambda;
  if (f.no_rc) overrides["enable_correctness"] = false;
  if (f.no_rs) overrides["enable_consistency"] = false;
  if (f.no_rm) overrides["enable_nomatch"] = false;
  if (f.no_rl) overrides["enable_length"] = false;
  return ApplyRewardOverrides(RewardConfig{}, overrides);
}

struct DatasetInput {
  std::vector<Conversation> conversations;
  std::string hash;
};

// The hash covers the conversation lines only, matching the manifest that
// synth writes.
DatasetInput ReadDataset(const std::string& file) {
  DatasetInput in{ReadDatasetFile(file), {}};
  in.hash = Sha256Hex(DatasetToJsonl(in.conversations));
  return in;
}

std::vector<PredictionRecord> ReadOrSelf(const std::string& file, bool self,
                                         const DatasetInput& data) {
  if (self == !file.empty()) {
    throw UsageError("give exactly one of --predictions or --self");
  }
  if (self) return PredictionsFromTargets(data.conversations, "targets");
  return ReadPredictionsFile(file);
}

// ---------------------------------------------------------------------------

int RunValidate(const RunConfig& rc) {
  int failures = 0;
  std::optional<ReasoningGraph> graph;
  std::optional<Lexicon> lexicon;
  std::optional<TemplateBank> bank;
  std::optional<ParaphrasePool> pool;
  auto attempt = [&](const char* what, const fs::path& file, auto load) {
    try {
      load();
    } catch (const IoError&) {
      throw;
    } catch (const Error& e) {
      std::cout << "FAIL " << what << " " << file.string() << ": " << e.what()
                << "\n";
      ++failures;
    }
  };
  attempt("graph", rc.graph, [&] {
    graph = LoadGraphFile(rc.graph);
    std::cout << "ok   graph " << rc.graph.string() << ": "
              << graph->concrete_paths().size() << " concrete paths (sha256 "
              << Hex(graph->content_hash()) << ")\n";
  });
  attempt("lexicon", rc.lexicon, [&] {
    lexicon = LoadLexiconFile(rc.lexicon);
    std::size_t keywords = 0;
    for (Step s : kAllSteps) {
      for (const auto& rule : lexicon->rules(s)) keywords += rule.keywords.size();
    }
    std::cout << "ok   lexicon " << rc.lexicon.string() << ": " << keywords
              << " keywords (sha256 " << Hex(lexicon->content_hash()) << ")\n";
  });
  attempt("templates", rc.templates, [&] {
    bank = LoadTemplateBankFile(rc.templates);
    std::cout << "ok   templates " << rc.templates.string() << " (sha256 "
              << Hex(bank->content_hash()) << ")\n";
  });
  if (fs::exists(rc.paraphrases)) {
    attempt("paraphrases", rc.paraphrases, [&] {
      pool = LoadParaphrasePoolFile(rc.paraphrases);
      std::cout << "ok   paraphrases " << rc.paraphrases.string() << ": "
                << pool->all().size() << " variants\n";
    });
  }
  if (graph && lexicon && bank) {
    const auto issues =
        CheckTemplateBank(*graph, *lexicon, *bank, pool ? &*pool : nullptr);
    for (const auto& issue : issues) {
      std::cout << "FAIL template (" << StepName(issue.step) << ", "
                << LabelName(issue.category) << ") \"" << issue.text
                << "\": " << issue.message << "\n";
    }
    failures += static_cast<int>(issues.size());
    if (issues.empty()) {
      std::cout << "ok   template round-trip and split disjointness\n";
    }
  }
  std::cout << (failures == 0 ? "valid" : "invalid: " + std::to_string(failures) +
                                              " problem(s)")
            << "\n";
  return failures == 0 ? kExitOk : kExitInvalid;
}

struct SynthFlags {
  std::string counts = "paper-default";
  std::string mix = "SI=1";
  double split = 0.8;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string paraphraser = "none";
  int variants = 1;
};

int RunSynth(const RunConfig& rc, const SynthFlags& f) {
  const bool want_pool = f.paraphraser == "offline";
  const Configs c = Load(rc, true, f.paraphraser != "none", true, want_pool);
  DatasetOptions options;
  options.counts = ParseClassCounts(f.counts);
  options.scenario_mix = ParseScenarioMix(f.mix);
  options.split_fraction = f.split;
  options.seed = f.seed.value_or(rc.seed.value_or(0));
  options.execution = rc.execution;
  std::optional<VariantTable> variants;
  if (f.paraphraser == "offline") {
    OfflinePoolParaphraser p(*c.paraphrases);
    variants = BuildVariantTable(*c.templates, *c.lexicon, p, f.variants);
  } else if (f.paraphraser == "external") {
    auto p = ExternalLlmParaphraser::FromEnvironment();
    variants = BuildVariantTable(*c.templates, *c.lexicon, *p, f.variants);
  }
  const Dataset d = SynthesizeDataset(
      {*c.graph, *c.templates, variants ? &*variants : nullptr}, options);
  json manifest = ManifestToJson(d.manifest);
  manifest["paraphraser"] = f.paraphraser;
  std::string body = json{{"meta", manifest}}.dump() + "\n";
  body += DatasetToJsonl(d.conversations);
  WriteTextFile(f.out, body);
  WriteTextFile(f.out + ".manifest.json", manifest.dump(2) + "\n");
  std::cout << "wrote " << d.manifest.total << " conversations to " << f.out
            << "\n";
  for (std::size_t i = 0; i < kNumClassLabels; ++i) {
    const auto& s = d.manifest.class_split_counts[i];
    std::cout << "  " << ClassLabelName(kAllClassLabels[i]) << ": "
              << s[0] + s[1] << " (train " << s[0] << ", eval " << s[1]
              << ")\n";
  }
  std::cout << "dataset sha256 " << d.manifest.dataset_hash << "\n";
  return kExitOk;
}

struct JoinFlags {
  std::string dataset, predictions, out;
  bool self = false;
};

int RunScore(const RunConfig& rc, const JoinFlags& f, const RewardFlags& rf) {
  const Configs c = Load(rc, true, true, false, false);
  const RewardConfig config = BuildReward(rc, rf);
  const DatasetInput data = ReadDataset(f.dataset);
  const auto predictions = ReadOrSelf(f.predictions, f.self, data);

  std::map<std::pair<std::string, Scenario>, const PredictionRecord*> index;
  for (const auto& p : predictions) {
    if (!index.emplace(std::make_pair(p.image_id, p.scenario), &p).second) {
      throw JoinError("duplicate prediction for " + p.image_id + "/" +
                      std::string(ScenarioName(p.scenario)));
    }
  }
  if (index.size() != data.conversations.size()) {
    throw JoinError(std::to_string(predictions.size()) + " predictions for " +
                    std::to_string(data.conversations.size()) +
                    " conversations");
  }
  std::vector<ScoreItem> items;
  for (const auto& conv : data.conversations) {
    const auto it = index.find({conv.image_id, conv.scenario});
    if (it == index.end()) {
      throw JoinError("no prediction for " + conv.image_id + "/" +
                      std::string(ScenarioName(conv.scenario)));
    }
    const auto& turns = it->second->turns;
    if (turns.size() != conv.turns.size()) {
      throw JoinError("turn count differs for " + conv.image_id);
    }
    ScoreItem item;
    item.coverage = AllowsPartialCoverage(conv.scenario)
                        ? PathCoverage::kPartialAllowed
                        : PathCoverage::kComplete;
    for (std::size_t t = 0; t < turns.size(); ++t) {
      if (turns[t].first != conv.turns[t].step) {
        throw JoinError("step sequence differs for " + conv.image_id);
      }
      item.turns.push_back(
          {conv.turns[t].step, turns[t].second, conv.turns[t].target, std::nullopt});
    }
    items.push_back(std::move(item));
  }
  const auto outcomes =
      ScoreBatch(*c.graph, *c.lexicon, items, config, rc.execution);

  json meta = Meta(c);
  meta["dataset_sha256"] = data.hash;
  if (!f.predictions.empty()) meta["predictions_sha256"] = Sha256File(f.predictions);
  meta["reward_config"] = RewardConfigToJson(config);
  std::string body = json{{"meta", meta}}.dump() + "\n";
  double sum = 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& conv = data.conversations[i];
    json line = {{"image_id", conv.image_id},
                 {"scenario", ScenarioName(conv.scenario)}};
    if (outcomes[i].breakdown) {
      line["breakdown"] = BreakdownToJson(*outcomes[i].breakdown);
      sum += outcomes[i].breakdown->total;
      ++ok;
    } else {
      line["error"] = {{"type", outcomes[i].error_type},
                       {"message", outcomes[i].error}};
    }
    body += line.dump() + "\n";
  }
  WriteTextFile(f.out, body);
  std::printf("scored %zu of %zu conversations, mean total %.6f\n", ok,
              outcomes.size(), ok ? sum / static_cast<double>(ok) : 0.0);
  return ok == outcomes.size() ? kExitOk : kExitInvalid;
}

int RunEval(const RunConfig& rc, const JoinFlags& f, bool with_reward,
            const RewardFlags& rf) {
  const Configs c = Load(rc, true, true, false, false);
  const DatasetInput data = ReadDataset(f.dataset);
  const auto predictions = ReadOrSelf(f.predictions, f.self, data);
  EvalOptions options;
  options.dataset_hash = data.hash;
  options.execution = rc.execution;
  if (with_reward) options.reward = BuildReward(rc, rf);
  const MetricsReport report =
      Evaluate(*c.graph, *c.lexicon, data.conversations, predictions, options);
  WriteTextFile(f.out + ".json", ReportToJson(report).dump(2) + "\n");
  WriteTextFile(f.out + ".csv", ReportToCsv(report));
  std::printf("A_Q %.4f  A_C %.4f  A_D %.4f  H_cc %.4f  (%zu conversations)\n",
              report.overall.a_q(), report.overall.a_c(), report.overall.a_d(),
              report.overall.h_cc(), report.overall.n_conversations);
  return kExitOk;
}

int RunCompare(const std::string& baseline, const std::string& candidate,
               const std::string& out) {
  auto read = [](const std::string& file) {
    try {
      return ReportFromJson(json::parse(ReadTextFile(file)));
    } catch (const json::exception& e) {
      throw ParseError(file + ": " + e.what());
    }
  };
  const auto deltas = CompareReports(read(baseline), read(candidate));
  const std::string csv = DeltasToCsv(deltas);
  if (out.empty()) {
    std::cout << csv;
  } else {
    WriteTextFile(out, csv);
  }
  return kExitOk;
}

struct SimFlags {
  std::string dataset, out;
  double beta = 0.1;
  double epsilon = 0.3;
  int epochs = TrainConfig{}.epochs;
  double learning_rate = TrainConfig{}.learning_rate;
  int batch_size = TrainConfig{}.batch_size;
  int sft_epochs = SftConfig{}.epochs;
  std::optional<std::uint64_t> seed;
  std::string baseline = "running-mean";
  std::string lambdas = "0,0.25,0.5,1,2,8";
  std::string seeds = "1,2,3";
  int eval_rollouts = 8;
};

struct SimInputs {
  Configs configs;
  DatasetInput data;
  std::vector<Conversation> train, heldout;
};

SimInputs LoadSimInputs(const RunConfig& rc, const SimFlags& f) {
  SimInputs in{Load(rc, true, false, true, false), ReadDataset(f.dataset), {}, {}};
  for (const auto& c : in.data.conversations) {
    (c.split == Split::kTrain ? in.train : in.heldout).push_back(c);
  }
  if (in.train.empty()) throw EmptyDataset("dataset has no train split");
  return in;
}

TrainConfig TrainConfigOf(const RunConfig& rc, const SimFlags& f) {
  TrainConfig t;
  t.beta = f.beta;
  t.epochs = f.epochs;
  t.learning_rate = f.learning_rate;
  t.batch_size = f.batch_size;
  t.seed = f.seed.value_or(rc.seed.value_or(0));
  t.execution = rc.execution;
  if (f.baseline == "none") {
    t.baseline = Baseline::kNone;
  } else if (f.baseline != "running-mean") {
    throw UsageError("--baseline must be none or running-mean");
  }
  return t;
}

json MetricsJson(const PolicyMetrics& m) {
  return {{"reward", m.reward}, {"kl", m.kl},   {"a_q", m.a_q},
          {"a_c", m.a_c},       {"a_d", m.a_d}, {"h_cc", m.h_cc}};
}

int RunTrain(const RunConfig& rc, const SimFlags& f, const RewardFlags& rf) {
  const SimInputs in = LoadSimInputs(rc, f);
  const RewardConfig reward = BuildReward(rc, rf);
  const TrainConfig t = TrainConfigOf(rc, f);
  SftConfig s;
  s.epochs = f.sft_epochs;
  s.noise_rate = f.epsilon;
  s.seed = t.seed;
  const SimEnvironment env(*in.configs.graph, *in.configs.templates, reward,
                           f.epsilon, LabelsOf(in.train));
  const PolicyTable sft = PretrainSft(*in.configs.graph, in.train, s);
  const TrainTrace trace = TrainRl(sft, env, in.train, in.heldout, t);
  const auto eval_set = in.heldout.empty() ? in.train : in.heldout;
  const std::uint64_t eval_seed = MixSeed(t.seed, 0xE7A1);
  const PolicyMetrics before =
      EvaluatePolicy(sft, sft, env, eval_set, f.eval_rollouts, eval_seed, rc.execution);
  const PolicyMetrics after = EvaluatePolicy(trace.policy, sft, env, eval_set,
                                             f.eval_rollouts, eval_seed, rc.execution);

  json meta = Meta(in.configs);
  meta["dataset_sha256"] = in.data.hash;
  meta["reward_config"] = RewardConfigToJson(reward);
  meta["train_config"] = {{"beta", t.beta},
                          {"learning_rate", t.learning_rate},
                          {"epochs", t.epochs},
                          {"batch_size", t.batch_size},
                          {"seed", t.seed},
                          {"noise_rate", f.epsilon},
                          {"sft_epochs", s.epochs},
                          {"baseline", f.baseline}};
  fs::create_directories(f.out);
  const fs::path out = f.out;
  WriteTextFile(out / "trace.csv", CsvPreamble(meta) + TraceToCsv(trace));
  json policy = PolicyToJson(trace.policy);
  policy["meta"] = meta;
  WriteTextFile(out / "policy.json", policy.dump() + "\n");
  json ref = PolicyToJson(sft);
  ref["meta"] = meta;
  WriteTextFile(out / "sft_policy.json", ref.dump() + "\n");
  json summary = {{"meta", meta},
                  {"sft", MetricsJson(before)},
                  {"rl", MetricsJson(after)}};
  WriteTextFile(out / "summary.json", summary.dump(2) + "\n");
  std::printf("held-out     reward    A_Q     H_cc    KL\n");
  std::printf("  sft      %8.4f  %.4f  %.4f  %.4f\n", before.reward, before.a_q,
              before.h_cc, before.kl);
  std::printf("  rl       %8.4f  %.4f  %.4f  %.4f\n", after.reward, after.a_q,
              after.h_cc, after.kl);
  return kExitOk;
}

int RunSweep(const RunConfig& rc, const SimFlags& f, const RewardFlags& rf) {
  const SimInputs in = LoadSimInputs(rc, f);
  const RewardConfig reward = BuildReward(rc, rf);
  const TrainConfig t = TrainConfigOf(rc, f);
  SftConfig s;
  s.epochs = f.sft_epochs;
  s.noise_rate = f.epsilon;
  const std::vector<double> lambdas = ParseDoubles(f.lambdas);
  const std::vector<std::uint64_t> seeds = ParseSeeds(f.seeds);
  const SimEnvironment env(*in.configs.graph, *in.configs.templates, reward,
                           f.epsilon, LabelsOf(in.train));
  const SweepResult result =
      SweepLambda(env, in.train, in.heldout, lambdas, seeds, s, t);
  json meta = Meta(in.configs);
  meta["dataset_sha256"] = in.data.hash;
  meta["reward_config"] = RewardConfigToJson(reward);
  meta["beta"] = t.beta;
  meta["noise_rate"] = f.epsilon;
  meta["epochs"] = t.epochs;
  fs::create_directories(f.out);
  const fs::path out = f.out;
  WriteTextFile(out / "sweep.csv", CsvPreamble(meta) + SweepToCsv(result));
  json rows = json::array();
  for (const auto& r : result.medians) {
    json row = MetricsJson(r.metrics);
    row["lambda"] = r.lambda;
    rows.push_back(row);
  }
  WriteTextFile(out / "sweep.json",
                json{{"meta", meta}, {"medians", rows}}.dump(2) + "\n");
  std::printf("lambda     A_Q     H_cc    reward   KL   (median of %zu seeds)\n",
              seeds.size());
  for (const auto& r : result.medians) {
    std::printf("%6g  %.4f  %.4f  %7.4f  %.4f\n", r.lambda, r.metrics.a_q,
                r.metrics.h_cc, r.metrics.reward, r.metrics.kl);
  }
  return kExitOk;
}

int RunServe(const GlobalFlags& g, const std::string& host, int port,
             std::size_t max_batch) {
  ServiceOptions o;
  const char* env = std::getenv("SYMREWARD_CONFIG_DIR");
  o.config_dir = !g.config_dir.empty() ? fs::path(g.config_dir)
                 : env                ? fs::path(env)
                                      : fs::path("config");
  o.max_batch = max_batch;
  o.auth_token = AuthTokenFromEnvironment();
  if (g.serial) o.execution = Execution::kSerial;
  const ScoringService service(o);
  std::cout << "symreward " << kToolkitVersion << " serving "
            << service.graphs().size() << " graph(s), "
            << service.lexicons().size() << " lexicon(s) on " << host << ":"
            << port << std::endl;
  if (!Serve(service, host, port)) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  return kExitOk;
}

int Main(int argc, char** argv) {
  CLI::App app{"Symbolic reward toolkit for clinical reasoning conversations",
               "symreward"};
  app.set_version_flag("--version", std::string(kToolkitVersion));
  app.require_subcommand(1);
  app.fallthrough();
  GlobalFlags g;
  app.add_option("--config-dir", g.config_dir,
                 "Directory with graphs/, lexicons/, templates/, paraphrases/");
  app.add_option("--run-config", g.run_config,
                 "JSON file with config paths, seed and reward overrides");
  app.add_option("--graph", g.graph, "Graph config file");
  app.add_option("--lexicon", g.lexicon, "Lexicon config file");
  app.add_option("--templates", g.templates, "Template bank file");
  app.add_option("--paraphrases", g.paraphrases, "Offline paraphrase pool");
  app.add_flag("--serial", g.serial, "Use the serial reference kernels");

  auto* validate = app.add_subcommand("validate", "Check all configs");

  SynthFlags sf;
  auto* synth = app.add_subcommand("synth", "Synthesize a conversation dataset");
  synth->add_option("--counts", sf.counts,
                    "paper-default or Class=n,... (e.g. Healthy=2)");
  synth->add_option("--scenario-mix", sf.mix, "Scenario weights, e.g. SI=1,DF=1");
  synth->add_option("--split", sf.split, "Train fraction per class")
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--seed", sf.seed, "Seed");
  synth->add_option("--out", sf.out, "Output JSONL file")->required();
  synth->add_option("--paraphraser", sf.paraphraser, "none, offline or external")
      ->check(CLI::IsMember({"none", "offline", "external"}));
  synth->add_option("--variants", sf.variants, "Paraphrases per template")
      ->check(CLI::PositiveNumber);

  JoinFlags jf;
  RewardFlags rf;
  auto* score = app.add_subcommand("score", "Score predictions with the reward");
  score->add_option("--dataset", jf.dataset, "Dataset JSONL")->required();
  score->add_option("--predictions", jf.predictions, "Predictions JSONL");
  score->add_flag("--self", jf.self, "Score the targets as predictions");
  score->add_option("--out", jf.out, "Output JSONL")->required();
  AddRewardFlags(score, rf);

  bool with_reward = false;
  auto* eval = app.add_subcommand("eval", "Compute A_Q, A_C, A_D and H_cc");
  eval->add_option("--dataset", jf.dataset, "Dataset JSONL")->required();
  eval->add_option("--predictions", jf.predictions, "Predictions JSONL");
  eval->add_flag("--self", jf.self, "Evaluate the targets as predictions");
  eval->add_option("--out", jf.out, "Output prefix (.json and .csv)")->required();
  eval->add_flag("--with-reward", with_reward, "Also average reward components");
  AddRewardFlags(eval, rf);

  std::string baseline, candidate, compare_out;
  auto* compare = app.add_subcommand("compare", "Metric deltas of two reports");
  compare->add_option("--baseline", baseline, "Baseline report JSON")->required();
  compare->add_option("--candidate", candidate, "Candidate report JSON")->required();
  compare->add_option("--out", compare_out, "Output CSV (default stdout)");

  SimFlags sim;
  auto add_sim = [&](CLI::App* cmd) {
    cmd->add_option("--dataset", sim.dataset, "Dataset JSONL")->required();
    cmd->add_option("--out", sim.out, "Output directory")->required();
    cmd->add_option("--beta", sim.beta, "KL coefficient")->check(CLI::NonNegativeNumber);
    cmd->add_option("--epsilon", sim.epsilon, "Observation noise rate")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--epochs", sim.epochs, "Policy-gradient epochs")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--lr", sim.learning_rate, "Policy-gradient step size")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--batch-size", sim.batch_size, "Episodes per epoch")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--sft-epochs", sim.sft_epochs, "Pretraining epochs")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--baseline", sim.baseline, "none or running-mean");
    AddRewardFlags(cmd, rf);
  };
  auto* train = app.add_subcommand("train", "Pretrain and tune a toy policy");
  add_sim(train);
  train->add_option("--seed", sim.seed, "Seed");
  train->add_option("--eval-rollouts", sim.eval_rollouts,
                    "Held-out rollouts per record")->check(CLI::PositiveNumber);
  auto* sweep = app.add_subcommand("sweep", "Sweep the consistency weight");
  add_sim(sweep);
  sweep->add_option("--lambdas", sim.lambdas, "Comma-separated lambda grid");
  sweep->add_option("--seeds", sim.seeds, "Comma-separated seeds");

  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t max_batch = 1024;
  auto* serve = app.add_subcommand("serve", "Run the HTTP scoring service");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port")->check(CLI::Range(1, 65535));
  serve->add_option("--max-batch", max_batch, "Largest accepted batch")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitIo;
  }

  try {
    if (*serve) return RunServe(g, host, port, max_batch);
    const RunConfig rc = ResolveRunConfig(g);
    if (*validate) return RunValidate(rc);
    if (*synth) return RunSynth(rc, sf);
    if (*score) return RunScore(rc, jf, rf);
    if (*eval) return RunEval(rc, jf, with_reward, rf);
    if (*compare) return RunCompare(baseline, candidate, compare_out);
    if (*train) return RunTrain(rc, sim, rf);
    if (*sweep) return RunSweep(rc, sim, rf);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const TransportError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "invalid: " << ErrorTypeName(e) << ": " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitIo;
}

}  // namespace
}  // namespace symreward

int main(int argc, char** argv) { return symreward::Main(argc, argv); }
