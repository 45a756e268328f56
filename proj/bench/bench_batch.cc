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

// Serial versus OpenMP throughput of the batch scoring and classification
// kernels on synthesized conversations.
//
//   bench_batch [--per-class N] [--repeats R] [--config-dir DIR]

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include <omp.h>

#include "CLI11.hpp"
#include "symreward/batch.h"
#include "symreward/paraphraser.h"
#include "symreward/synthesizer.h"

namespace {

using namespace symreward;

template <typename F>
double BestSeconds(int repeats, F&& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Batch kernel benchmark"};
  std::size_t per_class = 2000;
  int repeats = 3;
  std::string config_dir = "config";
  app.add_option("--per-class", per_class, "conversations per class label");
  app.add_option("--repeats", repeats, "timed repetitions (best is kept)");
  app.add_option("--config-dir", config_dir, "directory with shipped configs");
  CLI11_PARSE(app, argc, argv);

  const auto graph = LoadGraphFile(config_dir + "/graphs/bma-default.json");
  const auto lexicon = LoadLexiconFile(config_dir + "/lexicons/bma-default.json");
  const auto bank =
      LoadTemplateBankFile(config_dir + "/templates/bma-default.json");
  SynthesisContext ctx{graph, bank, nullptr};
  DatasetOptions opts;
  opts.counts.fill(per_class);
  opts.scenario_mix = ParseScenarioMix("SI=1,DF=1,II=1");

  Dataset data;
  const double synth_serial = BestSeconds(repeats, [&] {
    opts.execution = Execution::kSerial;
    data = SynthesizeDataset(ctx, opts);
  });
  const double synth_parallel = BestSeconds(repeats, [&] {
    opts.execution = Execution::kParallel;
    data = SynthesizeDataset(ctx, opts);
  });

  std::vector<ScoreItem> items;
  std::vector<std::string> texts;
  for (const auto& c : data.conversations) {
    ScoreItem item;
    item.coverage = AllowsPartialCoverage(c.scenario)
                        ? PathCoverage::kPartialAllowed
                        : PathCoverage::kComplete;
    for (const auto& t : c.turns) {
      item.turns.push_back({t.step, t.target, t.target, std::nullopt});
      if (t.step == Step::kDiagnosis) texts.push_back(t.target);
    }
    items.push_back(std::move(item));
  }
  RewardConfig config;
  std::vector<ScoreOutcome> a, b;
  const double score_serial = BestSeconds(repeats, [&] {
    a = ScoreBatch(graph, lexicon, items, config, Execution::kSerial);
  });
  const double score_parallel = BestSeconds(repeats, [&] {
    b = ScoreBatch(graph, lexicon, items, config, Execution::kParallel);
  });
  bool same = a.size() == b.size();
  for (std::size_t i = 0; same && i < a.size(); ++i) {
    same = a[i].breakdown.has_value() == b[i].breakdown.has_value() &&
           (!a[i].breakdown ||
            std::memcmp(&a[i].breakdown->total, &b[i].breakdown->total,
                        sizeof(double)) == 0);
  }
  const double cls_serial = BestSeconds(repeats, [&] {
    ClassifyBatch(lexicon, Step::kDiagnosis, texts, Execution::kSerial);
  });
  const double cls_parallel = BestSeconds(repeats, [&] {
    ClassifyBatch(lexicon, Step::kDiagnosis, texts, Execution::kParallel);
  });

  std::printf("threads: %d, conversations: %zu\n", omp_get_max_threads(),
              items.size());
  std::printf("%-12s %12s %12s %8s\n", "kernel", "serial_s", "parallel_s",
              "speedup");
  auto row = [](const char* name, double s, double p) {
    std::printf("%-12s %12.4f %12.4f %8.2f\n", name, s, p, s / p);
  };
  row("synthesize", synth_serial, synth_parallel);
  row("score", score_serial, score_parallel);
  row("classify", cls_serial, cls_parallel);
  std::printf("outputs identical: %s\n", same ? "yes" : "no");
  return same ? 0 : 1;
}
