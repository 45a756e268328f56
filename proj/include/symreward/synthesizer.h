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

// Synthesis of multi-turn diagnostic conversations from annotation labels.
//
// Each conversation walks the analysis steps of one target path. The turn
// order depends on the scenario:
//   SI    canonical step order
//   DF    Diagnosis first, then the other four in order
//   II    five steps drawn uniformly with replacement
//   CQ_*  canonical order; the Diagnosis prompt quotes a clinician statement
//   RQ_*  canonical order; the Diagnosis prompt quotes a clinician rationale
// The _R variants quote the true diagnosis, the _W variants a different one.
//
// Randomness is keyed per (record seed, step, occurrence), so the DF
// conversation for a seed is a permutation of the SI conversation.

#ifndef SYMREWARD_SYNTHESIZER_H_
#define SYMREWARD_SYNTHESIZER_H_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "symreward/classifier.h"
#include "symreward/execution.h"
#include "symreward/graph.h"
#include "symreward/paraphraser.h"
#include "symreward/templates.h"

namespace symreward {

enum class ClassLabel {
  kBloodContamination,
  kParticleContamination,
  kAML,
  kMM,
  kHealthy,
};
inline constexpr std::size_t kNumClassLabels = 5;
inline constexpr std::array<ClassLabel, kNumClassLabels> kAllClassLabels = {
    ClassLabel::kBloodContamination, ClassLabel::kParticleContamination,
    ClassLabel::kAML, ClassLabel::kMM, ClassLabel::kHealthy};

std::string_view ClassLabelName(ClassLabel label);
// Case-insensitive. Throws UnknownLabel.
ClassLabel ParseClassLabel(std::string_view name);

enum class Scenario { kSI, kDF, kII, kCQ_R, kCQ_W, kRQ_R, kRQ_W };
inline constexpr std::array<Scenario, 7> kAllScenarios = {
    Scenario::kSI,   Scenario::kDF,   Scenario::kII,  Scenario::kCQ_R,
    Scenario::kCQ_W, Scenario::kRQ_R, Scenario::kRQ_W};

std::string_view ScenarioName(Scenario scenario);
// Throws SchemaError.
Scenario ParseScenario(std::string_view name);
// II may skip steps; every other scenario answers all five.
bool AllowsPartialCoverage(Scenario scenario);

struct AnnotationRecord {
  std::string image_id;
  ClassLabel class_label = ClassLabel::kHealthy;
  Split split = Split::kTrain;
};

struct Turn {
  Step step = Step::kImageQuality;
  std::string prompt;
  std::string target;
  std::optional<std::string> prediction;
};

struct Conversation {
  std::string image_id;
  ClassLabel class_label = ClassLabel::kHealthy;
  Scenario scenario = Scenario::kSI;
  std::uint64_t seed = 0;
  Split split = Split::kTrain;
  std::vector<Turn> turns;
  Path target_path{};
  // Diagnosis quoted by a CQ/RQ prompt.
  std::optional<Label> hypothesis;
};

// Throws InvariantError if the graph has no such path.
Path TargetPathFor(const ReasoningGraph& graph, ClassLabel label);
// Throws UnknownLabel for an unrecognized name.
Path TargetPathFor(const ReasoningGraph& graph, std::string_view label);

// Accepted rephrasings of each template string, usually produced once by
// BuildVariantTable. Templates without an entry are used verbatim.
using VariantTable = std::map<std::string, std::vector<std::string>,
                              std::less<>>;

// Asks `paraphraser` for up to `n` variants of every question and answer
// template and keeps the answer variants that classify like their source.
// Runs serially; paraphrasers need not be thread-safe.
VariantTable BuildVariantTable(const TemplateBank& bank,
                               const Lexicon& lexicon, Paraphraser& paraphraser,
                               int n);

struct SynthesisContext {
  const ReasoningGraph& graph;
  const TemplateBank& bank;
  const VariantTable* variants = nullptr;
};

// Fully determined by the arguments. Throws MissingTemplate when a pool it
// needs is empty for the record's split.
Conversation SynthesizeConversation(const SynthesisContext& ctx,
                                    const AnnotationRecord& record,
                                    Scenario scenario, std::uint64_t seed);

using ClassCounts = std::array<std::size_t, kNumClassLabels>;

// Class counts of the reference bone-marrow corpus (16,340 patches).
ClassCounts ReferenceCorpusCounts();
// "paper-default" or "Healthy=2,AML=3,..." (missing classes count zero).
// Throws SchemaError or UnknownLabel.
ClassCounts ParseClassCounts(std::string_view spec);
// "SI=1,DF=0.5" -> weights; throws SchemaError.
std::vector<std::pair<Scenario, double>> ParseScenarioMix(std::string_view spec);

struct DatasetOptions {
  ClassCounts counts{};
  double split_fraction = 0.8;
  std::uint64_t seed = 0;
  std::vector<std::pair<Scenario, double>> scenario_mix = {{Scenario::kSI, 1.0}};
  Execution execution = Execution::kParallel;
};

struct DatasetManifest {
  std::string toolkit_version;
  std::string graph_hash;
  std::string templates_hash;
  std::string variants_hash;
  std::string config_hash;  // over the three above and the options
  std::uint64_t seed = 0;
  double split_fraction = 0.0;
  std::array<std::array<std::size_t, 2>, kNumClassLabels> class_split_counts{};
  std::map<std::string, std::size_t> scenario_counts;
  std::size_t total = 0;
  std::string dataset_hash;  // SHA-256 of the JSONL stream
};

struct Dataset {
  std::vector<Conversation> conversations;
  DatasetManifest manifest;
};

// Emits exactly options.counts conversations per class, in class order.
// Within a class, floor(n * split_fraction) randomly chosen records go to
// train. Throws InsufficientTemplates when the bank cannot serve both
// splits from disjoint pools, SchemaError on bad options.
Dataset SynthesizeDataset(const SynthesisContext& ctx,
                          const DatasetOptions& options);

}  // namespace symreward

#endif  // SYMREWARD_SYNTHESIZER_H_
