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

// The diagnostic reasoning graph: five ordered analysis steps, the closed
// answer-category set of each step, and the set of concrete category paths
// that count as clinically valid reasoning.
//
// The graph is loaded from a JSON document so the decision tree can be edited
// without recompiling:
//
//   {
//     "version": "1",
//     "steps": ["ImageQuality", "CellQuality", "Abnormality",
//               "Proliferation", "Diagnosis"],
//     "categories": {"ImageQuality": ["HighQuality", "LowQuality", "NoMatch"],
//                    ...},
//     "patterns": [["HighQuality", "Adequate", "Normal", "NormalProlif",
//                   "Healthy"],
//                  ["LowQuality", "*", "Inadequate", "Inadequate",
//                   "Inconclusive"], ...]
//   }
//
// "*" in a pattern slot expands over every non-NoMatch category of that step.

#ifndef SYMREWARD_GRAPH_H_
#define SYMREWARD_GRAPH_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace symreward {

inline constexpr std::size_t kNumSteps = 5;

enum class Step : std::uint8_t {
  kImageQuality = 0,
  kCellQuality = 1,
  kAbnormality = 2,
  kProliferation = 3,
  kDiagnosis = 4,
};

inline constexpr std::array<Step, kNumSteps> kAllSteps = {
    Step::kImageQuality, Step::kCellQuality, Step::kAbnormality,
    Step::kProliferation, Step::kDiagnosis};

// Every answer label across all steps. A label is only meaningful together
// with the step it answers; use IsMember() to check the pairing.
enum class Label : std::uint8_t {
  kHighQuality,
  kLowQuality,
  kAdequate,
  kBlood,
  kClot,
  kNormal,
  kAbnormal,
  kInadequate,
  kBlastProlif,
  kPlasmaProlif,
  kNormalProlif,
  kHealthy,
  kAML,
  kMM,
  kInconclusive,
  kNoMatch,
};

inline constexpr std::size_t kNumLabels = 16;

constexpr std::size_t Ordinal(Step s) { return static_cast<std::size_t>(s); }
constexpr std::size_t Ordinal(Label l) { return static_cast<std::size_t>(l); }

std::string_view StepName(Step step);
std::string_view LabelName(Label label);
std::optional<Step> ParseStep(std::string_view name);
std::optional<Label> ParseLabel(std::string_view name);

// The closed category set of a step, NoMatch last.
std::span<const Label> StepCategories(Step step);
bool IsMember(Step step, Label label);

// One category per step, in canonical step order.
using Path = std::array<Label, kNumSteps>;

std::string PathToString(const Path& path);

struct PathPattern {
  // nullopt is a wildcard.
  std::array<std::optional<Label>, kNumSteps> slots;
};

class ReasoningGraph {
 public:
  const std::string& version() const { return version_; }
  const std::vector<PathPattern>& patterns() const { return patterns_; }
  // Categories enabled for `step` by the config, NoMatch included.
  std::span<const Label> categories(Step step) const {
    return categories_[Ordinal(step)];
  }
  // Sorted, duplicate-free expansion of the patterns.
  const std::vector<Path>& concrete_paths() const { return paths_; }
  bool Contains(const Path& path) const;
  // SHA-256 of the canonical JSON form; independent of whitespace and key
  // order in the source document.
  const std::string& content_hash() const { return hash_; }
  const std::string& canonical_json() const { return canonical_; }

 private:
  friend ReasoningGraph LoadGraph(std::string_view document);

  std::string version_;
  std::array<std::vector<Label>, kNumSteps> categories_;
  std::vector<PathPattern> patterns_;
  std::vector<Path> paths_;
  std::string hash_;
  std::string canonical_;
};

// Throws ParseError, SchemaError or InvariantError.
ReasoningGraph LoadGraph(std::string_view document);
ReasoningGraph LoadGraphFile(const std::filesystem::path& file);

std::vector<Path> ExpandPaths(const ReasoningGraph& graph);

// Throws LengthError unless `sequence` has exactly kNumSteps entries.
bool IsValidPath(const ReasoningGraph& graph, std::span<const Label> sequence);

// Categories c such that prefix + c is a prefix of some valid path, in enum
// order. Empty for a full-length prefix.
std::vector<Label> AdmissibleNext(const ReasoningGraph& graph,
                                  std::span<const Label> prefix);

// True iff some valid path agrees with every answered slot. With every slot
// answered this is IsValidPath.
bool IsCompatiblePartialPath(const ReasoningGraph& graph,
                             const std::array<std::optional<Label>, kNumSteps>&
                                 partial);

}  // namespace symreward

#endif  // SYMREWARD_GRAPH_H_
