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

#include "symreward/graph.h"

#include <algorithm>
#include <set>

#include "json.hpp"
#include "symreward/errors.h"
#include "symreward/hashing.h"
#include "symreward/io.h"

namespace symreward {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, kNumSteps> kStepNames = {
    "ImageQuality", "CellQuality", "Abnormality", "Proliferation",
    "Diagnosis"};

constexpr std::array<std::string_view, kNumLabels> kLabelNames = {
    "HighQuality",  "LowQuality",   "Adequate",     "Blood",
    "Clot",         "Normal",       "Abnormal",     "Inadequate",
    "BlastProlif",  "PlasmaProlif", "NormalProlif", "Healthy",
    "AML",          "MM",           "Inconclusive", "NoMatch"};

constexpr std::array<Label, 3> kImageQuality = {
    Label::kHighQuality, Label::kLowQuality, Label::kNoMatch};
constexpr std::array<Label, 4> kCellQuality = {
    Label::kAdequate, Label::kBlood, Label::kClot, Label::kNoMatch};
constexpr std::array<Label, 4> kAbnormality = {
    Label::kNormal, Label::kAbnormal, Label::kInadequate, Label::kNoMatch};
constexpr std::array<Label, 5> kProliferation = {
    Label::kBlastProlif, Label::kPlasmaProlif, Label::kNormalProlif,
    Label::kInadequate, Label::kNoMatch};
constexpr std::array<Label, 5> kDiagnosis = {
    Label::kHealthy, Label::kAML, Label::kMM, Label::kInconclusive,
    Label::kNoMatch};

constexpr std::string_view kWildcard = "*";

std::vector<Label> ParseCategoryList(Step step, const json& labels) {
  if (!labels.is_array()) {
    throw SchemaError("categories." + std::string(StepName(step)) +
                      " must be an array");
  }
  std::vector<Label> out;
  for (const auto& entry : labels) {
    if (!entry.is_string()) {
      throw SchemaError("category labels must be strings");
    }
    auto label = ParseLabel(entry.get<std::string>());
    if (!label || !IsMember(step, *label)) {
      throw SchemaError("unknown category '" + entry.get<std::string>() +
                        "' for step " + std::string(StepName(step)));
    }
    if (std::find(out.begin(), out.end(), *label) != out.end()) {
      throw SchemaError("duplicate category '" + entry.get<std::string>() +
                        "'");
    }
    out.push_back(*label);
  }
  if (std::find(out.begin(), out.end(), Label::kNoMatch) == out.end()) {
    throw InvariantError("step " + std::string(StepName(step)) +
                         " must list NoMatch");
  }
  // Keep the closed-set order regardless of document order.
  std::vector<Label> ordered;
  for (Label l : StepCategories(step)) {
    if (std::find(out.begin(), out.end(), l) != out.end()) {
      ordered.push_back(l);
    }
  }
  return ordered;
}

void ExpandInto(const PathPattern& pattern,
                const std::array<std::vector<Label>, kNumSteps>& categories,
                std::size_t slot, Path& current, std::set<Path>& out) {
  if (slot == kNumSteps) {
    out.insert(current);
    return;
  }
  if (pattern.slots[slot]) {
    current[slot] = *pattern.slots[slot];
    ExpandInto(pattern, categories, slot + 1, current, out);
    return;
  }
  for (Label l : categories[slot]) {
    if (l == Label::kNoMatch) continue;
    current[slot] = l;
    ExpandInto(pattern, categories, slot + 1, current, out);
  }
}

}  // namespace

std::string_view StepName(Step step) { return kStepNames[Ordinal(step)]; }

std::string_view LabelName(Label label) {
  return kLabelNames[Ordinal(label)];
}

std::optional<Step> ParseStep(std::string_view name) {
  for (std::size_t i = 0; i < kNumSteps; ++i) {
    if (kStepNames[i] == name) return static_cast<Step>(i);
  }
  return std::nullopt;
}

std::optional<Label> ParseLabel(std::string_view name) {
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    if (kLabelNames[i] == name) return static_cast<Label>(i);
  }
  return std::nullopt;
}

std::span<const Label> StepCategories(Step step) {
  switch (step) {
    case Step::kImageQuality:
      return kImageQuality;
    case Step::kCellQuality:
      return kCellQuality;
    case Step::kAbnormality:
      return kAbnormality;
    case Step::kProliferation:
      return kProliferation;
    case Step::kDiagnosis:
      return kDiagnosis;
  }
  return {};
}

bool IsMember(Step step, Label label) {
  auto cats = StepCategories(step);
  return std::find(cats.begin(), cats.end(), label) != cats.end();
}

std::string PathToString(const Path& path) {
  std::string out = "(";
  for (std::size_t i = 0; i < kNumSteps; ++i) {
    if (i) out += ",";
    out += LabelName(path[i]);
  }
  return out + ")";
}

bool ReasoningGraph::Contains(const Path& path) const {
  return std::binary_search(paths_.begin(), paths_.end(), path);
}

ReasoningGraph LoadGraph(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("graph config: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("graph config must be an object");
  for (const char* key : {"version", "steps", "categories", "patterns"}) {
    if (!doc.contains(key)) {
      throw SchemaError(std::string("graph config missing '") + key + "'");
    }
  }

  ReasoningGraph g;
  if (!doc["version"].is_string() || doc["version"].get<std::string>() != "1") {
    throw SchemaError("unrecognized graph schema version");
  }
  g.version_ = doc["version"].get<std::string>();

  const json& steps = doc["steps"];
  if (!steps.is_array() || steps.size() != kNumSteps) {
    throw SchemaError("steps must list exactly five analysis steps");
  }
  for (std::size_t i = 0; i < kNumSteps; ++i) {
    if (!steps[i].is_string() ||
        ParseStep(steps[i].get<std::string>()) != static_cast<Step>(i)) {
      throw SchemaError("steps must be ImageQuality, CellQuality, "
                        "Abnormality, Proliferation, Diagnosis in order");
    }
  }

  const json& cats = doc["categories"];
  if (!cats.is_object()) throw SchemaError("categories must be an object");
  for (auto it = cats.begin(); it != cats.end(); ++it) {
    if (!ParseStep(it.key())) {
      throw SchemaError("categories names unknown step '" + it.key() + "'");
    }
  }
  for (Step s : kAllSteps) {
    auto it = cats.find(std::string(StepName(s)));
    if (it == cats.end()) {
      throw SchemaError("categories missing step " + std::string(StepName(s)));
    }
    g.categories_[Ordinal(s)] = ParseCategoryList(s, *it);
  }

  const json& patterns = doc["patterns"];
  if (!patterns.is_array()) throw SchemaError("patterns must be an array");
  for (const auto& p : patterns) {
    if (!p.is_array() || p.size() != kNumSteps) {
      throw SchemaError("each pattern must have five slots");
    }
    PathPattern pattern;
    bool any_concrete = false;
    for (std::size_t i = 0; i < kNumSteps; ++i) {
      if (!p[i].is_string()) throw SchemaError("pattern slots must be strings");
      const std::string slot = p[i].get<std::string>();
      if (slot == kWildcard) continue;
      const Step step = kAllSteps[i];
      auto label = ParseLabel(slot);
      const auto& enabled = g.categories_[i];
      if (!label ||
          std::find(enabled.begin(), enabled.end(), *label) == enabled.end()) {
        throw SchemaError("pattern slot '" + slot + "' is not a category of " +
                          std::string(StepName(step)));
      }
      if (*label == Label::kNoMatch) {
        throw InvariantError("NoMatch may not appear in a valid path pattern");
      }
      pattern.slots[i] = *label;
      any_concrete = true;
    }
    if (!any_concrete) {
      throw InvariantError("a pattern must fix at least one slot");
    }
    g.patterns_.push_back(pattern);
  }

  std::set<Path> expanded;
  for (const auto& pattern : g.patterns_) {
    Path current{};
    ExpandInto(pattern, g.categories_, 0, current, expanded);
  }
  if (expanded.empty()) {
    throw InvariantError("graph defines no valid paths");
  }
  g.paths_.assign(expanded.begin(), expanded.end());

  // Canonical form: fixed key order (json objects are sorted), no spaces.
  json canonical;
  canonical["version"] = g.version_;
  canonical["steps"] = steps;
  for (Step s : kAllSteps) {
    json list = json::array();
    for (Label l : g.categories_[Ordinal(s)]) list.push_back(LabelName(l));
    canonical["categories"][std::string(StepName(s))] = list;
  }
  canonical["patterns"] = patterns;
  g.canonical_ = canonical.dump();
  g.hash_ = Sha256Hex(g.canonical_);
  return g;
}

ReasoningGraph LoadGraphFile(const std::filesystem::path& file) {
  return LoadGraph(ReadTextFile(file));
}

std::vector<Path> ExpandPaths(const ReasoningGraph& graph) {
  return graph.concrete_paths();
}

bool IsValidPath(const ReasoningGraph& graph, std::span<const Label> sequence) {
  if (sequence.size() != kNumSteps) {
    throw LengthError("a reasoning path has exactly five categories, got " +
                      std::to_string(sequence.size()));
  }
  Path p;
  std::copy(sequence.begin(), sequence.end(), p.begin());
  return graph.Contains(p);
}

std::vector<Label> AdmissibleNext(const ReasoningGraph& graph,
                                  std::span<const Label> prefix) {
  if (prefix.size() > kNumSteps) {
    throw LengthError("prefix longer than five steps");
  }
  if (prefix.size() == kNumSteps) return {};
  std::array<bool, kNumLabels> seen{};
  for (const Path& p : graph.concrete_paths()) {
    if (std::equal(prefix.begin(), prefix.end(), p.begin())) {
      seen[Ordinal(p[prefix.size()])] = true;
    }
  }
  std::vector<Label> out;
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    if (seen[i]) out.push_back(static_cast<Label>(i));
  }
  return out;
}

bool IsCompatiblePartialPath(
    const ReasoningGraph& graph,
    const std::array<std::optional<Label>, kNumSteps>& partial) {
  for (const Path& p : graph.concrete_paths()) {
    bool ok = true;
    for (std::size_t i = 0; i < kNumSteps && ok; ++i) {
      ok = !partial[i] || *partial[i] == p[i];
    }
    if (ok) return true;
  }
  return false;
}

}  // namespace symreward
