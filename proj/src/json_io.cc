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

#include "symreward/json_io.h"

#include "symreward/errors.h"
#include "symreward/io.h"

namespace symreward {
namespace {

using nlohmann::json;

const json& Field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw SchemaError(std::string("record lacks '") + key + "'");
  }
  return j.at(key);
}

std::string StringField(const json& j, const char* key) {
  const json& v = Field(j, key);
  if (!v.is_string()) throw SchemaError(std::string("'") + key + "' must be a string");
  return v.get<std::string>();
}

Step StepFrom(const std::string& name) {
  auto s = ParseStep(name);
  if (!s) throw UnknownStep("unknown step '" + name + "'");
  return *s;
}

Label LabelFrom(const std::string& name) {
  auto l = ParseLabel(name);
  if (!l) throw UnknownLabel("unknown category '" + name + "'");
  return *l;
}

}  // namespace

json ConversationToJson(const Conversation& c) {
  json turns = json::array();
  for (const Turn& t : c.turns) {
    json jt = {{"step", StepName(t.step)},
               {"prompt", t.prompt},
               {"target", t.target}};
    if (t.prediction) jt["prediction"] = *t.prediction;
    turns.push_back(std::move(jt));
  }
  json path = json::array();
  for (Label l : c.target_path) path.push_back(LabelName(l));
  json j = {{"image_id", c.image_id},
            {"class_label", ClassLabelName(c.class_label)},
            {"scenario", ScenarioName(c.scenario)},
            {"seed", c.seed},
            {"split", SplitName(c.split)},
            {"turns", std::move(turns)},
            {"target_path", std::move(path)}};
  if (c.hypothesis) j["hypothesis"] = LabelName(*c.hypothesis);
  return j;
}

Conversation ConversationFromJson(const json& j) {
  Conversation c;
  c.image_id = StringField(j, "image_id");
  c.class_label = ParseClassLabel(StringField(j, "class_label"));
  c.scenario = ParseScenario(StringField(j, "scenario"));
  const json& seed = Field(j, "seed");
  if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
    throw SchemaError("'seed' must be an integer");
  }
  c.seed = seed.get<std::uint64_t>();
  c.split = ParseSplit(StringField(j, "split"));
  const json& turns = Field(j, "turns");
  if (!turns.is_array()) throw SchemaError("'turns' must be an array");
  for (const json& jt : turns) {
    Turn t;
    t.step = StepFrom(StringField(jt, "step"));
    t.prompt = StringField(jt, "prompt");
    t.target = StringField(jt, "target");
    if (jt.contains("prediction")) t.prediction = StringField(jt, "prediction");
    c.turns.push_back(std::move(t));
  }
  const json& path = Field(j, "target_path");
  if (!path.is_array() || path.size() != kNumSteps) {
    throw SchemaError("'target_path' must list five categories");
  }
  for (std::size_t i = 0; i < kNumSteps; ++i) {
    if (!path[i].is_string()) throw SchemaError("'target_path' holds strings");
    c.target_path[i] = LabelFrom(path[i].get<std::string>());
  }
  if (j.contains("hypothesis")) {
    c.hypothesis = LabelFrom(StringField(j, "hypothesis"));
  }
  return c;
}

std::string DatasetToJsonl(std::span<const Conversation> conversations) {
  std::string out;
  for (const auto& c : conversations) {
    out += ConversationToJson(c).dump();
    out += '\n';
  }
  return out;
}

std::vector<json> ParseJsonl(std::string_view text) {
  std::vector<json> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (out.empty() && j.is_object() && j.size() == 1 && j.contains("meta")) {
      continue;
    }
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<Conversation> ParseDatasetJsonl(std::string_view text) {
  std::vector<Conversation> out;
  std::size_t n = 0;
  for (const json& j : ParseJsonl(text)) {
    ++n;
    try {
      out.push_back(ConversationFromJson(j));
    } catch (const Error& e) {
      throw ParseError("record " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Conversation> ReadDatasetFile(const std::filesystem::path& file) {
  return ParseDatasetJsonl(ReadTextFile(file));
}

json ManifestToJson(const DatasetManifest& m) {
  json classes = json::object();
  for (std::size_t c = 0; c < kNumClassLabels; ++c) {
    classes[std::string(ClassLabelName(kAllClassLabels[c]))] = {
        {"train", m.class_split_counts[c][0]},
        {"eval", m.class_split_counts[c][1]},
        {"total", m.class_split_counts[c][0] + m.class_split_counts[c][1]}};
  }
  std::size_t train = 0, eval = 0;
  for (const auto& c : m.class_split_counts) {
    train += c[0];
    eval += c[1];
  }
  return {{"toolkit_version", m.toolkit_version},
          {"config_hash", m.config_hash},
          {"graph_hash", m.graph_hash},
          {"templates_hash", m.templates_hash},
          {"variants_hash", m.variants_hash},
          {"seed", m.seed},
          {"split_fraction", m.split_fraction},
          {"classes", std::move(classes)},
          {"splits", {{"train", train}, {"eval", eval}}},
          {"scenarios", m.scenario_counts},
          {"total", m.total},
          {"dataset_sha256", m.dataset_hash}};
}

json RewardConfigToJson(const RewardConfig& c) {
  return {{"lambda", c.lambda},
          {"length_tolerance", c.length_tolerance},
          {"length_weight", c.length_weight},
          {"nomatch_weight", c.nomatch_weight},
          {"enable_correctness", c.enable_correctness},
          {"enable_consistency", c.enable_consistency},
          {"enable_length", c.enable_length},
          {"enable_nomatch", c.enable_nomatch}};
}

RewardConfig ApplyRewardOverrides(RewardConfig base, const json& overrides) {
  if (overrides.is_null()) return base;
  if (!overrides.is_object()) throw SchemaError("reward_config must be an object");
  for (auto it = overrides.begin(); it != overrides.end(); ++it) {
    const std::string& key = it.key();
    double* number = key == "lambda"             ? &base.lambda
                     : key == "length_tolerance" ? &base.length_tolerance
                     : key == "length_weight"    ? &base.length_weight
                     : key == "nomatch_weight"   ? &base.nomatch_weight
                                                 : nullptr;
    bool* flag = key == "enable_correctness"   ? &base.enable_correctness
                 : key == "enable_consistency" ? &base.enable_consistency
                 : key == "enable_length"      ? &base.enable_length
                 : key == "enable_nomatch"     ? &base.enable_nomatch
                                               : nullptr;
    if (number) {
      if (!it->is_number()) throw SchemaError(key + " must be a number");
      *number = it->get<double>();
    } else if (flag) {
      if (!it->is_boolean()) throw SchemaError(key + " must be a boolean");
      *flag = it->get<bool>();
    } else {
      throw SchemaError("unknown reward_config key '" + key + "'");
    }
  }
  base.Validate();
  return base;
}

json BreakdownToJson(const RewardBreakdown& b) {
  json pred = json::array(), target = json::array(), path = json::array();
  for (Label l : b.predicted_categories) pred.push_back(LabelName(l));
  for (Label l : b.target_categories) target.push_back(LabelName(l));
  for (const auto& slot : b.predicted_path) {
    path.push_back(slot ? json(LabelName(*slot)) : json(nullptr));
  }
  json correct = json::array();
  for (bool c : b.per_turn_correct) correct.push_back(c);
  return {{"correctness", b.correctness},
          {"consistency", b.consistency},
          {"length_penalty", b.length_penalty},
          {"nomatch_penalty", b.nomatch_penalty},
          {"total", b.total},
          {"lambda", b.lambda},
          {"per_turn_correct", std::move(correct)},
          {"predicted_categories", std::move(pred)},
          {"target_categories", std::move(target)},
          {"predicted_path", std::move(path)},
          {"path_valid", b.path_valid}};
}

}  // namespace symreward
