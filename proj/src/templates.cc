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

#include "symreward/templates.h"

#include <set>

#include "json.hpp"
#include "symreward/errors.h"
#include "symreward/hashing.h"
#include "symreward/io.h"

namespace symreward {
namespace {

using nlohmann::json;

json ParseDocument(std::string_view document, const char* what) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
  if (!doc.is_object()) throw SchemaError(std::string(what) + " must be an object");
  if (!doc.contains("version") || doc["version"] != "1") {
    throw SchemaError(std::string("unrecognized ") + what + " schema version");
  }
  return doc;
}

std::vector<std::string> StringList(const json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where + " must be an array of strings");
  std::vector<std::string> out;
  for (const auto& s : j) {
    if (!s.is_string() || s.get<std::string>().empty()) {
      throw SchemaError(where + " must hold non-empty strings");
    }
    out.push_back(s.get<std::string>());
  }
  return out;
}

SplitPool ReadPool(const json& j, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + " must be a train/eval object");
  SplitPool pool;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "train") {
      pool.train = StringList(*it, where + ".train");
    } else if (it.key() == "eval") {
      pool.eval = StringList(*it, where + ".eval");
    } else {
      throw SchemaError(where + " has unknown split '" + it.key() + "'");
    }
  }
  return pool;
}

Step StepOrThrow(const std::string& name) {
  auto step = ParseStep(name);
  if (!step) throw SchemaError("unknown step '" + name + "'");
  return *step;
}

Label DiagnosisOrThrow(const std::string& name) {
  auto label = ParseLabel(name);
  if (!label || !IsMember(Step::kDiagnosis, *label) ||
      *label == Label::kNoMatch) {
    throw SchemaError("'" + name + "' is not a diagnosis category");
  }
  return *label;
}

const std::vector<std::string> kEmptyList;

}  // namespace

std::string_view SplitName(Split split) {
  return split == Split::kTrain ? "train" : "eval";
}

Split ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "eval") return Split::kEval;
  throw SchemaError("unknown split '" + std::string(name) + "'");
}

const std::string& TemplateBank::hypothesis(std::string_view kind) const {
  static const std::string kEmpty;
  auto it = hypotheses_.find(kind);
  return it == hypotheses_.end() ? kEmpty : it->second;
}

TemplateBank LoadTemplateBank(std::string_view document) {
  const json doc = ParseDocument(document, "template bank");
  TemplateBank bank;
  if (doc.contains("questions")) {
    const json& q = doc["questions"];
    if (!q.is_object()) throw SchemaError("questions must be an object");
    for (auto it = q.begin(); it != q.end(); ++it) {
      bank.questions_[Ordinal(StepOrThrow(it.key()))] =
          ReadPool(*it, "questions." + it.key());
    }
  }
  if (doc.contains("answers")) {
    const json& a = doc["answers"];
    if (!a.is_object()) throw SchemaError("answers must be an object");
    for (auto it = a.begin(); it != a.end(); ++it) {
      const Step step = StepOrThrow(it.key());
      if (!it->is_object()) {
        throw SchemaError("answers." + it.key() + " must be an object");
      }
      for (auto cit = it->begin(); cit != it->end(); ++cit) {
        auto label = ParseLabel(cit.key());
        if (!label || !IsMember(step, *label)) {
          throw SchemaError("unknown category '" + cit.key() + "' for step " +
                            it.key());
        }
        bank.answers_[Ordinal(step)][Ordinal(*label)] =
            ReadPool(*cit, "answers." + it.key() + "." + cit.key());
      }
    }
  }
  if (doc.contains("hypotheses")) {
    const json& h = doc["hypotheses"];
    if (!h.is_object()) throw SchemaError("hypotheses must be an object");
    for (auto it = h.begin(); it != h.end(); ++it) {
      if (it.key() != "CQ_R" && it.key() != "CQ_W" && it.key() != "RQ_R" &&
          it.key() != "RQ_W") {
        throw SchemaError("unknown hypothesis kind '" + it.key() + "'");
      }
      if (!it->is_string()) throw SchemaError("hypotheses must be strings");
      const std::string text = it->get<std::string>();
      const bool cq = it.key()[0] == 'C';
      if (cq && text.find("[statement]") == std::string::npos) {
        throw SchemaError(it.key() + " wrapper lacks a [statement] slot");
      }
      if (!cq && (text.find("[rationale]") == std::string::npos ||
                  text.find("[Question]") == std::string::npos)) {
        throw SchemaError(it.key() +
                          " wrapper needs [rationale] and [Question] slots");
      }
      bank.hypotheses_[it.key()] = text;
    }
  }
  for (const char* key : {"statements", "rationales"}) {
    if (!doc.contains(key)) continue;
    const json& s = doc[key];
    if (!s.is_object()) throw SchemaError(std::string(key) + " must be an object");
    auto& target = std::string(key) == "statements" ? bank.statements_
                                                     : bank.rationales_;
    for (auto it = s.begin(); it != s.end(); ++it) {
      target[Ordinal(DiagnosisOrThrow(it.key()))] =
          ReadPool(*it, std::string(key) + "." + it.key());
    }
  }
  if (doc.contains("distractors")) {
    bank.distractors_ = ReadPool(doc["distractors"], "distractors");
  }
  bank.hash_ = Sha256Hex(doc.dump());
  return bank;
}

TemplateBank LoadTemplateBankFile(const std::filesystem::path& file) {
  return LoadTemplateBank(ReadTextFile(file));
}

const std::vector<std::string>& ParaphrasePool::variants(
    std::string_view text) const {
  auto it = variants_.find(text);
  return it == variants_.end() ? kEmptyList : it->second;
}

ParaphrasePool LoadParaphrasePool(std::string_view document) {
  const json doc = ParseDocument(document, "paraphrase pool");
  ParaphrasePool pool;
  if (!doc.contains("variants") || !doc["variants"].is_object()) {
    throw SchemaError("paraphrase pool needs a 'variants' object");
  }
  for (auto it = doc["variants"].begin(); it != doc["variants"].end(); ++it) {
    pool.variants_[it.key()] = StringList(*it, "variants['" + it.key() + "']");
  }
  pool.hash_ = Sha256Hex(doc.dump());
  return pool;
}

ParaphrasePool LoadParaphrasePoolFile(const std::filesystem::path& file) {
  return LoadParaphrasePool(ReadTextFile(file));
}

std::vector<TemplateIssue> CheckTemplateBank(const ReasoningGraph& graph,
                                             const Lexicon& lexicon,
                                             const TemplateBank& bank,
                                             const ParaphrasePool* pool) {
  std::vector<TemplateIssue> issues;
  std::array<std::set<std::string>, 2> seen;  // train, eval

  auto with_variants = [&](const std::string& text) {
    std::vector<std::string> out{text};
    if (pool) {
      const auto& v = pool->variants(text);
      out.insert(out.end(), v.begin(), v.end());
    }
    return out;
  };
  auto record = [&](Split split, const std::string& text) {
    seen[split == Split::kTrain ? 0 : 1].insert(text);
  };

  // Which (step, category) pairs some valid path needs.
  std::array<std::array<bool, kNumLabels>, kNumSteps> needed{};
  std::array<bool, kNumLabels> diagnoses{};
  for (const Path& p : graph.concrete_paths()) {
    for (Step s : kAllSteps) needed[Ordinal(s)][Ordinal(p[Ordinal(s)])] = true;
    diagnoses[Ordinal(p[Ordinal(Step::kDiagnosis)])] = true;
  }

  for (Step step : kAllSteps) {
    for (Split split : {Split::kTrain, Split::kEval}) {
      const auto& qs = bank.questions(step).of(split);
      if (qs.empty()) {
        issues.push_back({step, Label::kNoMatch, "",
                          "no " + std::string(SplitName(split)) +
                              " question template"});
      }
      for (const auto& q : qs) {
        for (const auto& v : with_variants(q)) record(split, v);
      }
    }
    for (Label label : StepCategories(step)) {
      const SplitPool& answers = bank.answers(step, label);
      for (Split split : {Split::kTrain, Split::kEval}) {
        const auto& list = answers.of(split);
        if (list.empty() && needed[Ordinal(step)][Ordinal(label)]) {
          issues.push_back({step, label, "",
                            "missing " + std::string(SplitName(split)) +
                                " answer template"});
        }
        for (const auto& a : list) {
          for (const auto& v : with_variants(a)) {
            record(split, v);
            const Label got = Classify(lexicon, step, v).category;
            if (got != label) {
              issues.push_back({step, label, v,
                                "classifies to " + std::string(LabelName(got))});
            }
          }
        }
      }
    }
  }

  for (Split split : {Split::kTrain, Split::kEval}) {
    for (const auto& d : bank.distractors().of(split)) {
      for (const auto& v : with_variants(d)) {
        record(split, v);
        for (Step step : kAllSteps) {
          const Label got = Classify(lexicon, step, v).category;
          if (got != Label::kNoMatch) {
            issues.push_back({step, Label::kNoMatch, v,
                              "distractor classifies to " +
                                  std::string(LabelName(got))});
          }
        }
      }
    }
  }

  for (const char* kind : {"CQ_R", "CQ_W", "RQ_R", "RQ_W"}) {
    if (bank.hypothesis(kind).empty()) {
      issues.push_back({Step::kDiagnosis, Label::kNoMatch, "",
                        std::string("missing hypothesis wrapper ") + kind});
    }
  }
  for (Label d : StepCategories(Step::kDiagnosis)) {
    if (d == Label::kNoMatch) continue;
    for (Split split : {Split::kTrain, Split::kEval}) {
      for (const SplitPool* p : {&bank.statements(d), &bank.rationales(d)}) {
        const auto& list = p->of(split);
        if (list.empty() && diagnoses[Ordinal(d)]) {
          issues.push_back({Step::kDiagnosis, d, "",
                            std::string("missing ") +
                                (p == &bank.statements(d) ? "statement"
                                                          : "rationale") +
                                " for " + std::string(SplitName(split))});
        }
        for (const auto& s : list) record(split, s);
      }
    }
  }

  for (const auto& text : seen[0]) {
    if (seen[1].count(text)) {
      issues.push_back({Step::kImageQuality, Label::kNoMatch, text,
                        "appears in both train and eval pools"});
    }
  }
  return issues;
}

}  // namespace symreward
