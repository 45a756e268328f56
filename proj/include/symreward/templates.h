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

// Question and answer templates used to render synthesized conversations,
// split into disjoint train and eval pools.
//
//   {
//     "version": "1",
//     "questions": {"ImageQuality": {"train": [...], "eval": [...]}, ...},
//     "answers": {"ImageQuality": {"HighQuality": {"train": [...],
//                                                  "eval": [...]}}, ...},
//     "hypotheses": {"CQ_R": "... [statement] ...", "RQ_W": "... [Question]"},
//     "statements": {"AML": {"train": [...], "eval": [...]}, ...},
//     "rationales": {"AML": {"train": [...], "eval": [...]}, ...},
//     "distractors": {"train": [...], "eval": [...]}
//   }
//
// Distractors are answers that match no keyword in any step.

#ifndef SYMREWARD_TEMPLATES_H_
#define SYMREWARD_TEMPLATES_H_

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "symreward/classifier.h"
#include "symreward/graph.h"

namespace symreward {

enum class Split { kTrain, kEval };

std::string_view SplitName(Split split);
// "train" or "eval"; throws SchemaError otherwise.
Split ParseSplit(std::string_view name);

struct SplitPool {
  std::vector<std::string> train;
  std::vector<std::string> eval;

  const std::vector<std::string>& of(Split split) const {
    return split == Split::kTrain ? train : eval;
  }
};

class TemplateBank {
 public:
  const SplitPool& questions(Step step) const {
    return questions_[Ordinal(step)];
  }
  // Empty pool when the bank has nothing for (step, label).
  const SplitPool& answers(Step step, Label label) const {
    return answers_[Ordinal(step)][Ordinal(label)];
  }
  // Wrapper text for "CQ_R", "CQ_W", "RQ_R" or "RQ_W"; empty when absent.
  const std::string& hypothesis(std::string_view kind) const;
  // Diagnosis-keyed hypothesis content.
  const SplitPool& statements(Label diagnosis) const {
    return statements_[Ordinal(diagnosis)];
  }
  const SplitPool& rationales(Label diagnosis) const {
    return rationales_[Ordinal(diagnosis)];
  }
  const SplitPool& distractors() const { return distractors_; }
  const std::string& content_hash() const { return hash_; }

 private:
  friend TemplateBank LoadTemplateBank(std::string_view document);

  std::array<SplitPool, kNumSteps> questions_;
  std::array<std::array<SplitPool, kNumLabels>, kNumSteps> answers_;
  std::map<std::string, std::string, std::less<>> hypotheses_;
  std::array<SplitPool, kNumLabels> statements_;
  std::array<SplitPool, kNumLabels> rationales_;
  SplitPool distractors_;
  std::string hash_;
};

// Throws ParseError or SchemaError.
TemplateBank LoadTemplateBank(std::string_view document);
TemplateBank LoadTemplateBankFile(const std::filesystem::path& file);

// Offline rephrasings keyed by the template they rewrite.
//   {"version": "1", "variants": {"<template>": ["<variant>", ...]}}
class ParaphrasePool {
 public:
  // Empty when the text has no shipped variants.
  const std::vector<std::string>& variants(std::string_view text) const;
  const std::map<std::string, std::vector<std::string>, std::less<>>& all()
      const {
    return variants_;
  }
  const std::string& content_hash() const { return hash_; }

 private:
  friend ParaphrasePool LoadParaphrasePool(std::string_view document);

  std::map<std::string, std::vector<std::string>, std::less<>> variants_;
  std::string hash_;
};

ParaphrasePool LoadParaphrasePool(std::string_view document);
ParaphrasePool LoadParaphrasePoolFile(const std::filesystem::path& file);

// A problem found by CheckTemplateBank, e.g. a template that classifies to
// the wrong category.
struct TemplateIssue {
  Step step;
  Label category;  // NoMatch for questions and distractors
  std::string text;
  std::string message;
};

// Coverage of every (step, category) on a valid path in both splits, answer
// round-trip through the classifier, distractors classifying to NoMatch in
// every step, and train/eval disjointness. Paraphrases, when given, are
// checked the same way as the template they rewrite.
std::vector<TemplateIssue> CheckTemplateBank(const ReasoningGraph& graph,
                                             const Lexicon& lexicon,
                                             const TemplateBank& bank,
                                             const ParaphrasePool* pool);

}  // namespace symreward

#endif  // SYMREWARD_TEMPLATES_H_
