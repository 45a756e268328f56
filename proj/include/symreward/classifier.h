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

// Keyword rule classifier mapping a free-text answer to one answer category
// of an analysis step.
//
// Matching runs over case-folded word tokens:
//   1. Phrase keywords (two or more tokens), longest first. A matched phrase
//      consumes its tokens.
//   2. Single-word keywords on tokens that were not consumed.
//   Any match preceded by an unconsumed negator within `negation_window`
//   tokens of the same sentence is suppressed.
//   3. A negator that is itself a keyword of the step counts as a match only
//      if it did not suppress a match of its own category.
//   4. Several surviving categories are resolved by the step's precedence
//      list; no surviving match yields NoMatch.

#ifndef SYMREWARD_CLASSIFIER_H_
#define SYMREWARD_CLASSIFIER_H_

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "symreward/graph.h"

namespace symreward {

struct Keyword {
  std::string text;                 // case-folded source spelling
  std::vector<std::string> tokens;  // Tokenize(text)
  bool is_phrase = false;           // tokens.size() > 1
};

struct KeywordRule {
  Step step;
  Label category;
  std::vector<Keyword> keywords;
};

class Lexicon {
 public:
  const std::vector<KeywordRule>& rules(Step step) const {
    return rules_[Ordinal(step)];
  }
  const std::vector<std::string>& negators() const { return negators_; }
  int negation_window() const { return negation_window_; }
  // Non-NoMatch categories of `step`, most specific first.
  const std::vector<Label>& precedence(Step step) const {
    return precedence_[Ordinal(step)];
  }
  bool IsNegator(std::string_view token) const;
  const std::string& content_hash() const { return hash_; }

 private:
  friend Lexicon LoadLexicon(std::string_view document);

  std::array<std::vector<KeywordRule>, kNumSteps> rules_;
  std::vector<std::string> negators_;
  int negation_window_ = 3;
  std::array<std::vector<Label>, kNumSteps> precedence_;
  std::string hash_;
};

// Throws ParseError, SchemaError or InvariantError (e.g. a non-NoMatch
// category without keywords).
Lexicon LoadLexicon(std::string_view document);
Lexicon LoadLexiconFile(const std::filesystem::path& file);

// Lowercased alphanumeric word tokens in source order. A trailing "n't" is
// split off as the token "not" ("isn't" -> is, not).
std::vector<std::string> Tokenize(std::string_view text);

// Number of whitespace-separated tokens; the unit of answer length.
std::size_t WhitespaceTokenCount(std::string_view text);

struct ClassifiedTurn {
  Step step;
  std::string text;
  Label category = Label::kNoMatch;
  // Present iff category != NoMatch.
  std::optional<std::string> matched_keyword;
};

ClassifiedTurn Classify(const Lexicon& lexicon, Step step,
                        std::string_view text);
// Throws UnknownStep for a name outside the five analysis steps.
ClassifiedTurn Classify(const Lexicon& lexicon, std::string_view step_name,
                        std::string_view text);

std::vector<Label> ClassifyConversation(
    const Lexicon& lexicon,
    std::span<const std::pair<Step, std::string>> turns);

}  // namespace symreward

#endif  // SYMREWARD_CLASSIFIER_H_
