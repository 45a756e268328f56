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

#include "symreward/classifier.h"

#include <algorithm>

#include "json.hpp"
#include "symreward/errors.h"
#include "symreward/hashing.h"
#include "symreward/io.h"

namespace symreward {
namespace {

using nlohmann::json;

struct Token {
  std::string text;
  int sentence = 0;
};

bool IsWordByte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c >= 0x80;
}

bool IsSentenceEnd(char c) {
  return c == '.' || c == '!' || c == '?' || c == ';';
}

char Fold(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

std::vector<Token> TokenizeWithSentences(std::string_view text) {
  std::vector<Token> out;
  int sentence = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (!IsWordByte(c)) {
      if (IsSentenceEnd(text[i])) ++sentence;
      ++i;
      continue;
    }
    std::string word;
    while (i < text.size() && IsWordByte(static_cast<unsigned char>(text[i]))) {
      word.push_back(Fold(text[i]));
      ++i;
    }
    // "isn't" arrives here as "isn" followed by "'t".
    if (i + 1 < text.size() && text[i] == '\'' && Fold(text[i + 1]) == 't' &&
        (i + 2 == text.size() ||
         !IsWordByte(static_cast<unsigned char>(text[i + 2]))) &&
        word.size() > 1 && word.back() == 'n') {
      word.pop_back();
      out.push_back({word, sentence});
      out.push_back({"not", sentence});
      i += 2;
      continue;
    }
    out.push_back({std::move(word), sentence});
  }
  return out;
}

struct Match {
  Label category;
  const Keyword* keyword;
  std::size_t start;
  bool suppressed = false;
  std::optional<std::size_t> suppressor;  // token index of the negator
};

std::vector<Label> DefaultPrecedence(Step step) {
  switch (step) {
    case Step::kImageQuality:
      return {Label::kLowQuality, Label::kHighQuality};
    case Step::kCellQuality:
      return {Label::kBlood, Label::kClot, Label::kAdequate};
    case Step::kAbnormality:
      return {Label::kInadequate, Label::kAbnormal, Label::kNormal};
    case Step::kProliferation:
      return {Label::kBlastProlif, Label::kPlasmaProlif, Label::kInadequate,
              Label::kNormalProlif};
    case Step::kDiagnosis:
      return {Label::kAML, Label::kMM, Label::kInconclusive, Label::kHealthy};
  }
  return {};
}

bool SameSet(std::vector<Label> a, std::vector<Label> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

}  // namespace

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : TokenizeWithSentences(text)) out.push_back(std::move(t.text));
  return out;
}

std::size_t WhitespaceTokenCount(std::string_view text) {
  std::size_t n = 0;
  bool in_token = false;
  for (char c : text) {
    const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' ||
                       c == '\f' || c == '\v';
    if (!space && !in_token) ++n;
    in_token = !space;
  }
  return n;
}

bool Lexicon::IsNegator(std::string_view token) const {
  return std::find(negators_.begin(), negators_.end(), token) !=
         negators_.end();
}

Lexicon LoadLexicon(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("lexicon config: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("lexicon config must be an object");
  if (!doc.contains("version") || doc["version"] != "1") {
    throw SchemaError("unrecognized lexicon schema version");
  }

  Lexicon lex;
  if (doc.contains("negators")) {
    if (!doc["negators"].is_array()) {
      throw SchemaError("negators must be an array of strings");
    }
    for (const auto& n : doc["negators"]) {
      if (!n.is_string()) throw SchemaError("negators must be strings");
      auto toks = Tokenize(n.get<std::string>());
      if (toks.size() != 1) {
        throw SchemaError("negator '" + n.get<std::string>() +
                          "' must be a single word");
      }
      lex.negators_.push_back(toks[0]);
    }
  } else {
    lex.negators_ = {"not", "no", "without", "never"};
  }
  if (doc.contains("negation_window")) {
    if (!doc["negation_window"].is_number_integer() ||
        doc["negation_window"].get<int>() < 0) {
      throw SchemaError("negation_window must be a non-negative integer");
    }
    lex.negation_window_ = doc["negation_window"].get<int>();
  }

  if (!doc.contains("categories") || !doc["categories"].is_object()) {
    throw SchemaError("lexicon config needs a 'categories' object");
  }
  const json& cats = doc["categories"];
  for (auto it = cats.begin(); it != cats.end(); ++it) {
    if (!ParseStep(it.key())) {
      throw SchemaError("lexicon names unknown step '" + it.key() + "'");
    }
  }
  for (Step step : kAllSteps) {
    auto sit = cats.find(std::string(StepName(step)));
    if (sit == cats.end() || !sit->is_object()) {
      throw SchemaError("lexicon missing step " + std::string(StepName(step)));
    }
    for (auto cit = sit->begin(); cit != sit->end(); ++cit) {
      auto label = ParseLabel(cit.key());
      if (!label || !IsMember(step, *label)) {
        throw SchemaError("unknown category '" + cit.key() + "' for step " +
                          std::string(StepName(step)));
      }
      if (!cit->is_array()) {
        throw SchemaError("keywords of " + cit.key() + " must be an array");
      }
      if (*label == Label::kNoMatch) {
        if (!cit->empty()) {
          throw InvariantError("NoMatch may not carry keywords");
        }
        continue;
      }
      KeywordRule rule{step, *label, {}};
      for (const auto& kw : *cit) {
        if (!kw.is_string()) throw SchemaError("keywords must be strings");
        Keyword k;
        k.tokens = Tokenize(kw.get<std::string>());
        if (k.tokens.empty()) {
          throw InvariantError("keyword '" + kw.get<std::string>() +
                               "' has no word characters");
        }
        for (const auto& t : k.tokens) {
          if (!k.text.empty()) k.text += ' ';
          k.text += t;
        }
        k.is_phrase = k.tokens.size() > 1;
        rule.keywords.push_back(std::move(k));
      }
      lex.rules_[Ordinal(step)].push_back(std::move(rule));
    }
    for (Label l : StepCategories(step)) {
      if (l == Label::kNoMatch) continue;
      const auto& rules = lex.rules_[Ordinal(step)];
      auto r = std::find_if(rules.begin(), rules.end(),
                            [l](const KeywordRule& k) { return k.category == l; });
      if (r == rules.end() || r->keywords.empty()) {
        throw InvariantError("lexicon has no keywords for " +
                             std::string(StepName(step)) + "/" +
                             std::string(LabelName(l)));
      }
    }

    std::vector<Label> all_non_nomatch;
    for (Label l : StepCategories(step)) {
      if (l != Label::kNoMatch) all_non_nomatch.push_back(l);
    }
    std::vector<Label> order = DefaultPrecedence(step);
    if (doc.contains("precedence") &&
        doc["precedence"].contains(std::string(StepName(step)))) {
      order.clear();
      for (const auto& p : doc["precedence"][std::string(StepName(step))]) {
        auto label = p.is_string() ? ParseLabel(p.get<std::string>())
                                   : std::nullopt;
        if (!label) throw SchemaError("bad precedence entry");
        order.push_back(*label);
      }
    }
    if (order.size() != all_non_nomatch.size() ||
        !SameSet(order, all_non_nomatch)) {
      throw SchemaError("precedence for " + std::string(StepName(step)) +
                        " must order every non-NoMatch category once");
    }
    lex.precedence_[Ordinal(step)] = std::move(order);
  }

  json canonical;
  canonical["negators"] = lex.negators_;
  canonical["negation_window"] = lex.negation_window_;
  for (Step step : kAllSteps) {
    const std::string name(StepName(step));
    for (const auto& rule : lex.rules_[Ordinal(step)]) {
      json kws = json::array();
      for (const auto& k : rule.keywords) kws.push_back(k.text);
      canonical["categories"][name][std::string(LabelName(rule.category))] =
          kws;
    }
    json prec = json::array();
    for (Label l : lex.precedence_[Ordinal(step)]) prec.push_back(LabelName(l));
    canonical["precedence"][name] = prec;
  }
  lex.hash_ = Sha256Hex(canonical.dump());
  return lex;
}

Lexicon LoadLexiconFile(const std::filesystem::path& file) {
  return LoadLexicon(ReadTextFile(file));
}

ClassifiedTurn Classify(const Lexicon& lexicon, Step step,
                        std::string_view text) {
  if (Ordinal(step) >= kNumSteps) {
    throw UnknownStep("step ordinal out of range");
  }
  ClassifiedTurn result{step, std::string(text), Label::kNoMatch, std::nullopt};
  const std::vector<Token> tokens = TokenizeWithSentences(text);
  if (tokens.empty()) return result;

  std::vector<bool> consumed(tokens.size(), false);
  std::vector<Match> matches;

  // Pass 1: phrases, longest first, leftmost first within a length.
  std::vector<std::pair<const KeywordRule*, const Keyword*>> phrases;
  for (const auto& rule : lexicon.rules(step)) {
    for (const auto& kw : rule.keywords) {
      if (kw.is_phrase) phrases.emplace_back(&rule, &kw);
    }
  }
  std::stable_sort(phrases.begin(), phrases.end(), [](auto& a, auto& b) {
    return a.second->tokens.size() > b.second->tokens.size();
  });
  for (const auto& [rule, kw] : phrases) {
    const std::size_t n = kw->tokens.size();
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      bool hit = true;
      for (std::size_t k = 0; k < n && hit; ++k) {
        hit = !consumed[i + k] && tokens[i + k].text == kw->tokens[k] &&
              tokens[i + k].sentence == tokens[i].sentence;
      }
      if (!hit) continue;
      for (std::size_t k = 0; k < n; ++k) consumed[i + k] = true;
      matches.push_back({rule->category, kw, i, false, std::nullopt});
      i += n - 1;
    }
  }

  // Pass 2: single words on unconsumed tokens.
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (consumed[i]) continue;
    for (const auto& rule : lexicon.rules(step)) {
      for (const auto& kw : rule.keywords) {
        if (!kw.is_phrase && kw.tokens[0] == tokens[i].text) {
          matches.push_back({rule.category, &kw, i, false, std::nullopt});
        }
      }
    }
  }

  // Negation: an unconsumed negator shortly before the match start.
  const std::size_t window =
      static_cast<std::size_t>(std::max(0, lexicon.negation_window()));
  for (auto& m : matches) {
    const std::size_t lo = m.start >= window ? m.start - window : 0;
    for (std::size_t j = m.start; j-- > lo;) {
      if (tokens[j].sentence != tokens[m.start].sentence) break;
      if (!consumed[j] && lexicon.IsNegator(tokens[j].text)) {
        m.suppressed = true;
        m.suppressor = j;
        break;
      }
    }
  }

  // A negator-keyword that negated its own category cancels out.
  for (auto& m : matches) {
    if (m.suppressed || m.keyword->is_phrase ||
        !lexicon.IsNegator(tokens[m.start].text)) {
      continue;
    }
    for (const auto& other : matches) {
      if (&other != &m && other.suppressor == m.start &&
          other.category == m.category) {
        m.suppressed = true;
        break;
      }
    }
  }

  for (Label candidate : lexicon.precedence(step)) {
    for (const auto& m : matches) {
      if (!m.suppressed && m.category == candidate) {
        result.category = candidate;
        result.matched_keyword = m.keyword->text;
        return result;
      }
    }
  }
  return result;
}

ClassifiedTurn Classify(const Lexicon& lexicon, std::string_view step_name,
                        std::string_view text) {
  auto step = ParseStep(step_name);
  if (!step) throw UnknownStep("unknown analysis step '" +
                               std::string(step_name) + "'");
  return Classify(lexicon, *step, text);
}

std::vector<Label> ClassifyConversation(
    const Lexicon& lexicon,
    std::span<const std::pair<Step, std::string>> turns) {
  std::vector<Label> out;
  out.reserve(turns.size());
  for (const auto& [step, text] : turns) {
    out.push_back(Classify(lexicon, step, text).category);
  }
  return out;
}

}  // namespace symreward
