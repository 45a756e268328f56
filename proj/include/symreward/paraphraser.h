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

// Rephrasing of question and answer templates. The offline implementation
// serves shipped variant lists; the external one asks a chat-completion
// endpoint configured through the environment:
//
//   SYMREWARD_PARAPHRASE_URL    e.g. https://host/v1/chat/completions
//   SYMREWARD_PARAPHRASE_TOKEN  bearer credential (optional)
//   SYMREWARD_PARAPHRASE_MODEL  model name sent with each request
//
// Answer variants are kept only if they classify like their source; see
// FilterVariants.

#ifndef SYMREWARD_PARAPHRASER_H_
#define SYMREWARD_PARAPHRASER_H_

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "symreward/classifier.h"
#include "symreward/templates.h"

namespace symreward {

struct ParaphraseRequest {
  enum class Kind { kQuestion, kAnswer };
  Kind kind = Kind::kQuestion;
  std::string text;
  // The question an answer responds to; unused for questions.
  std::string question;
  int n = 1;
};

class Paraphraser {
 public:
  virtual ~Paraphraser() = default;
  // At most request.n variants, possibly fewer.
  virtual std::vector<std::string> Rephrase(
      const ParaphraseRequest& request) = 0;
  virtual std::string name() const = 0;
};

class OfflinePoolParaphraser : public Paraphraser {
 public:
  explicit OfflinePoolParaphraser(const ParaphrasePool& pool) : pool_(pool) {}
  std::vector<std::string> Rephrase(const ParaphraseRequest& request) override;
  std::string name() const override { return "offline"; }

 private:
  const ParaphrasePool& pool_;
};

class ExternalLlmParaphraser : public Paraphraser {
 public:
  struct Options {
    std::string url;
    std::string token;
    std::string model = "gpt-4";
    int timeout_seconds = 60;
  };

  explicit ExternalLlmParaphraser(Options options);
  // Reads the SYMREWARD_PARAPHRASE_* variables. Throws TransportError when
  // the URL is unset.
  static std::unique_ptr<ExternalLlmParaphraser> FromEnvironment();

  // Throws TransportError on connection failure, non-2xx status or a reply
  // without message content.
  std::vector<std::string> Rephrase(const ParaphraseRequest& request) override;
  std::string name() const override { return "external"; }

 private:
  Options options_;
};

// Prompt strings sent to the external model.
std::string QuestionAugmentationPrompt(std::string_view sentence, int n);
std::string AnswerAugmentationPrompt(std::string_view sentence,
                                     std::string_view question, int n);

// Splits a model reply into one variant per line, dropping list markers,
// surrounding quotes and blank lines.
std::vector<std::string> ParseVariantLines(std::string_view reply);

// Variants that classify to `expected` at `step`, minus duplicates and the
// source text itself.
std::vector<std::string> FilterVariants(const Lexicon& lexicon, Step step,
                                        Label expected,
                                        std::string_view source,
                                        const std::vector<std::string>& variants);

}  // namespace symreward

#endif  // SYMREWARD_PARAPHRASER_H_
