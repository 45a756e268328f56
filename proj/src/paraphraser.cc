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

#include "symreward/paraphraser.h"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <set>

#include "httplib.h"
#include "json.hpp"
#include "symreward/errors.h"

namespace symreward {

std::vector<std::string> OfflinePoolParaphraser::Rephrase(
    const ParaphraseRequest& request) {
  const auto& v = pool_.variants(request.text);
  const std::size_t n = std::min<std::size_t>(
      v.size(), static_cast<std::size_t>(std::max(request.n, 0)));
  return {v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n)};
}

ExternalLlmParaphraser::ExternalLlmParaphraser(Options options)
    : options_(std::move(options)) {}

std::unique_ptr<ExternalLlmParaphraser> ExternalLlmParaphraser::FromEnvironment() {
  Options o;
  if (const char* url = std::getenv("SYMREWARD_PARAPHRASE_URL")) o.url = url;
  if (o.url.empty()) {
    throw TransportError("SYMREWARD_PARAPHRASE_URL is not set");
  }
  if (const char* t = std::getenv("SYMREWARD_PARAPHRASE_TOKEN")) o.token = t;
  if (const char* m = std::getenv("SYMREWARD_PARAPHRASE_MODEL")) o.model = m;
  return std::make_unique<ExternalLlmParaphraser>(std::move(o));
}

std::string QuestionAugmentationPrompt(std::string_view sentence, int n) {
  return "Perform " + std::to_string(n) +
         " times augmentation of the following sentence, it is for medical "
         "questions so make sure you preserve the meaning concisely.\n" +
         std::string(sentence);
}

std::string AnswerAugmentationPrompt(std::string_view sentence,
                                     std::string_view question, int n) {
  return "Perform " + std::to_string(n) +
         " times augmentation of the following sentence, it is for medical "
         "diagnosis so make sure you preserve the meaning concisely: '" +
         std::string(sentence) + "'. Also note that the question is '" +
         std::string(question) +
         "', also don't repeat anything related to in response to the "
         "question, just make sure the single sentence is grammatically "
         "correct and makes sense.";
}

std::vector<std::string> ParseVariantLines(std::string_view reply) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= reply.size()) {
    std::size_t end = reply.find('\n', start);
    if (end == std::string_view::npos) end = reply.size();
    std::string line(reply.substr(start, end - start));
    start = end + 1;
    auto trim = [](std::string& s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      s = b == std::string::npos ? "" : s.substr(b, e - b + 1);
    };
    trim(line);
    // "1. text", "2) text", "- text", "* text"
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) {
      line.erase(0, i + 1);
    } else if (!line.empty() && (line[0] == '-' || line[0] == '*')) {
      line.erase(0, 1);
    }
    trim(line);
    if (line.size() >= 2 && (line.front() == '"' || line.front() == '\'') &&
        line.back() == line.front()) {
      line = line.substr(1, line.size() - 2);
      trim(line);
    }
    if (!line.empty()) out.push_back(std::move(line));
  }
  return out;
}

std::vector<std::string> ExternalLlmParaphraser::Rephrase(
    const ParaphraseRequest& request) {
  // Split "scheme://host[:port]/path" for the client.
  const auto scheme_end = options_.url.find("://");
  const auto path_start = options_.url.find(
      '/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string base = options_.url.substr(0, path_start);
  const std::string path = path_start == std::string::npos
                               ? "/"
                               : options_.url.substr(path_start);

  const std::string prompt =
      request.kind == ParaphraseRequest::Kind::kQuestion
          ? QuestionAugmentationPrompt(request.text, request.n)
          : AnswerAugmentationPrompt(request.text, request.question, request.n);
  nlohmann::json body = {
      {"model", options_.model},
      {"messages", {{{"role", "user"}, {"content", prompt}}}},
  };

  httplib::Client client(base);
  client.set_connection_timeout(options_.timeout_seconds);
  client.set_read_timeout(options_.timeout_seconds);
  httplib::Headers headers;
  if (!options_.token.empty()) {
    headers.emplace("Authorization", "Bearer " + options_.token);
  }
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    throw TransportError("paraphrase request failed: " +
                         httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("paraphrase endpoint returned HTTP " +
                         std::to_string(res->status));
  }
  std::string content;
  try {
    const auto reply = nlohmann::json::parse(res->body);
    content = reply.at("choices").at(0).at("message").at("content")
                  .get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("unexpected paraphrase reply: ") +
                         e.what());
  }
  auto lines = ParseVariantLines(content);
  if (lines.size() > static_cast<std::size_t>(std::max(request.n, 0))) {
    lines.resize(static_cast<std::size_t>(request.n));
  }
  return lines;
}

std::vector<std::string> FilterVariants(
    const Lexicon& lexicon, Step step, Label expected, std::string_view source,
    const std::vector<std::string>& variants) {
  std::vector<std::string> kept;
  std::set<std::string, std::less<>> seen{std::string(source)};
  for (const auto& v : variants) {
    if (!seen.insert(v).second) continue;
    if (Classify(lexicon, step, v).category != expected) continue;
    kept.push_back(v);
  }
  return kept;
}

}  // namespace symreward
