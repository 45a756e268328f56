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

#include "symreward/service.h"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <utility>
#include <vector>

#include "httplib.h"
#include "symreward/batch.h"
#include "symreward/errors.h"
#include "symreward/json_io.h"
#include "symreward/reward.h"
#include "symreward/version.h"

namespace symreward {
namespace {

using nlohmann::json;

HttpReply Fail(int status, std::string_view type, std::string_view message) {
  return {status,
          {{"error", {{"type", type}, {"message", message}}},
           {"server_version", kToolkitVersion}}};
}

template <typename Map>
std::map<std::string, typename Map::mapped_type, std::less<>> LoadAll(
    const std::filesystem::path& dir, auto loader) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("config directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::map<std::string, typename Map::mapped_type, std::less<>> out;
  for (const auto& f : files) out.emplace(f.stem().string(), loader(f));
  return out;
}

std::string StringField(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw SchemaError(std::string("field '") + key + "' must be a string");
  }
  return it->get<std::string>();
}

std::string IdOr(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) return std::string(kDefaultConfigId);
  if (!it->is_string()) {
    throw SchemaError(std::string("field '") + key + "' must be a string");
  }
  return it->get<std::string>();
}

// Per-conversation parse; failures become that item's 422.
ScoreItem ParseItem(const json& c) {
  ScoreItem item;
  if (const auto it = c.find("coverage"); it != c.end()) {
    if (*it == "complete") {
      item.coverage = PathCoverage::kComplete;
    } else if (*it == "partial") {
      item.coverage = PathCoverage::kPartialAllowed;
    } else {
      throw SchemaError("coverage must be \"complete\" or \"partial\"");
    }
  }
  const auto turns = c.find("turns");
  if (turns == c.end() || !turns->is_array()) {
    throw SchemaError("field 'turns' must be an array");
  }
  for (const auto& t : *turns) {
    if (!t.is_object()) throw SchemaError("each turn must be an object");
    const std::string name = StringField(t, "step");
    const auto step = ParseStep(name);
    if (!step) throw UnknownStep("unknown step '" + name + "'");
    RewardTurn turn{*step, StringField(t, "prediction"),
                    StringField(t, "target"), std::nullopt};
    if (const auto it = t.find("target_length_tokens");
        it != t.end() && !it->is_null()) {
      if (!it->is_number_unsigned()) {
        throw SchemaError("target_length_tokens must be a non-negative integer");
      }
      turn.target_length_tokens = it->get<std::size_t>();
    }
    item.turns.push_back(std::move(turn));
  }
  return item;
}

}  // namespace

ScoringService::ScoringService(ServiceOptions options)
    : options_(std::move(options)) {
  graphs_ = LoadAll<decltype(graphs_)>(
      options_.config_dir / "graphs",
      [](const std::filesystem::path& f) { return LoadGraphFile(f); });
  lexicons_ = LoadAll<decltype(lexicons_)>(
      options_.config_dir / "lexicons",
      [](const std::filesystem::path& f) { return LoadLexiconFile(f); });
  if (options_.max_batch == 0) throw InvariantError("max batch must be positive");
}

bool ScoringService::Authorized(std::string_view header) const {
  if (!options_.auth_token) return true;
  return header == "Bearer " + *options_.auth_token;
}

HttpReply ScoringService::Score(std::string_view body) const {
  json request;
  try {
    request = json::parse(body);
  } catch (const json::parse_error& e) {
    return Fail(400, "ParseError", e.what());
  }
  if (!request.is_object()) {
    return Fail(400, "SchemaError", "request body must be an object");
  }
  std::string graph_id, lexicon_id;
  RewardConfig config;
  try {
    graph_id = IdOr(request, "graph_id");
    lexicon_id = IdOr(request, "lexicon_id");
    if (const auto it = request.find("reward_config");
        it != request.end() && !it->is_null()) {
      config = ApplyRewardOverrides(config, *it);
    }
  } catch (const Error& e) {
    return Fail(400, ErrorTypeName(e), e.what());
  }
  const auto graph = graphs_.find(graph_id);
  if (graph == graphs_.end()) {
    return Fail(404, "NotFound", "unknown graph id '" + graph_id + "'");
  }
  const auto lexicon = lexicons_.find(lexicon_id);
  if (lexicon == lexicons_.end()) {
    return Fail(404, "NotFound", "unknown lexicon id '" + lexicon_id + "'");
  }
  const auto convs = request.find("conversations");
  if (convs == request.end() || !convs->is_array()) {
    return Fail(400, "SchemaError", "field 'conversations' must be an array");
  }
  if (convs->size() > options_.max_batch) {
    return Fail(413, "BatchTooLarge",
                "batch of " + std::to_string(convs->size()) +
                    " exceeds the maximum of " +
                    std::to_string(options_.max_batch));
  }

  std::vector<json> ids;
  std::set<std::string> seen;
  for (const auto& c : *convs) {
    if (!c.is_object()) {
      return Fail(400, "SchemaError", "each conversation must be an object");
    }
    const auto id = c.find("id");
    if (id == c.end() || !(id->is_string() || id->is_number_integer())) {
      return Fail(400, "SchemaError",
                  "each conversation needs a string or integer 'id'");
    }
    if (!seen.insert(id->dump()).second) {
      return Fail(400, "SchemaError", "duplicate conversation id " + id->dump());
    }
    ids.push_back(*id);
  }

  std::vector<json> results(convs->size());
  std::vector<ScoreItem> items;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < convs->size(); ++i) {
    try {
      items.push_back(ParseItem((*convs)[i]));
      where.push_back(i);
    } catch (const Error& e) {
      results[i] = {{"id", ids[i]},
                    {"status", 422},
                    {"error", {{"type", ErrorTypeName(e)}, {"message", e.what()}}}};
    }
  }
  const auto outcomes = ScoreBatch(graph->second, lexicon->second, items,
                                   config, options_.execution);
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const std::size_t i = where[k];
    if (outcomes[k].breakdown) {
      results[i] = {{"id", ids[i]},
                    {"status", 200},
                    {"breakdown", BreakdownToJson(*outcomes[k].breakdown)}};
    } else {
      results[i] = {{"id", ids[i]},
                    {"status", 422},
                    {"error",
                     {{"type", outcomes[k].error_type},
                      {"message", outcomes[k].error}}}};
    }
  }
  std::size_t failed = 0;
  for (const auto& r : results) failed += r.at("status") != 200;
  return {200,
          {{"server_version", kToolkitVersion},
           {"graph_id", graph_id},
           {"graph_hash", graph->second.content_hash()},
           {"lexicon_id", lexicon_id},
           {"lexicon_hash", lexicon->second.content_hash()},
           {"reward_config", RewardConfigToJson(config)},
           {"n_scored", results.size() - failed},
           {"n_failed", failed},
           {"results", std::move(results)}}};
}

HttpReply ScoringService::ClassifyTexts(std::string_view body) const {
  json request;
  try {
    request = json::parse(body);
  } catch (const json::parse_error& e) {
    return Fail(400, "ParseError", e.what());
  }
  if (!request.is_object()) {
    return Fail(400, "SchemaError", "request body must be an object");
  }
  std::string step_name, lexicon_id;
  std::vector<std::string> texts;
  try {
    step_name = StringField(request, "step");
    lexicon_id = IdOr(request, "lexicon_id");
    const auto it = request.find("texts");
    if (it == request.end() || !it->is_array()) {
      throw SchemaError("field 'texts' must be an array of strings");
    }
    for (const auto& t : *it) {
      if (!t.is_string()) {
        throw SchemaError("field 'texts' must be an array of strings");
      }
      texts.push_back(t.get<std::string>());
    }
  } catch (const Error& e) {
    return Fail(400, ErrorTypeName(e), e.what());
  }
  const auto step = ParseStep(step_name);
  if (!step) return Fail(400, "UnknownStep", "unknown step '" + step_name + "'");
  const auto lexicon = lexicons_.find(lexicon_id);
  if (lexicon == lexicons_.end()) {
    return Fail(404, "NotFound", "unknown lexicon id '" + lexicon_id + "'");
  }
  const auto classified =
      ClassifyBatch(lexicon->second, *step, texts, options_.execution);
  json categories = json::array(), keywords = json::array();
  for (const auto& c : classified) {
    categories.push_back(LabelName(c.category));
    keywords.push_back(c.matched_keyword ? json(*c.matched_keyword)
                                         : json(nullptr));
  }
  return {200,
          {{"server_version", kToolkitVersion},
           {"step", step_name},
           {"lexicon_id", lexicon_id},
           {"lexicon_hash", lexicon->second.content_hash()},
           {"categories", std::move(categories)},
           {"matched_keywords", std::move(keywords)}}};
}

HttpReply ScoringService::GraphInfo(std::string_view id) const {
  const auto graph = graphs_.find(id);
  if (graph == graphs_.end()) {
    return Fail(404, "NotFound", "unknown graph id '" + std::string(id) + "'");
  }
  const ReasoningGraph& g = graph->second;
  json steps = json::array(), categories = json::object(), paths = json::array();
  for (Step s : kAllSteps) {
    steps.push_back(StepName(s));
    json list = json::array();
    for (Label l : g.categories(s)) list.push_back(LabelName(l));
    categories[std::string(StepName(s))] = std::move(list);
  }
  for (const Path& p : g.concrete_paths()) {
    json row = json::array();
    for (Label l : p) row.push_back(LabelName(l));
    paths.push_back(std::move(row));
  }
  return {200,
          {{"server_version", kToolkitVersion},
           {"id", id},
           {"version", g.version()},
           {"steps", std::move(steps)},
           {"categories", std::move(categories)},
           {"n_paths", g.concrete_paths().size()},
           {"paths", std::move(paths)},
           {"hash", g.content_hash()}}};
}

HttpReply ScoringService::Health() const {
  json graphs = json::array(), lexicons = json::array();
  for (const auto& [id, g] : graphs_) graphs.push_back(id);
  for (const auto& [id, l] : lexicons_) lexicons.push_back(id);
  return {200,
          {{"status", "ok"},
           {"version", kToolkitVersion},
           {"server_version", kToolkitVersion},
           {"graphs", std::move(graphs)},
           {"lexicons", std::move(lexicons)},
           {"max_batch", options_.max_batch}}};
}

void ScoringService::Register(httplib::Server& server) const {
  auto send = [](httplib::Response& res, const HttpReply& reply) {
    res.status = reply.status;
    res.set_content(reply.body.dump(), "application/json");
  };
  server.set_pre_routing_handler(
      [this, send](const httplib::Request& req, httplib::Response& res) {
        if (req.path == "/healthz" ||
            Authorized(req.get_header_value("Authorization"))) {
          return httplib::Server::HandlerResponse::Unhandled;
        }
        send(res, Fail(401, "Unauthorized", "missing or wrong bearer token"));
        return httplib::Server::HandlerResponse::Handled;
      });
  server.set_exception_handler([send](const httplib::Request&,
                                      httplib::Response& res,
                                      std::exception_ptr ep) {
    std::string message = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    send(res, Fail(500, "InternalError", message));
  });
  server.Post("/v1/score",
              [this, send](const httplib::Request& req, httplib::Response& res) {
                send(res, Score(req.body));
              });
  server.Post("/v1/classify",
              [this, send](const httplib::Request& req, httplib::Response& res) {
                send(res, ClassifyTexts(req.body));
              });
  server.Get(R"(/v1/graph/([^/]+))",
             [this, send](const httplib::Request& req, httplib::Response& res) {
               send(res, GraphInfo(req.matches[1].str()));
             });
  server.Get("/healthz",
             [this, send](const httplib::Request&, httplib::Response& res) {
               send(res, Health());
             });
}

std::optional<std::string> AuthTokenFromEnvironment() {
  const char* token = std::getenv("SYMREWARD_AUTH_TOKEN");
  if (token == nullptr || *token == '\0') return std::nullopt;
  return std::string(token);
}

bool Serve(const ScoringService& service, const std::string& host, int port) {
  httplib::Server server;
  service.Register(server);
  return server.listen(host, port);
}

}  // namespace symreward
