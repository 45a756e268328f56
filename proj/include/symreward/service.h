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

// Batch scoring over HTTP. Configs are read once at startup from
//   <config_dir>/graphs/<id>.json and <config_dir>/lexicons/<id>.json
// and are shared read-only between requests.
//
//   POST /v1/score      {"graph_id", "lexicon_id", "reward_config"?,
//                        "conversations": [{"id", "coverage"?, "turns": [
//                          {"step", "prediction", "target",
//                           "target_length_tokens"?}]}]}
//   POST /v1/classify   {"step", "texts": [...], "lexicon_id"?}
//   GET  /v1/graph/{id}
//   GET  /healthz
//
// A conversation the reward engine rejects gets its own status 422 inside an
// HTTP 200 response; the rest of the batch is still scored.

#ifndef SYMREWARD_SERVICE_H_
#define SYMREWARD_SERVICE_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "symreward/classifier.h"
#include "symreward/execution.h"
#include "symreward/graph.h"

namespace httplib {
class Server;
}

namespace symreward {

inline constexpr std::string_view kDefaultConfigId = "bma-default";

struct ServiceOptions {
  std::filesystem::path config_dir = "config";
  std::size_t max_batch = 1024;
  // Bearer token required on every endpoint but /healthz when set.
  std::optional<std::string> auth_token;
  Execution execution = Execution::kParallel;
};

struct HttpReply {
  int status = 200;
  nlohmann::json body;
};

class ScoringService {
 public:
  // Loads every graph and lexicon in the config directory. Throws IoError
  // when a directory is missing, or the loader's error for a bad file.
  explicit ScoringService(ServiceOptions options);

  HttpReply Score(std::string_view body) const;
  HttpReply ClassifyTexts(std::string_view body) const;
  HttpReply GraphInfo(std::string_view id) const;
  HttpReply Health() const;
  // True when no token is configured or the header carries it.
  bool Authorized(std::string_view authorization_header) const;

  const ServiceOptions& options() const { return options_; }
  const std::map<std::string, ReasoningGraph, std::less<>>& graphs() const {
    return graphs_;
  }
  const std::map<std::string, Lexicon, std::less<>>& lexicons() const {
    return lexicons_;
  }

  // Installs the routes on `server`.
  void Register(httplib::Server& server) const;

 private:
  ServiceOptions options_;
  std::map<std::string, ReasoningGraph, std::less<>> graphs_;
  std::map<std::string, Lexicon, std::less<>> lexicons_;
};

// Reads the token from SYMREWARD_AUTH_TOKEN; empty counts as unset.
std::optional<std::string> AuthTokenFromEnvironment();

// Blocks until the server stops. Returns false if the bind fails.
bool Serve(const ScoringService& service, const std::string& host, int port);

}  // namespace symreward

#endif  // SYMREWARD_SERVICE_H_
