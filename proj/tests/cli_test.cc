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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "symreward/hashing.h"
#include "symreward/io.h"
#include "test_support.h"

namespace symreward {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string Cli() {
  const char* cli = std::getenv("SYMREWARD_CLI");
  return cli ? cli : "build/symreward";
}

fs::path Scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "symreward_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with the shipped config dir; stdout and stderr are merged.
Run Exec(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / "symreward_cli_test.log";
  const std::string cmd = "'" + Cli() + "' --config-dir '" +
                          testing::ConfigDir().string() + "' " + args + " > '" +
                          log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = ReadTextFile(log);
  return r;
}

std::vector<json> Lines(const fs::path& file) {
  std::vector<json> out;
  for (const auto& line : SplitLines(ReadTextFile(file))) {
    out.push_back(json::parse(line));
  }
  return out;
}

std::string SmallCounts() {
  return "--counts Healthy=6,AML=6,MM=6,BloodContamination=6,"
         "ParticleContamination=6";
}

TEST_CASE("validate accepts the shipped configs") {
  const Run r = Exec("validate");
  CHECK(r.code == 0);
  CHECK(r.out.find("8 concrete paths") != std::string::npos);
}

TEST_CASE("validate names a missing answer template") {
  const fs::path dir = Scratch("missing_template");
  json bank = json::parse(
      ReadTextFile(testing::ConfigDir() / "templates" / "bma-default.json"));
  bank["answers"]["Abnormality"].erase("Abnormal");
  WriteTextFile(dir / "bank.json", bank.dump());
  const Run r = Exec("--templates '" + (dir / "bank.json").string() + "' validate");
  CHECK(r.code == 1);
  CHECK(r.out.find("(Abnormality, Abnormal)") != std::string::npos);
}

TEST_CASE("validate rejects an empty keyword list") {
  const fs::path dir = Scratch("empty_keywords");
  json lex = json::parse(
      ReadTextFile(testing::ConfigDir() / "lexicons" / "bma-default.json"));
  lex["categories"]["CellQuality"]["Clot"] = json::array();
  WriteTextFile(dir / "lex.json", lex.dump());
  const Run r = Exec("--lexicon '" + (dir / "lex.json").string() + "' validate");
  CHECK(r.code == 1);
  CHECK(r.out.find("Clot") != std::string::npos);
}

TEST_CASE("synth counts, determinism and meta line") {
  const fs::path dir = Scratch("synth");
  Run r = Exec("synth --counts healthy=2 --out '" + (dir / "h.jsonl").string() + "'");
  REQUIRE(r.code == 0);
  auto lines = Lines(dir / "h.jsonl");
  REQUIRE(lines.size() == 3);
  CHECK(lines[0].contains("meta"));
  CHECK(lines[0]["meta"]["toolkit_version"].is_string());
  CHECK(lines[0]["meta"]["graph_hash"].is_string());

  const std::string args = SmallCounts() +
                           " --scenario-mix SI=1,DF=1,CQ_W=1 --seed 4 "
                           "--paraphraser offline --out ";
  REQUIRE(Exec("synth " + args + "'" + (dir / "a.jsonl").string() + "'").code == 0);
  REQUIRE(Exec("synth " + args + "'" + (dir / "b.jsonl").string() + "'").code == 0);
  CHECK(Sha256File(dir / "a.jsonl") == Sha256File(dir / "b.jsonl"));
  CHECK(Lines(dir / "a.jsonl").size() == 31);
  CHECK(fs::exists(dir / "a.jsonl.manifest.json"));

  r = Exec("synth --counts Healthy=-1 --out '" + (dir / "x.jsonl").string() + "'");
  CHECK(r.code == 1);
  r = Exec("synth --paraphraser magic --out '" + (dir / "x.jsonl").string() + "'");
  CHECK(r.code == 2);
}

TEST_CASE("synth reference corpus size") {
  const fs::path dir = Scratch("full");
  const Run r = Exec("synth --counts paper-default --out '" +
                     (dir / "d.jsonl").string() + "'");
  REQUIRE(r.code == 0);
  CHECK(r.out.find("wrote 16340 conversations") != std::string::npos);
  CHECK(Lines(dir / "d.jsonl").size() == 16341);
}

TEST_CASE("score totals and toggles") {
  const fs::path dir = Scratch("score");
  const std::string data = (dir / "d.jsonl").string();
  REQUIRE(Exec("synth " + SmallCounts() +
               " --scenario-mix SI=1,DF=1,II=1 --out '" + data + "'")
              .code == 0);
  REQUIRE(Exec("score --dataset '" + data + "' --self --out '" +
               (dir / "all.jsonl").string() + "'")
              .code == 0);
  REQUIRE(Exec("score --dataset '" + data + "' --self --no-rs --out '" +
               (dir / "no_rs.jsonl").string() + "'")
              .code == 0);
  const auto all = Lines(dir / "all.jsonl");
  const auto no_rs = Lines(dir / "no_rs.jsonl");
  REQUIRE(all.size() == 31);
  CHECK(all[0]["meta"]["reward_config"]["lambda"] == 0.5);
  CHECK(no_rs[0]["meta"]["reward_config"]["enable_consistency"] == false);
  for (std::size_t i = 1; i < all.size(); ++i) {
    CHECK(all[i]["breakdown"]["total"].get<double>() == 1.5);
    CHECK(no_rs[i]["breakdown"]["total"].get<double>() == 1.0);
  }
}

TEST_CASE("score and eval error exits") {
  const fs::path dir = Scratch("errors");
  const std::string data = (dir / "d.jsonl").string();
  REQUIRE(Exec("synth --counts AML=3 --out '" + data + "'").code == 0);
  CHECK(Exec("score --dataset '" + data + "' --predictions /nonexistent/p.jsonl"
             " --out '" + (dir / "s.jsonl").string() + "'")
            .code == 2);
  CHECK(Exec("score --dataset /nonexistent/d.jsonl --self --out x").code == 2);
  CHECK(Exec("score --dataset '" + data + "' --out x").code == 2);
  CHECK(Exec("frobnicate").code == 2);
  // A prediction file that does not join.
  WriteTextFile(dir / "p.jsonl",
                R"({"image_id": "zz", "scenario": "SI", "turns": []})" "\n");
  CHECK(Exec("eval --dataset '" + data + "' --predictions '" +
             (dir / "p.jsonl").string() + "' --out '" + (dir / "e").string() + "'")
            .code == 1);
}

TEST_CASE("eval writes report files with hashes") {
  const fs::path dir = Scratch("eval");
  const std::string data = (dir / "d.jsonl").string();
  REQUIRE(Exec("synth " + SmallCounts() + " --out '" + data + "'").code == 0);
  const Run r = Exec("eval --dataset '" + data + "' --self --with-reward --out '" +
                     (dir / "r").string() + "'");
  REQUIRE(r.code == 0);
  const json report = json::parse(ReadTextFile(dir / "r.json"));
  const json meta = Lines(data)[0]["meta"];
  CHECK(report.dump().find(meta["dataset_sha256"].get<std::string>()) !=
        std::string::npos);
  const std::string csv = ReadTextFile(dir / "r.csv");
  CHECK(csv.find("0.3.0") != std::string::npos);
  CHECK(csv.find("all,150,30,1.000000,1.000000,1.000000,0.000000") !=
        std::string::npos);
  const Run cmp = Exec("compare --baseline '" + (dir / "r.json").string() +
                       "' --candidate '" + (dir / "r.json").string() + "'");
  CHECK(cmp.code == 0);
  CHECK(cmp.out.find("all,a_q,1.000000,1.000000,0.000000,0.000000") !=
        std::string::npos);
}

TEST_CASE("train and sweep outputs") {
  const fs::path dir = Scratch("train");
  const std::string data = (dir / "d.jsonl").string();
  REQUIRE(Exec("synth " + SmallCounts() + " --out '" + data + "'").code == 0);
  const std::string args = "--dataset '" + data + "' --epochs 5 --batch-size 32 ";
  REQUIRE(Exec("train " + args + "--seed 2 --out '" + (dir / "a").string() + "'").code == 0);
  REQUIRE(Exec("train " + args + "--seed 2 --out '" + (dir / "b").string() + "'").code == 0);
  const std::string trace = ReadTextFile(dir / "a" / "trace.csv");
  CHECK(trace == ReadTextFile(dir / "b" / "trace.csv"));
  CHECK(trace.find("# toolkit_version=") != std::string::npos);
  CHECK(trace.find("epoch,reward,kl,a_q,h_cc\n") != std::string::npos);
  const json policy = json::parse(ReadTextFile(dir / "a" / "policy.json"));
  CHECK(policy["version"] == "1");
  CHECK(policy["meta"]["graph_hash"] == policy["graph_hash"]);
  CHECK(fs::exists(dir / "a" / "summary.json"));

  REQUIRE(Exec("sweep " + args + "--lambdas 0.5 --seeds 1 --out '" +
               (dir / "s").string() + "'")
              .code == 0);
  const std::string sweep = ReadTextFile(dir / "s" / "sweep.csv");
  CHECK(sweep.find("lambda,seed,a_q,h_cc,reward,kl\n") != std::string::npos);
  CHECK(sweep.find("\n0.5,median,") != std::string::npos);
  CHECK(Exec("sweep " + args + "--lambdas 0.5,x --out '" + (dir / "t").string() + "'")
            .code == 2);
}

TEST_CASE("run config supplies seed and reward overrides") {
  const fs::path dir = Scratch("run_config");
  const std::string data = (dir / "d.jsonl").string();
  WriteTextFile(dir / "run.json", R"({"seed": 9, "reward": {"lambda": 2.0}})");
  const std::string rc = "--run-config '" + (dir / "run.json").string() + "' ";
  REQUIRE(Exec(rc + "synth --counts MM=4 --out '" + data + "'").code == 0);
  CHECK(Lines(data)[0]["meta"]["seed"] == 9);
  REQUIRE(Exec(rc + "score --dataset '" + data + "' --self --out '" +
               (dir / "s.jsonl").string() + "'")
              .code == 0);
  CHECK(Lines(dir / "s.jsonl")[1]["breakdown"]["total"].get<double>() == 3.0);
  WriteTextFile(dir / "bad.json", R"({"sed": 9})");
  CHECK(Exec("--run-config '" + (dir / "bad.json").string() + "' validate").code == 1);
  CHECK(Exec("--run-config /nonexistent/run.json validate").code == 2);
}

TEST_CASE("serve answers health checks") {
  const fs::path dir = Scratch("serve");
  // Find a free port, then hand it to the CLI.
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  const std::string pidfile = (dir / "pid").string();
  const std::string cmd = "'" + Cli() + "' --config-dir '" +
                          testing::ConfigDir().string() + "' serve --port " +
                          std::to_string(port) + " > '" + (dir / "log").string() +
                          "' 2>&1 & echo $! > '" + pidfile + "'";
  REQUIRE(std::system(cmd.c_str()) == 0);
  httplib::Client client("127.0.0.1", port);
  httplib::Result res;
  for (int i = 0; i < 100 && !res; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
    res = client.Get("/healthz");
  }
  const std::string pid = ReadTextFile(pidfile);
  CHECK(std::system(("kill " + pid).c_str()) == 0);
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body)["status"] == "ok");
}

}  // namespace
}  // namespace symreward
