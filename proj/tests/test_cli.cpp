// Copyright 2026 The RankForge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result run(const std::string& args) {
  Result r;
  const std::string cmd = std::string(RANKFORGE_CLI) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string alexnet() { return rftest::data_file("alexnet.json"); }

std::size_t line_count(const fs::path& p) {
  const auto s = rftest::slurp(p);
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

void write_blob(const fs::path& p, std::uint64_t rows, std::uint64_t cols, float seed) {
  std::string bytes;
  auto put64 = [&](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  put64(rows);
  put64(cols);
  for (std::uint64_t i = 0; i < rows * cols; ++i) {
    const float f = std::sin(seed + static_cast<float>(i));
    char raw[4];
    std::memcpy(raw, &f, 4);
    bytes.append(raw, 4);
  }
  rftest::spit(p, bytes);
}

}  // namespace

TEST_CASE("plan prints one row per optimized layer") {
  auto r = run("plan --model " + alexnet() + " --layers conv_only");
  CHECK(r.code == 0);
  CHECK(r.out.find("layers          8") != std::string::npos);
  CHECK(r.out.find("conv5b") != std::string::npos);
  r = run("plan --model " + rftest::data_file("vgg16.json") + " --layers conv_only --json");
  CHECK(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["layers"].size() == 13);
}

TEST_CASE("validation failures exit with 2") {
  rftest::TempDir dir;
  rftest::spit(dir / "fc.json",
               R"({"layers":[{"name":"fc","kind":"fc","in_channels":64,"out_channels":10}]})");
  CHECK(run("plan --model " + (dir / "fc.json").string() + " --layers conv_only").code == 2);
  CHECK(run("plan --model " + alexnet() + " --seed abc").code == 2);
  CHECK(run("plan --model " + alexnet() + " --no-such-flag").code == 2);
  CHECK(run("plan").code == 2);
  CHECK(run("search --model " + alexnet() + " --evaluator synthetic --out " +
            (dir / "x").string())
            .code == 2);  // no accuracy target
}

TEST_CASE("same seed gives byte-identical traces") {
  rftest::TempDir dir;
  const std::string common = "search --model " + alexnet() +
                             " --evaluator synthetic --tau-a 0.92 --seed 7 --out ";
  REQUIRE(run(common + (dir / "a").string()).code == 0);
  REQUIRE(run(common + (dir / "b").string()).code == 0);
  CHECK(rftest::slurp(dir / "a" / "trace.jsonl") == rftest::slurp(dir / "b" / "trace.jsonl"));
  CHECK(rftest::slurp(dir / "a" / "final_ranks.json") ==
        rftest::slurp(dir / "b" / "final_ranks.json"));
}

TEST_CASE("config file with flag overrides") {
  rftest::TempDir dir;
  rftest::spit(dir / "cfg.json", R"({"model":")" + alexnet() +
                                     R"(","evaluator":"synthetic","tau_a":0.5,"seed":1,)"
                                     R"("layers":"conv_only","out":")" +
                                     (dir / "o").string() + "\"}");
  auto r = run("search --config " + (dir / "cfg.json").string() + " --tau-a 0.95");
  REQUIRE(r.code == 0);
  const auto header = nlohmann::json::parse(rftest::slurp(dir / "o" / "trace.jsonl")
                                                .substr(0, rftest::slurp(dir / "o" / "trace.jsonl").find('\n')));
  CHECK(header["tau_a"] == 0.95);
  CHECK(header["layer_names"].size() == 8);
  rftest::spit(dir / "bad.json", R"({"model":")" + alexnet() + R"(","colour":"red"})");
  CHECK(run("plan --config " + (dir / "bad.json").string()).code == 2);
}

TEST_CASE("half-cost start") {
  rftest::TempDir dir;
  REQUIRE(run("search --model " + alexnet() +
              " --evaluator synthetic --tau-a 0.9 --start half-cost --out " +
              (dir / "h").string())
              .code == 0);
  const auto text = rftest::slurp(dir / "h" / "trace.jsonl");
  const auto header = nlohmann::json::parse(text.substr(0, text.find('\n')));
  CHECK(header["start_cost"].get<double>() < 0.55 * header["c_max"].get<double>());
}

TEST_CASE("evaluator handshake failure exits with 4") {
  rftest::TempDir dir;
  const auto r = run("search --model " + alexnet() + " --tau-a 0.9 --out " +
                     (dir / "e").string() + " --evaluator-command '" + MOCK_EVALUATOR +
                     " --handshake bad'");
  CHECK(r.code == 4);
  CHECK(r.out.find("handshake") != std::string::npos);
}

TEST_CASE("evaluator command from the environment") {
  rftest::TempDir dir;
  const std::string env = std::string("RANKFORGE_EVALUATOR='") + MOCK_EVALUATOR +
                          " --transcript " + (dir / "t.txt").string() + "' ";
  const std::string cmd = env + RANKFORGE_CLI + " search --model " + alexnet() +
                          " --tau-a 0.2 --max-iterations 2 --n-candidates 5 --out " +
                          (dir / "o").string() + " > /dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(line_count(dir / "t.txt") > 0);
  CHECK(fs::exists(dir / "o" / "eval_cache.jsonl"));
}

TEST_CASE("stage two fallback exits with 3") {
  rftest::TempDir dir;
  const auto r = run("search --model " + alexnet() + " --tau-a 0.2 --stage2 --out " +
                     (dir / "f").string() + " --max-iterations 3 --n-candidates 5" +
                     " --evaluator-command '" + MOCK_EVALUATOR +
                     " --stage finetune02=0.9,finetune1=0.1'");
  CHECK(r.code == 3);
  const auto s2 = nlohmann::json::parse(rftest::slurp(dir / "f" / "stage2.json"));
  CHECK(s2["fallback"] == true);
}

TEST_CASE("resume reuses cached evaluations") {
  rftest::TempDir dir;
  const std::string base = "search --model " + alexnet() +
                           " --tau-a 0.5 --n-candidates 10 --seed 3 --out " +
                           (dir / "o").string() + " --evaluator-command '" + MOCK_EVALUATOR +
                           " --transcript " + (dir / "t.txt").string() + "'";
  REQUIRE(run(base).code == 0);
  const auto first = line_count(dir / "t.txt");
  REQUIRE(first > 0);
  REQUIRE(run(base).code == 0);
  CHECK(line_count(dir / "t.txt") == first);
}

TEST_CASE("stage two as its own command") {
  rftest::TempDir dir;
  const std::string out = (dir / "s").string();
  REQUIRE(run("search --model " + alexnet() + " --evaluator synthetic --tau-a 0.9 --out " + out)
              .code == 0);
  const auto r = run("stage2 --model " + alexnet() + " --evaluator synthetic --out " + out);
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "s" / "stage2.json"));
}

TEST_CASE("report writes the documented csv files") {
  rftest::TempDir dir;
  const std::string out = (dir / "s").string();
  REQUIRE(run("search --model " + alexnet() + " --evaluator synthetic --tau-a 0.9 --out " + out)
              .code == 0);
  const auto iterations = line_count(dir / "s" / "trace.jsonl") - 1;
  REQUIRE(run("report --trace " + out + "/trace.jsonl --out " + (dir / "r").string() +
              " --model " + alexnet())
              .code == 0);
  CHECK(line_count(dir / "r" / "iterations.csv") == iterations + 1);
  const auto csv = rftest::slurp(dir / "r" / "iterations.csv");
  CHECK(csv.substr(0, csv.find('\n')) ==
        "iteration,delta_c,sigma,candidates,rejected,best_score,accepted,cost,cost_fraction");
  const auto acc = rftest::slurp(dir / "r" / "accepted.csv");
  CHECK(acc.substr(0, acc.find('\n')) == "iteration,cost,cost_fraction,accuracy");
  CHECK(fs::exists(dir / "r" / "layers.csv"));

  rftest::spit(dir / "bad.jsonl", "{\"type\":\"iteration\"}\n");
  CHECK(run("report --trace " + (dir / "bad.jsonl").string() + " --out " +
            (dir / "r2").string())
            .code == 2);
}

TEST_CASE("decompose writes two sub-layers per layer") {
  rftest::TempDir dir;
  fs::create_directories(dir / "w");
  write_blob(dir / "w" / "c.bin", 3 * 4, 3 * 6, 0.5f);
  write_blob(dir / "w" / "f.bin", 24, 10, 1.5f);
  rftest::spit(dir / "m.json", R"({"layers":[
    {"name":"c","window":3,"in_channels":4,"out_channels":6,"out1":[5,5],"out2":[5,5],"weights":"w/c.bin"},
    {"name":"f","kind":"fc","in_channels":24,"out_channels":10,"weights":"w/f.bin"}]})");
  rftest::spit(dir / "r.json", R"({"ranks":[{"layer":"c","rank":2},{"layer":"f","rank":3}]})");
  const auto r = run("decompose --model " + (dir / "m.json").string() + " --ranks " +
                     (dir / "r.json").string() + " --out " + (dir / "d.json").string());
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(rftest::slurp(dir / "d.json"));
  REQUIRE(doc["layers"].size() == 4);
  CHECK(doc["layers"][0]["window"] == nlohmann::json::array({3, 1}));
  CHECK(doc["layers"][1]["window"] == nlohmann::json::array({1, 3}));
  CHECK(doc["layers"][2]["shape"] == nlohmann::json::array({24, 3}));
  CHECK(run("decompose --model " + alexnet() + " --out " + (dir / "e.json").string()).code ==
        2);
}
