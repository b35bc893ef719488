// Copyright 2026 The mixdial Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mixdial/linearize.hpp"
#include "mixdial/session.hpp"
#include "support/temp_dir.hpp"

#ifndef MIXDIAL_CLI
#error "MIXDIAL_CLI must name the command-line binary"
#endif

namespace fs = std::filesystem;
using mixdial::testing::slurp;
using mixdial::testing::TempDir;

namespace {

int run(const std::string& args, const std::string& redirect = "> /dev/null 2>&1") {
  const int status = std::system((std::string(MIXDIAL_CLI) + " " + args + " " + redirect).c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

/// A tiny config, corpus and checkpoint shared by the tests below.
struct Workspace {
  TempDir dir;
  fs::path config = dir.path() / "run.json";
  fs::path corpus = dir.path() / "corpus";
  fs::path ckpt = dir.path() / "mt.ckpt";
  int gen_status = -1;
  int train_status = -1;

  Workspace() {
    const nlohmann::json cfg = {
        {"generator", {{"train_sessions", 4}, {"dev_sessions", 2}, {"test_sessions", 2}, {"external_sessions", 2}}},
        {"model", {{"width", 16}, {"layers", 1}, {"heads", 2}, {"ff_width", 32}}},
        {"prompt", {{"steps", 2}, {"batch_size", 2}}},
        {"finetune", {{"steps", 2}, {"batch_size", 2}}},
        {"decode", {{"max_target_tokens", 12}}}};
    std::ofstream(config) << cfg.dump(2);
    gen_status = run("-c " + config.string() + " gen-data -o " + corpus.string());
    train_status = run("-c " + config.string() + " train --corpus " + corpus.string() + " -o " + ckpt.string());
  }
  std::string base() const { return "-c " + config.string() + " "; }
};

Workspace& workspace() {
  static Workspace w;
  return w;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit with the config code") {
    CHECK(run("--help") == 0);
    CHECK(run("no-such-command") == 2);
    CHECK(run("train --stage sideways") == 2);
    TempDir dir;
    std::ofstream(dir.path() / "bad.json") << R"({"not_a_key": 1})";
    CHECK(run("-c " + (dir.path() / "bad.json").string() + " gen-data -o " + dir.path().string()) == 2);
  }

  TEST_CASE("missing inputs exit with the data code") {
    TempDir dir;
    CHECK(run("eval --checkpoint " + (dir.path() / "none.ckpt").string() + " --corpus " + dir.path().string()) == 3);
    std::ofstream(dir.path() / "junk.ckpt") << "garbage";
    CHECK(run(workspace().base() + "eval --checkpoint " + (dir.path() / "junk.ckpt").string() + " --corpus " +
              workspace().corpus.string()) == 3);
  }

  TEST_CASE("gen-data is deterministic") {
    Workspace& w = workspace();
    REQUIRE(w.gen_status == 0);
    TempDir again;
    REQUIRE(run(w.base() + "gen-data -o " + again.path().string()) == 0);
    for (const auto& entry : fs::directory_iterator(w.corpus))
      CHECK_MESSAGE(slurp(entry.path()) == slurp(again.path() / entry.path().filename()), entry.path().string());
    TempDir other;
    REQUIRE(run(w.base() + "--seed 99 gen-data -o " + other.path().string()) == 0);
    CHECK(slurp(w.corpus / "train.jsonl") != slurp(other.path() / "train.jsonl"));
  }

  TEST_CASE("train writes a checkpoint and a loss log") {
    Workspace& w = workspace();
    REQUIRE(w.train_status == 0);
    CHECK(fs::exists(w.ckpt));
    const auto log = nlohmann::json::parse(slurp(fs::path(w.ckpt.string() + ".log.json")));
    CHECK(log.contains("provenance"));
    CHECK(log.at("intervals").size() >= 2);
  }

  TEST_CASE("chat with empty input writes an empty transcript") {
    Workspace& w = workspace();
    REQUIRE(w.train_status == 0);
    TempDir dir;
    const fs::path t = dir.path() / "t.jsonl";
    CHECK(run(w.base() + "chat --checkpoint " + w.ckpt.string() + " --corpus " + w.corpus.string() +
                  " --transcript " + t.string(),
              "< /dev/null > /dev/null 2>&1") == 0);
    CHECK(fs::exists(t));
    CHECK(slurp(t).empty());
  }

  TEST_CASE("chat transcripts can be replayed by eval") {
    Workspace& w = workspace();
    REQUIRE(w.train_status == 0);
    TempDir dir;
    std::ofstream(dir.path() / "in.txt") << "hello there\ni need a cheap hotel\n";
    const fs::path t = dir.path() / "t.jsonl", out = dir.path() / "out.txt";
    REQUIRE(run(w.base() + "chat --show-state --checkpoint " + w.ckpt.string() + " --corpus " + w.corpus.string() +
                    " --transcript " + t.string(),
                "< " + (dir.path() / "in.txt").string() + " > " + out.string() + " 2>&1") == 0);
    std::istringstream lines(slurp(out));
    std::size_t wizard = 0, states = 0;
    for (std::string line; std::getline(lines, line);) {
      wizard += line.rfind("wizard> ", 0) == 0;
      if (line.rfind("state> ", 0) == 0) {
        ++states;
        CHECK(mixdial::parse_state(mixdial::split_tokens(line.substr(7))).report.clean());
      }
    }
    CHECK(wizard == 2);
    CHECK(states == 2);
    const auto sessions = mixdial::read_sessions(t);
    REQUIRE(sessions.size() == 1);
    CHECK(sessions[0].turns.size() == 4);

    const fs::path reports = dir.path() / "reports";
    CHECK(run(w.base() + "eval --checkpoint " + w.ckpt.string() + " --corpus " + w.corpus.string() + " --sessions " +
              t.string() + " -o " + reports.string()) == 0);
    for (const char* task : {"dst", "dap", "rg", "e2e"})
      CHECK(fs::exists(reports / (std::string("report_") + task + ".json")));
  }

  TEST_CASE("eval and report over a split") {
    Workspace& w = workspace();
    REQUIRE(w.train_status == 0);
    TempDir dir;
    const fs::path reports = dir.path() / "mt";
    REQUIRE(run(w.base() + "eval --checkpoint " + w.ckpt.string() + " --corpus " + w.corpus.string() +
                " --max-sessions 1 -o " + reports.string()) == 0);
    const fs::path table = dir.path() / "table.txt";
    CHECK(run(w.base() + "report mt=" + reports.string() + " --verify -o " + table.string()) == 0);
    const std::string text = slurp(table);
    CHECK(text.find("Joint Acc.") != std::string::npos);
    CHECK(text.find("METEOR") != std::string::npos);
    CHECK(run(w.base() + "report " + (dir.path() / "missing").string()) == 3);
  }
}
