// Copyright 2026 The replearn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "replearn/cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "replearn/harness.hpp"

namespace replearn::cli {
namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "replearn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "replearn_cli_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

TEST(Cli, HelpExitsZeroAndListsFlags) {
  const auto top = run({"--help"});
  EXPECT_EQ(top.code, kOk);
  EXPECT_NE(top.out.find("step-verify"), std::string::npos);
  const auto sub = run({"replicate", "--help"});
  EXPECT_EQ(sub.code, kOk);
  for (const char* flag : {"--config", "--out", "--seed", "--threads", "--json", "--epsilon", "--trials"}) {
    EXPECT_NE(sub.out.find(flag), std::string::npos) << flag;
  }
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run({}).code, kUsage);
  EXPECT_EQ(run({"balls", "--d", "2", "--r", "2", "--nope"}).code, kUsage);
  EXPECT_EQ(run({"balls", "--d", "2"}).code, kUsage);
  const auto bad_k = run({"learn", "--k", "9"});
  EXPECT_EQ(bad_k.code, kUsage);
  EXPECT_NE(bad_k.err.find("11"), std::string::npos);
  EXPECT_EQ(run({"tail", "--d", "2", "--k", "5", "--r", "3"}).code, kUsage);
  EXPECT_EQ(run({"replicate", "--config", "/nonexistent/x.cfg"}).code, kUsage);
}

TEST(Cli, ResourceErrorsExitTwo) {
  EXPECT_EQ(run({"spectrum", "--d", "3", "--k", "13"}).code, kOk);
  EXPECT_EQ(run({"learn", "--d", "6", "--k", "101", "--epsilon", "0.5", "--ball-cap", "100"}).code, kResource);
  EXPECT_EQ(run({"mode", "--d", "2", "--k", "11", "--n", "9"}).code, kResource);
}

TEST(Cli, SpectrumExample) {
  const auto r = run({"spectrum", "--d", "1", "--k", "3"});
  ASSERT_EQ(r.code, kOk);
  EXPECT_EQ(r.out, "coords,eigenvalue\n(0),3\n(1),0\n(2),0\n");
  EXPECT_NE(r.err.find("max_abs_deviation"), std::string::npos);
}

TEST(Cli, BallsExample) {
  const auto r = run({"balls", "--d", "2", "--r", "2"});
  ASSERT_EQ(r.code, kOk);
  EXPECT_NE(r.out.find("count,13\n"), std::string::npos);
  const auto w = run({"balls", "--d", "2", "--r", "2", "--modulus", "5", "--table"});
  ASSERT_EQ(w.code, kOk);
  EXPECT_EQ(w.out, "t,count\n0,1\n1,4\n2,8\n");
}

TEST(Cli, JsonIsOneDocument) {
  const auto r = run({"balls", "--d", "2", "--r", "2", "--json"});
  ASSERT_EQ(r.code, kOk);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["command"], "balls");
  EXPECT_EQ(j["summary"]["count"], "13");

  const auto s = run({"spectrum", "--d", "1", "--k", "5", "--json"});
  ASSERT_EQ(s.code, kOk);
  const auto js = nlohmann::json::parse(s.out);
  EXPECT_EQ(js["table"]["rows"].size(), 5u);
  EXPECT_TRUE(s.err.empty());
}

TEST(Cli, DeterministicGivenSeed) {
  const std::vector<std::string> args = {"replicate", "--d", "3", "--k", "11", "--n", "20", "--trials", "200", "--seed", "9"};
  const auto a = run(args);
  auto with_threads = args;
  with_threads.insert(with_threads.end(), {"--threads", "1"});
  const auto b = run(with_threads);
  ASSERT_EQ(a.code, kOk);
  EXPECT_EQ(a.out, b.out);
  auto other = args;
  other.back() = "10";
  EXPECT_NE(run(other).out, a.out);
}

TEST(Cli, ReplicateWritesSweepSchema) {
  const auto cfg = scratch("exp.cfg");
  const auto out = scratch("rep.csv");
  {
    std::ofstream f(cfg);
    f << "d = 3\nk = 11\nepsilon = 0.3\nn = 20\ntrials = 100\nmaster_seed = 5\n";
  }
  const auto r = run({"replicate", "--config", cfg.string(), "--out", out.string()});
  ASSERT_EQ(r.code, kOk) << r.err;
  std::ifstream in(out);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, kSweepHeader);
  EXPECT_EQ(row.rfind("3,11,", 0), 0u);
  EXPECT_TRUE(row.ends_with(",5"));
}

TEST(Cli, SweepRowsPerGridPoint) {
  const auto r = run({"sweep", "--d", "2", "--k", "11", "--trials", "50", "--sweep-n", "5,10,20"});
  ASSERT_EQ(r.code, kOk) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) ++count;
  EXPECT_EQ(count, 4);
}

TEST(Cli, VerificationFailuresExitThree) {
  EXPECT_EQ(run({"coupling", "--d", "3", "--k", "11", "--n", "20"}).code, kVerification);
  EXPECT_EQ(run({"coupling", "--x", "1,1", "--y", "2,0"}).code, kOk);
  EXPECT_EQ(run({"coupling", "--x", "2,0", "--y", "1,1"}).code, kUsage);
}

TEST(Cli, EverySubcommandRuns) {
  const std::vector<std::vector<std::string>> cases = {
      {"learn", "--d", "3", "--k", "11", "--n", "30"},
      {"mode", "--d", "1", "--k", "3", "--n", "2"},
      {"expansion", "--d", "2", "--k", "5", "--radius", "1"},
      {"tail", "--d", "3", "--k", "11", "--trials", "1000", "--exact"},
      {"step-verify", "--d", "2", "--k", "211", "--n", "1", "--trials", "20000"},
      {"lo-check", "--x", "1,1", "--k", "5"},
  };
  for (const auto& c : cases) {
    const auto r = run(c);
    EXPECT_EQ(r.code, kOk) << c.front() << ": " << r.err;
    EXPECT_FALSE(r.out.empty()) << c.front();
  }
}

}  // namespace
}  // namespace replearn::cli
