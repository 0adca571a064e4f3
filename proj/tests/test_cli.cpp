// Copyright 2026 The drgne Authors.
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


// Runs the drgne binary and checks exit codes and report files.

#include <sys/wait.h>

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "drgne/io.hpp"

namespace drgne {
namespace {

namespace fs = std::filesystem;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("drgne_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(DRGNE_CLI_PATH) + " " + args + " > " +
                            path("stdout.txt") + " 2> " + path("stderr.txt");
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string read(const std::string& name) const {
    std::ifstream in(path(name), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name), std::ios::binary) << text;
  }

  fs::path dir_;
};

std::string strip_wall_ms(const std::string& text) {
  return std::regex_replace(text, std::regex("\"wall_ms\": [^,\\n]*"),
                            "\"wall_ms\": 0");
}

TEST_F(Cli, SolveSymmetricMarketFindsEquilibrium) {
  ASSERT_EQ(run("casestudy export --out " + path("sym.json")), 0);
  ASSERT_EQ(run("solve --problem " + path("sym.json") + " --out " + path("r.json")), 0);
  const Json r = Json::parse(read("r.json"));
  EXPECT_EQ(r["status"], "GNE");
  for (const auto& c : r["x"]) EXPECT_NEAR(c.get<double>(), 0.161666667, 1e-8);
  EXPECT_NE(read("stdout.txt").find("GNE"), std::string::npos);
}

TEST_F(Cli, SolveHighDemandFloorReportsNonExistence) {
  ASSERT_EQ(run("casestudy export --u-lower 90 --tune-theta --out " + path("u90.json")), 0);
  EXPECT_EQ(run("solve --quiet --problem " + path("u90.json") + " --out " + path("r.json")), 2);
  EXPECT_EQ(Json::parse(read("r.json"))["status"], "NonExistence");
  EXPECT_TRUE(read("stdout.txt").empty());
}

TEST_F(Cli, NodeBudgetExhaustionIsInconclusive) {
  // Forty samples force branch-and-bound; one start per node and a tiny
  // iteration budget keep it from resolving the tightened market.
  ASSERT_EQ(run("casestudy export --u-lower 90 --tune-theta --out " + path("u90.json")), 0);
  Json p = Json::parse(read("u90.json"));
  Json samples = Json::array();
  for (int k = 0; k < 40; ++k) samples.push_back({-15.0 + 0.1 * k});
  p["drcc"]["samples"] = samples;
  p["drcc"]["epsilon"] = 0.2;
  p["drcc"]["theta"] = 4.0;
  write("big.json", p.dump());
  EXPECT_EQ(run("solve --problem " + path("big.json") +
                " --enum-threshold 4 --max-starts 1 --max-nodes 2 --out " +
                path("r.json")),
            3);
  EXPECT_EQ(Json::parse(read("r.json"))["status"], "Inconclusive");
}

TEST_F(Cli, MissingFileIsAnError) {
  EXPECT_EQ(run("solve --problem " + path("absent.json")), 1);
  EXPECT_NE(read("stderr.txt").find("cannot open"), std::string::npos);
}

TEST_F(Cli, MalformedJsonReportsLine) {
  write("bad.json", "{\n\"agents\": [\n  {\"Q\": }\n]}\n");
  EXPECT_EQ(run("solve --problem " + path("bad.json")), 1);
  EXPECT_NE(read("stderr.txt").find("line 3"), std::string::npos);
}

TEST_F(Cli, MissingFieldReportsField) {
  write("bad.json", R"({"agents": [{"Q": [[1]]}], "drcc": {}})");
  EXPECT_EQ(run("solve --problem " + path("bad.json")), 1);
  EXPECT_NE(read("stderr.txt").find("agents[0]: missing field 'p0'"), std::string::npos);
}

TEST_F(Cli, UnknownFlagsAndMissingSubcommandAreErrors) {
  EXPECT_EQ(run("solve --problem x.json --frobnicate"), 1);
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("casestudy table2"), 1);
  EXPECT_EQ(run("casestudy table1 --I 3"), 1);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, CheckCertifiesAndRejects) {
  ASSERT_EQ(run("casestudy export --out " + path("sym.json")), 0);
  ASSERT_EQ(run("solve --problem " + path("sym.json") + " --out " + path("r.json")), 0);
  EXPECT_EQ(run("check --problem " + path("sym.json") + " --point " + path("r.json")), 0);
  EXPECT_TRUE(Json::parse(read("stdout.txt"))["certified"].get<bool>());

  write("off.json", R"({"x": [0.171666667, 0.161666667, 0.161666667]})");
  EXPECT_EQ(run("check --problem " + path("sym.json") + " --point " + path("off.json")), 2);
  EXPECT_NE(read("stderr.txt").find("agent 0 gap"), std::string::npos);
  EXPECT_GT(Json::parse(read("stdout.txt"))["gaps"][0].get<double>(), 0.0);

  write("short.json", R"({"x": [0.16]})");
  EXPECT_EQ(run("check --problem " + path("sym.json") + " --point " + path("short.json")), 1);
}

TEST_F(Cli, SamplesFileOverridesEmbeddedSamples) {
  ASSERT_EQ(run("casestudy export --out " + path("sym.json")), 0);
  // Samples far into the unsafe region make the constraint unattainable.
  write("s.txt", "# delta\n400\n410\n420\n");
  EXPECT_EQ(run("solve --problem " + path("sym.json") + " --samples " + path("s.txt")), 1);
  EXPECT_NE(read("stderr.txt").find("error"), std::string::npos);
  write("ok.txt", "-15\n-16\n-14\n");
  EXPECT_EQ(run("solve --problem " + path("sym.json") + " --samples " + path("ok.txt")), 0);
  write("ragged.txt", "1 2\n3\n");
  EXPECT_EQ(run("solve --problem " + path("sym.json") + " --samples " + path("ragged.txt")), 1);
  EXPECT_NE(read("stderr.txt").find("line 2"), std::string::npos);
}

TEST_F(Cli, CaseStudyRunners) {
  ASSERT_EQ(run("casestudy table1 --out " + path("t.json")), 0);
  EXPECT_EQ(Json::parse(read("t.json"))["rows"].size(), 9u);
  ASSERT_EQ(run("casestudy sweep --I 3,5,10 --out " + path("s.csv")), 0);
  const std::string csv = read("s.csv");
  EXPECT_EQ(csv.rfind("I,price,residual,status,wall_ms\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  ASSERT_EQ(run("casestudy validate --draws 20000 --out " + path("v.json")), 0);
  for (const auto& row : Json::parse(read("v.json"))["rows"])
    EXPECT_TRUE(row["within_bound"].get<bool>());
}

TEST_F(Cli, SameSeedGivesIdenticalReports) {
  ASSERT_EQ(run("casestudy export --u-lower 90 --tune-theta --out " + path("u90.json")), 0);
  EXPECT_EQ(run("solve --problem " + path("u90.json") + " --seed 7 --out " + path("a.json")), 2);
  EXPECT_EQ(run("solve --problem " + path("u90.json") + " --seed 7 --out " + path("b.json")), 2);
  EXPECT_EQ(run("solve --problem " + path("u90.json") + " --seed 7 --threads 3 --out " +
                path("c.json")),
            2);
  EXPECT_EQ(strip_wall_ms(read("a.json")), strip_wall_ms(read("b.json")));
  EXPECT_EQ(strip_wall_ms(read("a.json")), strip_wall_ms(read("c.json")));
  EXPECT_EQ(run("casestudy table1 --out " + path("t1.json")), 0);
  EXPECT_EQ(run("casestudy table1 --out " + path("t2.json")), 0);
  EXPECT_EQ(strip_wall_ms(read("t1.json")), strip_wall_ms(read("t2.json")));
}

TEST_F(Cli, DumpSystemPrintsBigM) {
  ASSERT_EQ(run("casestudy export --out " + path("sym.json")), 0);
  ASSERT_EQ(run("dump-system --problem " + path("sym.json")), 0);
  const Json j = Json::parse(read("stdout.txt"));
  EXPECT_GT(j["M"].get<double>(), 0.0);
  EXPECT_EQ(j["K"], 10);
}

}  // namespace
}  // namespace drgne
