// Copyright 2026 The Curatelab Authors.
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


#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "curatelab/experiment.hpp"
#include "curatelab/runner.hpp"

namespace curatelab {
namespace {

namespace fs = std::filesystem;

std::string KeyOf(const std::string& text) {
  try {
    ParseSpec(text);
  } catch (const ValidationError& e) {
    return e.key();
  }
  return "<accepted>";
}

class ScratchDir {
 public:
  ScratchDir() {
    path_ = fs::temp_directory_path() /
            ("curatelab_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

std::string ReadAll(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int RunCli(const std::string& args) {
  const std::string cmd = std::string(CURATELAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path WriteSpec(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

TEST(ParseSpecTest, MinimalSpecGetsDefaults) {
  const auto spec = ParseSpec("command = verify-bounds\n");
  EXPECT_EQ(spec.command, Command::kVerifyBounds);
  EXPECT_EQ(spec.environment.kind, EnvironmentKind::kClasses);
  EXPECT_EQ(spec.environment.classes, 10u);
  EXPECT_EQ(spec.loop.iterations, 10u);
  EXPECT_EQ(spec.loop.n_gen, 2000u);
  EXPECT_EQ(spec.loop.n_pairs, 512u);
  EXPECT_EQ(spec.loop.attack_cfg.kappa, 0.2);
  EXPECT_EQ(spec.loop.fit.l2_reg, 30.0);
  EXPECT_FALSE(spec.loop.curation.lambda.has_value());
  EXPECT_EQ(spec.seeds, (std::vector<uint64_t>{1, 2, 3}));
  EXPECT_EQ(spec.instance_suite.instances, 200u);
}

TEST(ParseSpecTest, ReadsValuesAndComments) {
  const auto spec = ParseSpec(
      "# attack run\n"
      "command = simulate   # trailing comment\n"
      "environment = gaussian8\n"
      "phi = 0.5\n"
      "lambda = 3\n"
      "attack = gradient\n"
      "seeds = 4, 5\n"
      "update = exact-kinf\n");
  EXPECT_EQ(spec.command, Command::kSimulate);
  EXPECT_EQ(spec.environment.kind, EnvironmentKind::kGaussian8);
  EXPECT_EQ(spec.loop.curation.phi, 0.5);
  EXPECT_EQ(spec.loop.curation.lambda, 3.0);
  EXPECT_EQ(spec.loop.attack, AttackMethod::kGradient);
  EXPECT_EQ(spec.seeds, (std::vector<uint64_t>{4, 5}));
  EXPECT_EQ(spec.loop.update, UpdateMode::kExactKInf);
  EXPECT_FALSE(ParseSpec("command = simulate\nlambda = inf\n").loop.curation.lambda);
}

TEST(ParseSpecTest, ErrorsNameTheKey) {
  EXPECT_EQ(KeyOf("command = simulate\nkappa = 1.5\n"), "kappa");
  EXPECT_EQ(KeyOf("command = simulate\nphi = 0.1\nphi = 0.2\n"), "phi");
  EXPECT_EQ(KeyOf("command = simulate\nbogus = 1\n"), "bogus");
  EXPECT_EQ(KeyOf("phi = 0.1\n"), "command");
  EXPECT_EQ(KeyOf("command = verify-bounds\ninstances = 0\n"), "instances");
  EXPECT_EQ(KeyOf("command = attack-bench\nmethods = gradient\n"), "methods");
  EXPECT_EQ(KeyOf("command = simulate\nphi = abc\n"), "phi");
  EXPECT_EQ(KeyOf("command = simulate\nattack = magic\n"), "attack");
  EXPECT_EQ(KeyOf("command = launch\n"), "command");
  EXPECT_EQ(KeyOf("command = attack-bench\nmethods = none, gradient\n"), "<accepted>");
  const std::string msg = [] {
    try {
      ParseSpec("command = simulate\nkappa = 1.5\n");
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string();
  }();
  EXPECT_NE(msg.find("kappa"), std::string::npos);
}

TEST(CliTest, ValidationFailuresExitOne) {
  ScratchDir dir;
  const auto bad = WriteSpec(dir.path(), "bad.spec", "command = verify-bounds\nkappa = 1.5\n");
  EXPECT_EQ(RunCli("verify-bounds --spec " + bad.string()), 1);
  const auto sim = WriteSpec(dir.path(), "sim.spec", "command = simulate\n");
  EXPECT_EQ(RunCli("attack-bench --spec " + sim.string()), 1);
  EXPECT_EQ(RunCli("simulate --spec " + (dir.path() / "missing.spec").string()), 1);
  EXPECT_EQ(RunCli("simulate"), 1);
}

TEST(CliTest, SimulateWritesPerSeedTablesAndIsReproducible) {
  ScratchDir dir;
  const auto spec = WriteSpec(dir.path(), "sim.spec",
                              "command = simulate\n"
                              "iterations = 3\n"
                              "n_gen = 400\n"
                              "n_pairs = 128\n"
                              "phi = 0.5\n"
                              "attack = gradient\n");
  const fs::path a = dir.path() / "a", b = dir.path() / "b";
  ASSERT_EQ(RunCli("simulate --spec " + spec.string() + " --out " + a.string() +
                   " --seeds 1,2,3"),
            0);
  ASSERT_EQ(RunCli("simulate --spec " + spec.string() + " --out " + b.string() +
                   " --seeds 1,2,3"),
            0);
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(a)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  EXPECT_EQ(names, (std::vector<std::string>{"aggregate.csv", "summary.json",
                                             "trajectory_seed_1.csv", "trajectory_seed_2.csv",
                                             "trajectory_seed_3.csv"}));
  for (const auto& n : names) EXPECT_EQ(ReadAll(a / n), ReadAll(b / n)) << n;
  const std::string agg = ReadAll(a / "aggregate.csv");
  EXPECT_EQ(agg.rfind("t,seeds,mean_E_r,std_E_r,mean_E_exp_r,std_E_exp_r\n", 0), 0u);
  EXPECT_EQ(std::count(agg.begin(), agg.end(), '\n'), 5);
  const auto summary = nlohmann::json::parse(ReadAll(a / "summary.json"));
  EXPECT_FALSE(summary.at("partial").get<bool>());
  EXPECT_EQ(summary.at("runs").size(), 3u);
}

TEST(CliTest, ZeroBudgetBenchRowsAgree) {
  ScratchDir dir;
  const auto spec = WriteSpec(dir.path(), "bench.spec",
                              "command = attack-bench\n"
                              "methods = none, random, gradient, heuristic-diff, pareto\n"
                              "kappa = 0\n"
                              "phi = 0.5\n"
                              "n_gen = 400\n"
                              "n_pairs = 128\n"
                              "pareto_pool = 2\n"
                              "seeds = 1, 2\n");
  ASSERT_EQ(RunCli("attack-bench --spec " + spec.string() + " --out " + dir.path().string()), 0);
  std::istringstream table(ReadAll(dir.path() / "attack_bench.csv"));
  std::string line;
  std::getline(table, line);
  EXPECT_EQ(line, "method,mean_E_r,std_E_r,E_r_seed_1,E_r_seed_2");
  std::vector<std::string> rows;
  while (std::getline(table, line)) rows.push_back(line.substr(line.find(',')));
  ASSERT_EQ(rows.size(), 5u);
  for (const auto& r : rows) EXPECT_EQ(r, rows.front());
  EXPECT_TRUE(fs::exists(dir.path() / "flips_gradient_seed_1.json"));
  EXPECT_TRUE(fs::exists(dir.path() / "summary.json"));
}

TEST(CliTest, VerifyBoundsReportMatchesExitCode) {
  ScratchDir dir;
  const auto spec = WriteSpec(dir.path(), "verify.spec",
                              "command = verify-bounds\n"
                              "instances = 30\n"
                              "seeds = 1\n"
                              "alignment_iterations = 200\n");
  const fs::path a = dir.path() / "a", b = dir.path() / "b";
  const int rc = RunCli("verify-bounds --spec " + spec.string() + " --out " + a.string());
  EXPECT_EQ(RunCli("verify-bounds --spec " + spec.string() + " --out " + b.string()), rc);
  EXPECT_EQ(ReadAll(a / "verify_report.txt"), ReadAll(b / "verify_report.txt"));
  EXPECT_EQ(ReadAll(a / "verify_report.json"), ReadAll(b / "verify_report.json"));
  const auto report = nlohmann::json::parse(ReadAll(a / "verify_report.json"));
  EXPECT_EQ(rc, report.at("mandatory_passed").get<bool>() ? 0 : 3);
  std::vector<std::string> names;
  for (const auto& c : report.at("checks")) names.push_back(c.at("name"));
  EXPECT_EQ(names, (std::vector<std::string>{"k_limit", "sandwich", "upper_positive",
                                             "covariance_floor", "mixed_loop_proof_sum",
                                             "mixed_loop_stated", "benign_alignment"}));
}

}  // namespace
}  // namespace curatelab
