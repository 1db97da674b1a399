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


// Acceptance gate. Prints one PASS/FAIL line per criterion and exits
// nonzero if any line fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "attack_fixtures.hpp"
#include "curatelab/attack.hpp"
#include "curatelab/environment.hpp"
#include "curatelab/retrain_loop.hpp"
#include "curatelab/rng.hpp"
#include "curatelab/verification.hpp"

namespace curatelab {
namespace {

namespace fs = std::filesystem;

struct Verdict {
  bool passed;
  std::string detail;
};

class Gate {
 public:
  // Runs `check`, fails it if it throws or exceeds `seconds` (0 = no limit).
  void Run(const std::string& name, double seconds, const std::function<Verdict()>& check) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v{false, ""};
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool ok = v.passed;
    std::ostringstream line;
    line << v.detail << " time=" << elapsed << "s";
    if (seconds > 0.0) {
      line << " limit=" << seconds << "s";
      if (elapsed >= seconds) ok = false;
    }
    std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), line.str().c_str());
    std::fflush(stdout);
    if (!ok) ++failures_;
  }

  int failures() const { return failures_; }

 private:
  int failures_ = 0;
};

Environment Classes() {
  Rng rng(0);
  return BuildEnvironment(EnvironmentConfig{}, rng);
}

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

std::map<std::string, std::string> Snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    out[e.path().filename().string()] = ReadAll(e.path());
  }
  return out;
}

Verdict KLimit() {
  const CheckResult r = CheckKLimit(KLimitConfig{});
  std::ostringstream os;
  os << "tv_at_k12=" << r.details.at("tv_at_max_k").get<double>()
     << " non_increasing=" << r.details.at("non_increasing").get<bool>();
  return {r.passed, os.str()};
}

Verdict Sandwich(const InstanceSuiteResult& s) {
  std::ostringstream os;
  os << "within=" << s.sandwich_ok << "/" << s.instances << " lower_violations=" << s.lower_violations
     << " upper_violations=" << s.upper_violations << " upper_positive=" << s.upper_positive << "/"
     << s.instances << " worst_lower_margin=" << s.worst_lower_margin
     << " worst_upper_margin=" << s.worst_upper_margin;
  return {s.sandwich_ok == s.instances && s.upper_positive == s.instances, os.str()};
}

Verdict CovarianceFloor(const InstanceSuiteResult& s) {
  std::ostringstream os;
  os << "holds=" << s.floor_ok << "/" << s.instances << " worst_margin=" << s.worst_floor_margin;
  return {s.floor_ok == s.instances, os.str()};
}

Verdict MixedLoop() {
  const MixedLoopCheck r = CheckMixedLoop(MixedLoopCheckConfig{});
  std::ostringstream os;
  os << "proof_sum=" << (r.proof_sum.passed ? "holds" : "violated")
     << " stated=" << (r.stated.passed ? "holds" : "violated");
  return {r.proof_sum.passed, os.str()};
}

Verdict Alignment() {
  const CheckResult r = CheckBenignAlignment(AlignmentCheckConfig{});
  std::ostringstream os;
  os << "top_mass=" << r.details.at("top_mass").get<double>()
     << " var_exp_r=" << r.details.at("var_exp_r").get<double>()
     << " non_decreasing=" << r.details.at("non_decreasing").get<bool>();
  return {r.passed, os.str()};
}

Verdict ImplicitGradient() {
  double worst = 0.0;
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    worst = std::max(worst, testing::ImplicitJacobianError(seed));
  }
  std::ostringstream os;
  os << "instances=20 max_rel_error=" << worst;
  return {worst < 1e-3, os.str()};
}

Verdict Recovery() {
  double worst = 1.0;
  for (uint64_t seed = 1; seed <= 5; ++seed) worst = std::min(worst, testing::RecoveryCosine(seed));
  std::ostringstream os;
  os << "seeds=5 min_cosine=" << worst;
  return {worst >= 0.95, os.str()};
}

Verdict ExhaustiveOracle() {
  double worst = 0.0;
  std::ostringstream os;
  os << "quantiles=";
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    const double q = testing::ExhaustiveAttackOracle(seed).Quantile();
    worst = std::max(worst, q);
    os << (seed > 1 ? "," : "") << q;
  }
  return {worst <= 0.25, os.str()};
}

Verdict Ordering() {
  const Environment env = Classes();
  const std::vector<AttackMethod> methods = {
      AttackMethod::kNone,     AttackMethod::kRandom,          AttackMethod::kHeuristicDiff,
      AttackMethod::kGradient, AttackMethod::kHeuristicMaxAbs, AttackMethod::kPareto};
  std::map<AttackMethod, double> mean;
  const int seeds = 10;
  for (AttackMethod m : methods) {
    double sum = 0.0;
    for (int s = 1; s <= seeds; ++s) {
      LoopConfig cfg;
      cfg.iterations = 1;
      cfg.curation.phi = 0.5;
      cfg.attack_cfg.kappa = 0.2;
      cfg.attack = m;
      cfg.seed = static_cast<uint64_t>(s);
      sum += RunRetraining(env, cfg).steps.back().e_r;
    }
    mean[m] = sum / seeds;
  }
  const double benign = mean[AttackMethod::kNone];
  bool ok = true;
  std::ostringstream os;
  os << "seeds=" << seeds;
  for (AttackMethod m : methods) {
    os << " " << detail::AttackName(m) << "=" << mean[m];
    if (m != AttackMethod::kNone && !(benign > mean[m])) ok = false;
  }
  ok = ok && mean[AttackMethod::kGradient] <= mean[AttackMethod::kRandom] &&
       mean[AttackMethod::kPareto] <= mean[AttackMethod::kRandom];
  return {ok, os.str()};
}

Verdict Misalignment() {
  const Environment env = Classes();
  int lower = 0;
  int increasing = 0;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    LoopConfig cfg;
    cfg.seed = seed;
    cfg.curation.phi = 0.5;
    const auto benign = RunRetraining(env, cfg);
    bool inc = true;
    for (size_t t = 1; t < benign.steps.size(); ++t) {
      if (!(benign.steps[t].proportions[0] > benign.steps[t - 1].proportions[0])) inc = false;
    }
    increasing += inc;
    cfg.attack = AttackMethod::kGradient;
    const auto attacked = RunRetraining(env, cfg);
    if (attacked.steps.back().e_r < benign.steps.back().e_r) ++lower;
  }
  std::ostringstream os;
  os << "attacked_lower=" << lower << "/5 benign_class0_strictly_increasing=" << increasing << "/5";
  return {lower >= 4 && increasing == 5, os.str()};
}

Verdict Anchoring() {
  const Environment env = Classes();
  std::ostringstream os;
  bool ok = true;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    LoopConfig cfg;
    cfg.seed = seed;
    cfg.curation.phi = 0.5;
    cfg.adversary = AdversaryKind::kNegated;
    const double free = RunRetraining(env, cfg).steps.back().tv_to_data;
    cfg.curation.lambda = 1.0;
    const double mixed = RunRetraining(env, cfg).steps.back().tv_to_data;
    if (!(mixed < free)) ok = false;
    os << (seed > 1 ? " " : "") << "seed" << seed << "=" << mixed << "<" << free;
  }
  return {ok, os.str()};
}

Verdict ParetoFront() {
  Rng rng(17);
  size_t matches = 0;
  for (size_t trial = 0; trial < 100; ++trial) {
    const auto pts = testing::RandomPointSet(trial, rng);
    if (NonDominatedFront(pts) == testing::BruteForceFront(pts)) ++matches;
  }
  return {matches == 100, "matches=" + std::to_string(matches) + "/100"};
}

Verdict Determinism() {
  const fs::path root = fs::temp_directory_path() /
                        ("curatelab_accept_" + std::to_string(std::random_device{}()));
  fs::create_directories(root);
  const std::vector<std::pair<std::string, std::string>> specs = {
      {"simulate",
       "command = simulate\niterations = 3\nn_gen = 400\nn_pairs = 128\nphi = 0.5\n"
       "attack = gradient\nseeds = 1, 2\n"},
      {"attack-bench",
       "command = attack-bench\nmethods = none, random, gradient, heuristic-diff, pareto\n"
       "phi = 0.5\nn_gen = 400\nn_pairs = 128\npareto_pool = 4\nseeds = 1, 2\n"},
      {"verify-bounds", "command = verify-bounds\ninstances = 50\n"},
  };
  bool ok = true;
  size_t files = 0;
  std::string diff;
  for (const auto& [cmd, text] : specs) {
    const fs::path spec = root / (cmd + ".spec");
    std::ofstream(spec) << text;
    const fs::path a = root / (cmd + "_a"), b = root / (cmd + "_b");
    const int rc_a = RunCli(cmd + " --spec " + spec.string() + " --out " + a.string());
    const int rc_b = RunCli(cmd + " --spec " + spec.string() + " --out " + b.string());
    if (rc_a != rc_b || !fs::exists(a) || !fs::exists(b)) {
      ok = false;
      diff += " " + cmd + ":rc";
      continue;
    }
    const auto sa = Snapshot(a), sb = Snapshot(b);
    files += sa.size();
    if (sa != sb || sa.empty()) {
      ok = false;
      diff += " " + cmd + ":content";
    }
  }
  fs::remove_all(root);
  return {ok, "commands=3 files=" + std::to_string(files) + (diff.empty() ? "" : " differs:" + diff)};
}

}  // namespace
}  // namespace curatelab

int main() {
  using namespace curatelab;
  Gate gate;
  gate.Run("k_limit", 1.0, KLimit);
  InstanceSuiteResult suite;
  gate.Run("sandwich", 10.0, [&] {
    suite = RunInstanceSuite(InstanceSuiteConfig{});
    return Sandwich(suite);
  });
  gate.Run("covariance_floor", 0.0, [&] { return CovarianceFloor(suite); });
  gate.Run("mixed_loop", 5.0, MixedLoop);
  gate.Run("benign_alignment", 0.0, Alignment);
  gate.Run("implicit_gradient", 30.0, ImplicitGradient);
  gate.Run("mle_recovery", 0.0, Recovery);
  gate.Run("exhaustive_attack_oracle", 0.0, ExhaustiveOracle);
  gate.Run("attack_ordering", 300.0, Ordering);
  gate.Run("trajectory_misalignment", 0.0, Misalignment);
  gate.Run("mixed_anchoring", 0.0, Anchoring);
  gate.Run("pareto_front", 0.0, ParetoFront);
  gate.Run("determinism", 0.0, Determinism);
  std::printf("%d failed\n", gate.failures());
  return gate.failures() == 0 ? 0 : 1;
}
