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

#ifndef CURATELAB_RUNNER_HPP_
#define CURATELAB_RUNNER_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "curatelab/attack.hpp"
#include "curatelab/environment.hpp"
#include "curatelab/errors.hpp"
#include "curatelab/experiment.hpp"
#include "curatelab/format.hpp"
#include "curatelab/retrain_loop.hpp"
#include "curatelab/verification.hpp"
#include "json.hpp"

namespace curatelab {

enum ExitCode : int { kExitOk = 0, kExitValidation = 1, kExitRuntime = 2, kExitBoundFailure = 3 };

namespace detail {

inline void WriteFile(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed for " + path.string());
}

inline std::string SeedTag(uint64_t seed) { return "seed_" + std::to_string(seed); }

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

// Sample standard deviation (n − 1); zero for a single value.
inline MeanStd Summarize(const std::vector<double>& xs) {
  MeanStd out;
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return out;
}

inline nlohmann::json LambdaJson(const std::optional<double>& lambda) {
  return lambda ? nlohmann::json(*lambda) : nlohmann::json("inf");
}

}  // namespace detail

// Full configuration echo, defaults included.
inline nlohmann::json SpecToJson(const ExperimentSpec& s) {
  const auto& e = s.environment;
  const auto& l = s.loop;
  nlohmann::json methods = nlohmann::json::array();
  for (auto m : s.methods) methods.push_back(detail::AttackName(m));
  return {
      {"command", CommandName(s.command)},
      {"environment",
       {{"kind", e.kind == EnvironmentKind::kClasses ? "classes" : "gaussian8"},
        {"classes", e.classes},
        {"radius", e.radius},
        {"sigma", e.sigma},
        {"mu_star", e.mu_star},
        {"tau", e.tau},
        {"gamma", e.gamma},
        {"atoms_per_mode", e.atoms_per_mode},
        {"feature_bandwidth", e.feature_bandwidth},
        {"env_seed", s.env_seed}}},
      {"loop",
       {{"iterations", l.iterations},
        {"n_gen", l.n_gen},
        {"beta", l.beta},
        {"n_pairs", l.n_pairs},
        {"phi", l.curation.phi},
        {"k", l.curation.k},
        {"lambda", detail::LambdaJson(l.curation.lambda)},
        {"update", l.update == UpdateMode::kMonteCarlo   ? "monte-carlo"
                   : l.update == UpdateMode::kExactKInf ? "exact-kinf"
                                                        : "exact-finite-k"},
        {"benign_scorer", l.benign == BenignScorer::kLearned ? "learned" : "true"},
        {"adversary", l.adversary == AdversaryKind::kLearned   ? "learned"
                      : l.adversary == AdversaryKind::kNegated ? "negated"
                                                               : "shifted-target"},
        {"attack", detail::AttackName(l.attack)}}},
      {"attack",
       {{"kappa", l.attack_cfg.kappa},
        {"alpha", l.attack_cfg.alpha},
        {"cov_batch", l.attack_cfg.cov_batch},
        {"attack_lr", l.attack_cfg.attack_lr},
        {"attack_iters", l.attack_cfg.attack_iters},
        {"init_scale", l.attack_cfg.init_scale},
        {"pareto_pool", l.pareto_pool},
        {"pareto_selection",
         l.pareto_selection == ParetoSelection::kMinSum ? "min-sum" : "min-cov"}}},
      {"fit",
       {{"l2_reg", l.fit.l2_reg},
        {"learning_rate", l.fit.learning_rate},
        {"max_iters", l.fit.max_iters},
        {"grad_tol", l.fit.grad_tol},
        {"solver", l.fit.solver == FitSolver::kNewton ? "newton" : "gradient-descent"}}},
      {"methods", methods},
      {"seeds", s.seeds},
      {"verify",
       {{"instances", s.instance_suite.instances},
        {"max_support", s.instance_suite.max_support},
        {"max_k", s.instance_suite.max_k},
        {"reward_bound", s.instance_suite.reward_bound},
        {"k_limit_max_k", s.k_limit.max_k},
        {"k_limit_phi", s.k_limit.phi},
        {"k_limit_tolerance", s.k_limit.tolerance},
        {"mixed_classes", s.mixed_loop.classes},
        {"mixed_phi", s.mixed_loop.phi},
        {"mixed_iterations", s.mixed_loop.iterations},
        {"mixed_lambdas", s.mixed_loop.lambdas},
        {"alignment_classes", s.alignment.classes},
        {"alignment_iterations", s.alignment.iterations}}}};
}

inline Environment BuildSpecEnvironment(const ExperimentSpec& spec) {
  Rng rng(spec.env_seed);
  return BuildEnvironment(spec.environment, rng);
}

// simulate: trajectory_seed_<s>.csv per seed, aggregate.csv (mean/std of
// E[r] and E[e^r] per iteration across seeds), summary.json.
inline int RunSimulate(const ExperimentSpec& spec, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const Environment env = BuildSpecEnvironment(spec);
  nlohmann::json runs = nlohmann::json::array();
  std::vector<Trajectory> done;
  bool failed = false;
  for (uint64_t seed : spec.seeds) {
    LoopConfig cfg = spec.loop;
    cfg.seed = seed;
    try {
      Trajectory traj = RunRetraining(env, cfg);
      std::ostringstream table;
      WriteTrajectoryTable(table, traj);
      detail::WriteFile(out_dir / ("trajectory_" + detail::SeedTag(seed) + ".csv"), table.str());
      runs.push_back({{"seed", seed},
                      {"status", "ok"},
                      {"final_E_r", traj.steps.back().e_r},
                      {"final_E_exp_r", traj.steps.back().e_exp_r},
                      {"final_tv_to_data", traj.steps.back().tv_to_data},
                      {"bounds", BoundSummaryJson(CheckBounds(traj))}});
      done.push_back(std::move(traj));
    } catch (const Error& e) {
      failed = true;
      runs.push_back({{"seed", seed}, {"status", "failed"}, {"error", e.what()}});
    }
  }
  std::ostringstream agg;
  agg << "t,seeds,mean_E_r,std_E_r,mean_E_exp_r,std_E_exp_r\n";
  if (!done.empty()) {
    for (size_t t = 0; t < done.front().steps.size(); ++t) {
      std::vector<double> er, eexp;
      for (const auto& traj : done) {
        er.push_back(traj.steps[t].e_r);
        eexp.push_back(traj.steps[t].e_exp_r);
      }
      const auto a = detail::Summarize(er);
      const auto b = detail::Summarize(eexp);
      agg << t << ',' << done.size() << ',' << FormatDouble(a.mean) << ',' << FormatDouble(a.std)
          << ',' << FormatDouble(b.mean) << ',' << FormatDouble(b.std) << '\n';
    }
  }
  detail::WriteFile(out_dir / "aggregate.csv", agg.str());
  nlohmann::json summary = {{"config", SpecToJson(spec)}, {"partial", failed}, {"runs", runs}};
  detail::WriteFile(out_dir / "summary.json", summary.dump(2) + "\n");
  return failed ? kExitRuntime : kExitOk;
}

// attack-bench: one retraining round per (method, seed) with shared random
// streams. Writes attack_bench.csv (method x E_{p_1}[r]), per-run flip masks
// and objective logs, and summary.json with the ordering verdicts.
inline int RunAttackBench(const ExperimentSpec& spec, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const Environment env = BuildSpecEnvironment(spec);
  std::vector<std::vector<double>> e_r(spec.methods.size());
  nlohmann::json runs = nlohmann::json::array();
  bool failed = false;
  for (size_t mi = 0; mi < spec.methods.size(); ++mi) {
    const std::string name = detail::AttackName(spec.methods[mi]);
    for (uint64_t seed : spec.seeds) {
      LoopConfig cfg = spec.loop;
      cfg.iterations = 1;
      cfg.attack = spec.methods[mi];
      cfg.seed = seed;
      try {
        const Trajectory traj = RunRetraining(env, cfg);
        const StepRecord& rec = traj.steps.back();
        e_r[mi].push_back(rec.e_r);
        const std::string tag = name + "_" + detail::SeedTag(seed);
        detail::WriteFile(out_dir / ("flips_" + tag + ".json"),
                          FlipMaskToJson(traj.masks.front()).dump(2) + "\n");
        if (!traj.attack_logs.front().empty()) {
          std::ostringstream log;
          WriteObjectiveLog(log, traj.attack_logs.front());
          detail::WriteFile(out_dir / ("objective_" + tag + ".csv"), log.str());
        }
        nlohmann::json run = {{"method", name}, {"seed", seed}, {"E_r", rec.e_r},
                              {"flips", rec.flips}};
        if (rec.objective) {
          run["cov_term"] = rec.objective->cov_term;
          run["dist_term"] = rec.objective->dist_term;
          run["total"] = rec.objective->total;
        }
        runs.push_back(run);
      } catch (const Error& e) {
        failed = true;
        e_r[mi].push_back(std::nan(""));
        runs.push_back({{"method", name}, {"seed", seed}, {"error", e.what()}});
      }
    }
  }

  std::ostringstream table;
  table << "method,mean_E_r,std_E_r";
  for (uint64_t seed : spec.seeds) table << ",E_r_" << detail::SeedTag(seed);
  table << '\n';
  std::vector<double> means(spec.methods.size());
  for (size_t mi = 0; mi < spec.methods.size(); ++mi) {
    const auto s = detail::Summarize(e_r[mi]);
    means[mi] = s.mean;
    table << detail::AttackName(spec.methods[mi]) << ',' << FormatDouble(s.mean) << ','
          << FormatDouble(s.std);
    for (double v : e_r[mi]) table << ',' << FormatDouble(v);
    table << '\n';
  }
  detail::WriteFile(out_dir / "attack_bench.csv", table.str());

  auto mean_of = [&](AttackMethod m) -> std::optional<double> {
    for (size_t i = 0; i < spec.methods.size(); ++i) {
      if (spec.methods[i] == m) return means[i];
    }
    return std::nullopt;
  };
  nlohmann::json ordering = nlohmann::json::object();
  if (const auto benign = mean_of(AttackMethod::kNone)) {
    for (size_t i = 0; i < spec.methods.size(); ++i) {
      if (spec.methods[i] == AttackMethod::kNone) continue;
      ordering["benign_gt_" + detail::AttackName(spec.methods[i])] = *benign > means[i];
    }
  }
  if (const auto random = mean_of(AttackMethod::kRandom)) {
    for (AttackMethod m : {AttackMethod::kGradient, AttackMethod::kPareto}) {
      if (const auto v = mean_of(m)) ordering[detail::AttackName(m) + "_le_random"] = *v <= *random;
    }
  }
  nlohmann::json summary = {
      {"config", SpecToJson(spec)}, {"partial", failed}, {"ordering", ordering}, {"runs", runs}};
  detail::WriteFile(out_dir / "summary.json", summary.dump(2) + "\n");
  return failed ? kExitRuntime : kExitOk;
}

// Runs every bound suite. Returns the checks in report order.
inline std::vector<CheckResult> RunBoundChecks(const ExperimentSpec& spec) {
  std::vector<CheckResult> checks;
  checks.push_back(CheckKLimit(spec.k_limit));

  CheckResult sandwich{"sandwich", true, true, nlohmann::json::array()};
  CheckResult positivity{"upper_positive", true, true, nlohmann::json::array()};
  CheckResult floor{"covariance_floor", true, true, nlohmann::json::array()};
  for (uint64_t seed : spec.seeds) {
    InstanceSuiteConfig cfg = spec.instance_suite;
    cfg.seed = seed;
    const InstanceSuiteResult r = RunInstanceSuite(cfg);
    sandwich.passed = sandwich.passed && r.sandwich_ok == r.instances;
    positivity.passed = positivity.passed && r.upper_positive == r.instances;
    floor.passed = floor.passed && r.floor_ok == r.instances;
    sandwich.details.push_back({{"seed", seed},
                                {"instances", r.instances},
                                {"satisfied", r.sandwich_ok},
                                {"lower_violations", r.lower_violations},
                                {"upper_violations", r.upper_violations},
                                {"worst_lower_margin", r.worst_lower_margin},
                                {"worst_upper_margin", r.worst_upper_margin}});
    positivity.details.push_back(
        {{"seed", seed}, {"positive", r.upper_positive}, {"min_upper", r.min_upper}});
    floor.details.push_back({{"seed", seed},
                             {"satisfied", r.floor_ok},
                             {"worst_margin", r.worst_floor_margin}});
  }
  checks.push_back(std::move(sandwich));
  checks.push_back(std::move(positivity));
  checks.push_back(std::move(floor));

  MixedLoopCheck mixed = CheckMixedLoop(spec.mixed_loop);
  checks.push_back(std::move(mixed.proof_sum));
  checks.push_back(std::move(mixed.stated));
  checks.push_back(CheckBenignAlignment(spec.alignment));
  return checks;
}

// verify-bounds: verify_report.txt (one PASS/FAIL line per check) and
// verify_report.json. Exit 3 when a mandatory check fails.
inline int RunVerifyBounds(const ExperimentSpec& spec, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const auto checks = RunBoundChecks(spec);
  std::ostringstream text;
  nlohmann::json items = nlohmann::json::array();
  bool mandatory_ok = true;
  for (const auto& c : checks) {
    text << (c.passed ? "PASS " : "FAIL ") << c.name << (c.mandatory ? "" : " (informational)")
         << ' ' << c.details.dump() << '\n';
    items.push_back(
        {{"name", c.name}, {"mandatory", c.mandatory}, {"passed", c.passed}, {"details", c.details}});
    if (c.mandatory && !c.passed) mandatory_ok = false;
  }
  detail::WriteFile(out_dir / "verify_report.txt", text.str());
  nlohmann::json report = {
      {"config", SpecToJson(spec)}, {"mandatory_passed", mandatory_ok}, {"checks", items}};
  detail::WriteFile(out_dir / "verify_report.json", report.dump(2) + "\n");
  return mandatory_ok ? kExitOk : kExitBoundFailure;
}

inline int RunExperiment(const ExperimentSpec& spec, const std::filesystem::path& out_dir) {
  switch (spec.command) {
    case Command::kSimulate: return RunSimulate(spec, out_dir);
    case Command::kAttackBench: return RunAttackBench(spec, out_dir);
    case Command::kVerifyBounds: return RunVerifyBounds(spec, out_dir);
  }
  return kExitValidation;
}

}  // namespace curatelab

#endif  // CURATELAB_RUNNER_HPP_
