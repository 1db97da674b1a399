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

#ifndef CURATELAB_EXPERIMENT_HPP_
#define CURATELAB_EXPERIMENT_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "curatelab/attack.hpp"
#include "curatelab/environment.hpp"
#include "curatelab/errors.hpp"
#include "curatelab/format.hpp"
#include "curatelab/retrain_loop.hpp"
#include "curatelab/verification.hpp"
#include "json.hpp"

namespace curatelab {

enum class Command { kSimulate, kAttackBench, kVerifyBounds };

// A validated experiment description. Built from flat `key = value` text.
struct ExperimentSpec {
  Command command = Command::kVerifyBounds;
  EnvironmentConfig environment;
  uint64_t env_seed = 0;
  LoopConfig loop;
  std::vector<AttackMethod> methods = {AttackMethod::kNone, AttackMethod::kRandom,
                                       AttackMethod::kGradient};
  std::vector<uint64_t> seeds = {1, 2, 3};
  std::string out = "out";
  // verify-bounds
  InstanceSuiteConfig instance_suite;
  KLimitConfig k_limit;
  MixedLoopCheckConfig mixed_loop;
  AlignmentCheckConfig alignment;
};

namespace detail {

inline std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Reads typed values out of the raw key/value map, removing each key it
// consumes so leftovers can be reported as unknown.
class SpecReader {
 public:
  explicit SpecReader(std::map<std::string, std::string> raw) : raw_(std::move(raw)) {}

  std::optional<std::string> Take(const std::string& key) {
    const auto it = raw_.find(key);
    if (it == raw_.end()) return std::nullopt;
    std::string v = it->second;
    raw_.erase(it);
    return v;
  }

  double Real(const std::string& key, double def, double lo, double hi) {
    const auto v = Take(key);
    if (!v) return def;
    size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(*v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v->size() || !std::isfinite(x)) throw ValidationError(key, "not a number: " + *v);
    if (x < lo || x > hi) {
      throw ValidationError(key, "value " + *v + " outside [" + FormatDouble(lo) + ", " +
                                     FormatDouble(hi) + "]");
    }
    return x;
  }

  uint64_t Count(const std::string& key, uint64_t def, uint64_t lo, uint64_t hi) {
    const auto v = Take(key);
    if (!v) return def;
    return ParseCount(key, *v, lo, hi);
  }

  static uint64_t ParseCount(const std::string& key, const std::string& v, uint64_t lo,
                             uint64_t hi) {
    size_t used = 0;
    unsigned long long x = 0;
    try {
      if (!v.empty() && v[0] != '-') x = std::stoull(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != v.size()) throw ValidationError(key, "not a non-negative integer: " + v);
    if (x < lo || x > hi) {
      throw ValidationError(key, "value " + v + " outside [" + std::to_string(lo) + ", " +
                                     std::to_string(hi) + "]");
    }
    return x;
  }

  template <typename Enum>
  Enum Choice(const std::string& key, Enum def, const std::map<std::string, Enum>& options) {
    const auto v = Take(key);
    if (!v) return def;
    return ParseChoice(key, *v, options);
  }

  template <typename Enum>
  static Enum ParseChoice(const std::string& key, const std::string& v,
                          const std::map<std::string, Enum>& options) {
    const auto it = options.find(v);
    if (it == options.end()) {
      std::string allowed;
      for (const auto& [name, _] : options) allowed += (allowed.empty() ? "" : ", ") + name;
      throw ValidationError(key, "unknown value '" + v + "' (allowed: " + allowed + ")");
    }
    return it->second;
  }

  const std::map<std::string, std::string>& leftover() const { return raw_; }

 private:
  std::map<std::string, std::string> raw_;
};

inline const std::map<std::string, AttackMethod>& AttackMethodNames() {
  static const std::map<std::string, AttackMethod> names = {
      {"none", AttackMethod::kNone},
      {"gradient", AttackMethod::kGradient},
      {"heuristic-diff", AttackMethod::kHeuristicDiff},
      {"heuristic-maxabs", AttackMethod::kHeuristicMaxAbs},
      {"pareto", AttackMethod::kPareto},
      {"random", AttackMethod::kRandom}};
  return names;
}

inline constexpr double kHuge = 1e300;
inline constexpr uint64_t kMaxCount = 1'000'000'000ULL;

}  // namespace detail

inline std::vector<uint64_t> ParseSeedList(const std::string& key, const std::string& text) {
  std::vector<uint64_t> seeds;
  for (const auto& s : detail::SplitList(text)) {
    seeds.push_back(detail::SpecReader::ParseCount(key, s, 0, UINT64_MAX));
  }
  if (seeds.empty()) throw ValidationError(key, "seed list is empty");
  if (std::set<uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ValidationError(key, "seed list has duplicates");
  }
  return seeds;
}

// Parses `key = value` lines ('#' starts a comment). Unknown keys, duplicate
// keys, malformed values and out-of-range values raise ValidationError
// naming the key; `command` is required.
inline ExperimentSpec ParseSpec(const std::string& text) {
  std::map<std::string, std::string> raw;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("", "line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = detail::Trim(line.substr(0, eq));
    const std::string value = detail::Trim(line.substr(eq + 1));
    if (key.empty()) throw ValidationError("", "line " + std::to_string(lineno) + ": empty key");
    if (value.empty()) throw ValidationError(key, "empty value");
    if (!raw.emplace(key, value).second) throw ValidationError(key, "duplicate key");
  }

  ExperimentSpec spec;
  detail::SpecReader rd(raw);
  using detail::kHuge;
  using detail::kMaxCount;

  const auto command = rd.Take("command");
  if (!command) throw ValidationError("command", "missing required key");
  spec.command = detail::SpecReader::ParseChoice<Command>(
      "command", *command,
      {{"simulate", Command::kSimulate},
       {"attack-bench", Command::kAttackBench},
       {"verify-bounds", Command::kVerifyBounds}});

  // Environment.
  EnvironmentConfig& env = spec.environment;
  env.kind = rd.Choice<EnvironmentKind>(
      "environment", EnvironmentKind::kClasses,
      {{"classes", EnvironmentKind::kClasses}, {"gaussian8", EnvironmentKind::kGaussian8}});
  env.classes = rd.Count("classes", 10, 2, 100);
  env.radius = rd.Real("radius", 2.0, 1e-9, 1e6);
  env.sigma = rd.Real("sigma", 0.02, 0.0, 1e3);
  env.mu_star = {rd.Real("mu_star_x", 2.0, -1e6, 1e6), rd.Real("mu_star_y", 0.0, -1e6, 1e6)};
  env.tau = rd.Real("tau", 3.0, 0.0, 1e6);
  env.gamma = rd.Real("gamma", -10.0, -1e3, 1e3);
  env.atoms_per_mode = rd.Count("atoms_per_mode", 16, 1, 4096);
  env.feature_bandwidth = rd.Real("feature_bandwidth", 0.5, 1e-9, 1e6);
  spec.env_seed = rd.Count("env_seed", 0, 0, UINT64_MAX);

  // Loop.
  LoopConfig& loop = spec.loop;
  loop.iterations = rd.Count("iterations", 10, 1, 100000);
  loop.n_gen = rd.Count("n_gen", 2000, 1, kMaxCount);
  loop.beta = rd.Real("beta", 0.5, 1e-12, 1.0);
  loop.n_pairs = rd.Count("n_pairs", 512, 1, kMaxCount);
  loop.curation.phi = rd.Real("phi", 0.0, 0.0, 1.0);
  loop.curation.k = static_cast<int>(rd.Count("k", 2, 2, 64));
  if (const auto lam = rd.Take("lambda")) {
    if (*lam == "inf" || *lam == "infinite") {
      loop.curation.lambda.reset();
    } else {
      detail::SpecReader one({{"lambda", *lam}});
      loop.curation.lambda = one.Real("lambda", 0.0, 0.0, kHuge);
    }
  }
  loop.update = rd.Choice<UpdateMode>("update", UpdateMode::kMonteCarlo,
                                      {{"monte-carlo", UpdateMode::kMonteCarlo},
                                       {"exact-kinf", UpdateMode::kExactKInf},
                                       {"exact-finite-k", UpdateMode::kExactFiniteK}});
  loop.benign = rd.Choice<BenignScorer>(
      "benign_scorer", BenignScorer::kLearned,
      {{"learned", BenignScorer::kLearned}, {"true", BenignScorer::kTrue}});
  loop.adversary = rd.Choice<AdversaryKind>("adversary", AdversaryKind::kLearned,
                                            {{"learned", AdversaryKind::kLearned},
                                             {"negated", AdversaryKind::kNegated},
                                             {"shifted-target", AdversaryKind::kShiftedTarget}});
  if (loop.adversary == AdversaryKind::kShiftedTarget && env.kind != EnvironmentKind::kClasses) {
    throw ValidationError("adversary", "shifted-target requires environment = classes");
  }
  loop.attack = rd.Choice<AttackMethod>("attack", AttackMethod::kNone, detail::AttackMethodNames());

  AttackConfig& ac = loop.attack_cfg;
  ac.kappa = rd.Real("kappa", 0.2, 0.0, 1.0);
  ac.alpha = rd.Real("alpha", 0.1, 0.0, kHuge);
  ac.cov_batch = rd.Count("cov_batch", 1024, 1, kMaxCount);
  ac.attack_lr = rd.Real("attack_lr", 0.1, 1e-12, 1.0);
  ac.attack_iters = rd.Count("attack_iters", 30, 0, 100000);
  ac.init_scale = rd.Real("init_scale", 0.1, 0.0, 1.0);
  loop.pareto_pool = rd.Count("pareto_pool", 32, 1, 100000);
  loop.pareto_selection = rd.Choice<ParetoSelection>(
      "pareto_selection", ParetoSelection::kMinSum,
      {{"min-sum", ParetoSelection::kMinSum}, {"min-cov", ParetoSelection::kMinCov}});

  FitConfig& fit = loop.fit;
  fit.l2_reg = rd.Real("l2_reg", 30.0, 0.0, kHuge);
  fit.learning_rate = rd.Real("learning_rate", 0.5, 1e-12, kHuge);
  fit.max_iters = rd.Count("max_iters", 200, 1, kMaxCount);
  fit.grad_tol = rd.Real("grad_tol", 1e-8, 0.0, kHuge);
  fit.solver = rd.Choice<FitSolver>(
      "solver", FitSolver::kNewton,
      {{"newton", FitSolver::kNewton}, {"gradient-descent", FitSolver::kGradientDescent}});

  if (const auto methods = rd.Take("methods")) {
    spec.methods.clear();
    for (const auto& m : detail::SplitList(*methods)) {
      spec.methods.push_back(detail::SpecReader::ParseChoice("methods", m,
                                                             detail::AttackMethodNames()));
    }
  }
  if (spec.command == Command::kAttackBench && spec.methods.size() < 2) {
    throw ValidationError("methods", "attack-bench needs at least two methods");
  }
  if (const auto seeds = rd.Take("seeds")) spec.seeds = ParseSeedList("seeds", *seeds);
  if (const auto out = rd.Take("out")) spec.out = *out;

  // verify-bounds suites.
  InstanceSuiteConfig& is = spec.instance_suite;
  is.instances = rd.Count("instances", 200, 1, kMaxCount);
  is.max_support = rd.Count("max_support", 5, 1, 64);
  is.max_k = static_cast<int>(rd.Count("max_k", 3, 2, 16));
  is.reward_bound = rd.Real("reward_bound", 2.0, 0.0, 50.0);
  spec.k_limit.max_k = static_cast<int>(rd.Count("k_limit_max_k", 12, 2, 20));
  spec.k_limit.phi = rd.Real("k_limit_phi", 0.3, 0.0, 1.0);
  spec.k_limit.tolerance = rd.Real("k_limit_tolerance", 0.02, 0.0, 1.0);
  MixedLoopCheckConfig& ml = spec.mixed_loop;
  ml.classes = rd.Count("mixed_classes", 10, 2, 100);
  ml.phi = rd.Real("mixed_phi", 0.3, 0.0, 1.0);
  ml.iterations = rd.Count("mixed_iterations", 15, 1, 100000);
  if (const auto lams = rd.Take("mixed_lambdas")) {
    ml.lambdas.clear();
    for (const auto& l : detail::SplitList(*lams)) {
      detail::SpecReader one({{"mixed_lambdas", l}});
      ml.lambdas.push_back(one.Real("mixed_lambdas", 0.0, 0.0, kHuge));
    }
    if (ml.lambdas.empty()) throw ValidationError("mixed_lambdas", "empty list");
  }
  AlignmentCheckConfig& al = spec.alignment;
  al.classes = rd.Count("alignment_classes", 10, 2, 100);
  al.iterations = rd.Count("alignment_iterations", 200, 1, 1000000);

  if (!rd.leftover().empty()) {
    throw ValidationError(rd.leftover().begin()->first, "unknown key");
  }
  try {
    spec.environment.Validate();
    spec.loop.Validate();
  } catch (const InvalidArgumentError& e) {
    throw ValidationError("", e.what());
  }
  return spec;
}

inline ExperimentSpec ParseSpecFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("--spec", "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseSpec(ss.str());
}

inline std::string CommandName(Command c) {
  switch (c) {
    case Command::kSimulate: return "simulate";
    case Command::kAttackBench: return "attack-bench";
    case Command::kVerifyBounds: return "verify-bounds";
  }
  return "unknown";
}

}  // namespace curatelab

#endif  // CURATELAB_EXPERIMENT_HPP_
