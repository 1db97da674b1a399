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

#ifndef CURATELAB_VERIFICATION_HPP_
#define CURATELAB_VERIFICATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "curatelab/curation.hpp"
#include "curatelab/dist_core.hpp"
#include "curatelab/environment.hpp"
#include "curatelab/retrain_loop.hpp"
#include "curatelab/rng.hpp"
#include "curatelab/support.hpp"
#include "json.hpp"

namespace curatelab {

// Randomized-instance checks of the closed-form updates and bounds.

struct CheckResult {
  std::string name;
  bool mandatory = true;
  bool passed = false;
  nlohmann::json details;
};

struct BoundInstance {
  DiscreteDistribution p;
  std::vector<double> r;
  std::vector<double> r_tilde;
  double phi;
  int k;
};

struct InstanceSuiteConfig {
  size_t instances = 200;
  size_t max_support = 5;
  int max_k = 3;
  double reward_bound = 2.0;
  uint64_t seed = 0;
};

// Instance i: m ~ U{1..max_support}, K ~ U{2..max_k}, rewards ~ U[−b, b],
// phi ~ U[0, 1], weights ~ U(0, 1] then normalized.
inline BoundInstance MakeBoundInstance(const InstanceSuiteConfig& cfg, size_t i) {
  Rng rng(DeriveSeed(cfg.seed, {0x6c656d6d6132ULL, i}));
  const size_t m = 1 + rng.UniformIndex(cfg.max_support);
  const int k = 2 + static_cast<int>(rng.UniformIndex(static_cast<size_t>(cfg.max_k - 1)));
  std::vector<SupportPoint> atoms;
  std::vector<double> w(m), r(m), rt(m);
  for (size_t j = 0; j < m; ++j) {
    atoms.push_back({static_cast<double>(j)});
    w[j] = 1.0 - rng.Uniform01();
    r[j] = rng.Uniform(-cfg.reward_bound, cfg.reward_bound);
    rt[j] = rng.Uniform(-cfg.reward_bound, cfg.reward_bound);
  }
  const double phi = rng.Uniform01();
  return {DiscreteDistribution(std::move(atoms), std::move(w)), std::move(r), std::move(rt), phi, k};
}

struct InstanceSuiteResult {
  size_t instances = 0;
  size_t sandwich_ok = 0;
  size_t lower_violations = 0;
  size_t upper_violations = 0;
  size_t upper_positive = 0;
  size_t floor_ok = 0;
  double min_upper = std::numeric_limits<double>::infinity();
  double worst_lower_margin = std::numeric_limits<double>::infinity();
  double worst_upper_margin = std::numeric_limits<double>::infinity();
  double worst_floor_margin = std::numeric_limits<double>::infinity();
  std::optional<size_t> first_sandwich_failure;
  std::optional<size_t> first_floor_failure;
};

// Sandwich bounds, upper-bound positivity and the covariance floor, all
// against the exactly enumerated post-curation expectation.
inline InstanceSuiteResult RunInstanceSuite(const InstanceSuiteConfig& cfg) {
  InstanceSuiteResult res;
  SandwichOptions opt;
  opt.allow_monte_carlo = false;
  for (size_t i = 0; i < cfg.instances; ++i) {
    const BoundInstance inst = MakeBoundInstance(cfg, i);
    const BoundReport rep = SandwichBoundsValues(inst.p, inst.r, inst.r_tilde, inst.phi, inst.k, opt);
    const double floor = CovarianceFloorValues(inst.p, inst.r, inst.r_tilde, inst.phi);
    ++res.instances;
    const double lower_margin = rep.observed - rep.lower;
    const double upper_margin = rep.upper - rep.observed;
    const double floor_margin = rep.observed - floor;
    res.worst_lower_margin = std::min(res.worst_lower_margin, lower_margin);
    res.worst_upper_margin = std::min(res.worst_upper_margin, upper_margin);
    res.worst_floor_margin = std::min(res.worst_floor_margin, floor_margin);
    res.min_upper = std::min(res.min_upper, rep.upper);
    if (lower_margin < -kBoundTolerance) ++res.lower_violations;
    if (upper_margin < -kBoundTolerance) ++res.upper_violations;
    if (rep.satisfied) {
      ++res.sandwich_ok;
    } else if (!res.first_sandwich_failure) {
      res.first_sandwich_failure = i;
    }
    if (rep.upper > 0.0) ++res.upper_positive;
    if (floor_margin >= -kBoundTolerance) {
      ++res.floor_ok;
    } else if (!res.first_floor_failure) {
      res.first_floor_failure = i;
    }
  }
  return res;
}

struct KLimitConfig {
  std::vector<double> p = {0.5, 0.5};
  std::vector<double> r = {0.0, std::log(3.0)};
  std::vector<double> r_tilde = {std::log(3.0), 0.0};
  double phi = 0.3;
  int max_k = 12;
  double tolerance = 0.02;
};

// TV distance between the finite-K update and its K -> infinity limit, for
// K = 2..max_k. Passes when the sequence is non-increasing and ends within
// the tolerance.
inline CheckResult CheckKLimit(const KLimitConfig& cfg) {
  std::vector<SupportPoint> atoms;
  for (size_t i = 0; i < cfg.p.size(); ++i) atoms.push_back({static_cast<double>(i)});
  const DiscreteDistribution p(atoms, cfg.p);
  const auto limit = UpdateExactKInfValues(p, cfg.r, cfg.r_tilde, cfg.phi);
  std::vector<double> tv;
  bool monotone = true;
  for (int k = 2; k <= cfg.max_k; ++k) {
    tv.push_back(TvDistance(UpdateExactFiniteKValues(p, cfg.r, cfg.r_tilde, cfg.phi, k), limit));
    if (tv.size() > 1 && tv.back() > tv[tv.size() - 2] + 1e-15) monotone = false;
  }
  CheckResult out{"k_limit", true, monotone && tv.back() <= cfg.tolerance, {}};
  out.details = {{"tv_by_k", tv}, {"non_increasing", monotone}, {"tv_at_max_k", tv.back()}};
  return out;
}

struct MixedLoopCheckConfig {
  size_t classes = 10;
  double phi = 0.3;
  std::vector<double> lambdas = {1.0, 3.0};
  size_t iterations = 15;
};

struct MixedLoopCheck {
  CheckResult proof_sum;
  CheckResult stated;
};

// Exact K -> infinity mixed-data loop on the classes environment with the
// negated adversary; both floor variants are evaluated at every step.
inline MixedLoopCheck CheckMixedLoop(const MixedLoopCheckConfig& cfg) {
  EnvironmentConfig ec;
  ec.classes = cfg.classes;
  Rng unused(0);
  const Environment env = BuildEnvironment(ec, unused);
  const RewardFunction adv = NegatedReward(env);
  const std::vector<double> rv = env.reward.Values(env.p_data);
  const std::vector<double> rtv = adv.Values(env.p_data);
  MixedLoopCheck out{{"mixed_loop_proof_sum", true, true, nlohmann::json::array()},
                     {"mixed_loop_stated", false, true, nlohmann::json::array()}};
  for (double lambda : cfg.lambdas) {
    std::vector<DiscreteDistribution> traj{env.p_data};
    for (size_t t = 0; t < cfg.iterations; ++t) {
      const auto curated = UpdateExactKInfValues(traj.back(), rv, rtv, cfg.phi);
      traj.push_back(MixedUpdate(env.p_data, curated, lambda));
    }
    const std::vector<RewardFunction> advs(cfg.iterations, adv);
    for (auto variant : {LoopBoundVariant::kProofSum, LoopBoundVariant::kStated}) {
      const auto reports = MixedLoopMonitor(traj, env.reward, advs, lambda, cfg.phi, variant);
      CheckResult& res = variant == LoopBoundVariant::kProofSum ? out.proof_sum : out.stated;
      size_t ok = 0;
      double worst = std::numeric_limits<double>::infinity();
      for (const auto& rep : reports) {
        ok += rep.satisfied ? 1 : 0;
        worst = std::min(worst, rep.observed - rep.lower);
      }
      res.passed = res.passed && ok == reports.size();
      res.details.push_back(
          {{"lambda", lambda}, {"steps", reports.size()}, {"satisfied", ok}, {"worst_margin", worst}});
    }
  }
  return out;
}

struct AlignmentCheckConfig {
  size_t classes = 10;
  size_t iterations = 200;
  double top_mass = 0.99;
  double max_variance = 1e-4;
};

// Benign exact K -> infinity loop: the top class absorbs the mass, the
// variance of e^r vanishes, and E[e^r] never decreases.
inline CheckResult CheckBenignAlignment(const AlignmentCheckConfig& cfg) {
  EnvironmentConfig ec;
  ec.classes = cfg.classes;
  Rng unused(0);
  const Environment env = BuildEnvironment(ec, unused);
  const std::vector<double> rv = env.reward.Values(env.p_data);
  DiscreteDistribution p = env.p_data;
  bool monotone = true;
  double prev = ExpectExp(p.probs(), rv);
  for (size_t t = 0; t < cfg.iterations; ++t) {
    p = UpdateExactKInfValues(p, rv, rv, 0.0);
    const double cur = ExpectExp(p.probs(), rv);
    if (cur < prev) monotone = false;
    prev = cur;
  }
  const double top = p.prob(0);
  const double var = VarExp(p.probs(), rv);
  CheckResult out{"benign_alignment", true,
                  monotone && top >= cfg.top_mass && var <= cfg.max_variance, {}};
  out.details = {{"top_mass", top}, {"var_exp_r", var}, {"non_decreasing", monotone}};
  return out;
}

}  // namespace curatelab

#endif  // CURATELAB_VERIFICATION_HPP_
