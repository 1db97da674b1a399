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


// Shared oracles for the attack tests and the acceptance gate.

#ifndef CURATELAB_TESTS_ATTACK_FIXTURES_HPP_
#define CURATELAB_TESTS_ATTACK_FIXTURES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "curatelab/attack.hpp"
#include "curatelab/environment.hpp"
#include "curatelab/reward_learning.hpp"
#include "curatelab/rng.hpp"

namespace curatelab::testing {

inline FeatureMap Coordinates(size_t q) {
  std::vector<FeatureMap::BasisFunction> basis;
  for (size_t j = 0; j < q; ++j) basis.push_back([j](const SupportPoint& x) { return x[j]; });
  return FeatureMap::Custom(std::move(basis), "coordinates");
}

inline SupportPoint GaussianPoint(size_t d, Rng& rng) {
  std::vector<double> c(d);
  for (double& v : c) v = rng.Normal();
  return SupportPoint(c);
}

// Max over columns of |J_i − FD_i| / |FD_i| between the implicit Jacobian and
// central differences of refits at o_i ± h (q <= 4, n <= 32).
inline double ImplicitJacobianError(uint64_t seed) {
  Rng rng(seed);
  const size_t q = 1 + rng.UniformIndex(4);
  const size_t n = 1 + rng.UniformIndex(32);
  const double l2 = rng.Uniform(0.05, 1.0);
  std::vector<PreferencePair> pairs;
  for (size_t i = 0; i < n; ++i) {
    pairs.push_back({GaussianPoint(q, rng), GaussianPoint(q, rng), rng.Uniform(0.05, 0.95)});
  }
  const PreferenceDataset data(std::move(pairs));
  const LinearRewardModel zero(Coordinates(q));
  FitConfig fit;
  fit.l2_reg = l2;
  fit.grad_tol = 1e-10;
  fit.max_iters = 1000;
  const LinearRewardModel tilde = FitMle(data, zero, fit);
  const Eigen::MatrixXd jac = ImplicitParamJacobian(data, tilde, l2);
  const Eigen::MatrixXd g = detail::FeatureDiffs(data, zero.features);
  const Eigen::VectorXd o = data.Labels();
  const double h = 1e-3;
  double worst = 0.0;
  for (size_t i = 0; i < n; ++i) {
    Eigen::VectorXd up = o, down = o;
    up[i] += h;
    down[i] -= h;
    const Eigen::VectorXd tp = detail::FitTheta(g, up, tilde.theta, fit).theta;
    const Eigen::VectorXd tm = detail::FitTheta(g, down, tilde.theta, fit).theta;
    const Eigen::VectorXd fd = (tp - tm) / (2.0 * h);
    const double err = (jac.col(i) - fd).norm() / std::max(fd.norm(), 1e-12);
    worst = std::max(worst, err);
  }
  return worst;
}

struct OracleResult {
  double attack_total = 0.0;
  size_t better = 0;  // feasible masks with strictly lower J
  size_t masks = 0;
  double Quantile() const { return static_cast<double>(better) / static_cast<double>(masks); }
};

// n = 12 preference pairs on the 10-class environment, budget 2. Scores the
// gradient attack's mask against every two-flip mask under J of the refit R~.
inline OracleResult ExhaustiveAttackOracle(uint64_t seed, double l2_reg = 1.0) {
  Rng env_rng(0);
  const Environment env = BuildEnvironment(EnvironmentConfig{}, env_rng);
  Rng rng(seed);
  const auto pairs = SamplePairs(env.p_data, 12, rng);
  const PreferenceDataset data = LabelDeterministic(pairs, env.reward);
  const auto batch = Sample(env.p_data, 1024, rng);
  FitConfig fit;
  fit.l2_reg = l2_reg;
  AttackConfig cfg;
  cfg.kappa = 2.0 / 12.0;
  cfg.seed = seed;
  const LinearRewardModel benign = FitBenign(data, env.features, fit);
  const AttackOutcome attack = GradientAttack(data, benign, cfg, fit, batch);

  OracleResult res;
  res.attack_total = attack.objective.total;
  const auto eligible = EligibleIndices(data);
  const size_t budget = FlipBudget(cfg.kappa, data.size());
  std::vector<bool> pick(eligible.size(), false);
  std::fill(pick.begin(), pick.begin() + std::min(budget, eligible.size()), true);
  do {
    std::vector<size_t> idx;
    for (size_t k = 0; k < eligible.size(); ++k) {
      if (pick[k]) idx.push_back(eligible[k]);
    }
    const FlipMask mask = FlipMask::FromIndices(data, idx, budget);
    const LinearRewardModel tilde = FitMle(ApplyFlips(data, mask), benign, fit);
    const double total = ObjectiveJ(benign, tilde, batch, cfg.alpha).total;
    ++res.masks;
    if (total < res.attack_total - 1e-12) ++res.better;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return res;
}

// O(n^2) dominance check under minimization of both coordinates.
inline std::vector<size_t> BruteForceFront(const std::vector<std::pair<double, double>>& pts) {
  std::vector<size_t> out;
  for (size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (size_t j = 0; j < pts.size() && !dominated; ++j) {
      dominated = pts[j].first <= pts[i].first && pts[j].second <= pts[i].second &&
                  (pts[j].first < pts[i].first || pts[j].second < pts[i].second);
    }
    if (!dominated) out.push_back(i);
  }
  return out;
}

// Up to 64 points; even trials sit on a 6x6 integer grid to force ties.
inline std::vector<std::pair<double, double>> RandomPointSet(size_t trial, Rng& rng) {
  const size_t n = 1 + rng.UniformIndex(64);
  const bool coarse = trial % 2 == 0;
  std::vector<std::pair<double, double>> pts(n);
  for (auto& [a, b] : pts) {
    a = coarse ? static_cast<double>(rng.UniformIndex(6)) : rng.Normal();
    b = coarse ? static_cast<double>(rng.UniformIndex(6)) : rng.Normal();
  }
  return pts;
}

// Cosine between the planted direction and the fit from n stochastic labels
// on standard-normal points in R^q.
inline double RecoveryCosine(uint64_t seed, size_t q = 4, size_t n = 5000) {
  Rng rng(seed);
  Eigen::VectorXd star(static_cast<Eigen::Index>(q));
  for (Eigen::Index j = 0; j < star.size(); ++j) star[j] = rng.Normal();
  star.normalize();
  const auto truth = RewardFunction::Linear(LinearRewardModel(star, Coordinates(q)));
  std::vector<PointPair> pairs;
  for (size_t i = 0; i < n; ++i) pairs.push_back({GaussianPoint(q, rng), GaussianPoint(q, rng)});
  const auto data = LabelStochastic(pairs, truth, rng);
  const auto fit = FitMle(data, LinearRewardModel(Coordinates(q)), FitConfig{});
  return fit.theta.dot(star) / fit.theta.norm();
}

}  // namespace curatelab::testing

#endif  // CURATELAB_TESTS_ATTACK_FIXTURES_HPP_
