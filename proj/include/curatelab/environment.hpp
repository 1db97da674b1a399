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

#ifndef CURATELAB_ENVIRONMENT_HPP_
#define CURATELAB_ENVIRONMENT_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "curatelab/dist_core.hpp"
#include "curatelab/errors.hpp"
#include "curatelab/feature_map.hpp"
#include "curatelab/rng.hpp"
#include "curatelab/support.hpp"

namespace curatelab {

enum class EnvironmentKind { kGaussian8, kClasses };

struct EnvironmentConfig {
  EnvironmentKind kind = EnvironmentKind::kClasses;
  // gaussian8
  double radius = 2.0;
  double sigma = 0.02;
  std::vector<double> mu_star = {2.0, 0.0};
  double tau = 3.0;
  double gamma = -10.0;
  size_t atoms_per_mode = 16;
  double feature_bandwidth = 0.5;
  // classes
  size_t classes = 10;

  void Validate() const {
    if (kind == EnvironmentKind::kClasses) {
      if (classes < 2) throw InvalidArgumentError("classes must be >= 2");
      return;
    }
    if (!(radius > 0.0)) throw InvalidArgumentError("radius must be positive");
    if (!(sigma >= 0.0)) throw InvalidArgumentError("sigma must be >= 0");
    if (mu_star.size() != 2) throw InvalidArgumentError("mu_star must be two-dimensional");
    if (!(tau >= 0.0)) throw InvalidArgumentError("tau must be >= 0");
    if (atoms_per_mode == 0) throw InvalidArgumentError("atoms_per_mode must be >= 1");
    if (!(feature_bandwidth > 0.0)) throw InvalidArgumentError("feature_bandwidth must be positive");
  }
};

inline constexpr size_t kGaussianModes = 8;

// mu_t = radius·(cos(t·pi/4), sin(t·pi/4)), t = 0..7.
inline std::vector<SupportPoint> Gaussian8Centers(double radius) {
  std::vector<SupportPoint> out;
  for (size_t t = 0; t < kGaussianModes; ++t) {
    const double angle = static_cast<double>(t) * std::numbers::pi / 4.0;
    out.push_back({radius * std::cos(angle), radius * std::sin(angle)});
  }
  return out;
}

// r(x) = −gamma·max(0, |x − mu*| − tau).
inline double Gaussian8Reward(const SupportPoint& x, std::span<const double> mu_star, double tau,
                              double gamma) {
  if (x.dim() != 2 || mu_star.size() != 2) {
    throw InvalidArgumentError("gaussian8 reward is defined on R^2");
  }
  const double dx = x[0] - mu_star[0];
  const double dy = x[1] - mu_star[1];
  return -gamma * std::max(0.0, std::hypot(dx, dy) - tau);
}

// A finite environment: the real-data distribution, the true user reward, the
// feature map used by learned reward models, and a grouping of atoms (mode or
// class) for reporting proportions.
struct Environment {
  EnvironmentKind kind;
  DiscreteDistribution p_data;
  RewardFunction reward;
  FeatureMap features;
  std::vector<size_t> group;  // per atom
  size_t num_groups;
  std::string group_prefix;   // column prefix for proportions

  std::vector<double> GroupProportions(const DiscreteDistribution& p) const {
    std::vector<double> out(num_groups, 0.0);
    for (size_t i = 0; i < p.size(); ++i) out[group[i]] += p.prob(i);
    return out;
  }
};

inline size_t NearestIndex(const SupportPoint& x, std::span<const SupportPoint> centers) {
  size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (size_t j = 0; j < centers.size(); ++j) {
    const double d = SquaredDistance(x, centers[j]);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  return best;
}

// gaussian8: 8·atoms_per_mode points (centers plus N(0, sigma^2) jitter),
// uniform weights, reward from Gaussian8Reward, radial features at the
// centers. classes: C atoms at coordinate i with reward C − i and one-hot
// features.
inline Environment BuildEnvironment(const EnvironmentConfig& cfg, Rng& rng) {
  cfg.Validate();
  if (cfg.kind == EnvironmentKind::kClasses) {
    std::vector<SupportPoint> atoms;
    std::vector<double> values;
    std::vector<size_t> group;
    for (size_t i = 0; i < cfg.classes; ++i) {
      atoms.push_back({static_cast<double>(i)});
      values.push_back(static_cast<double>(cfg.classes - i));
      group.push_back(i);
    }
    auto p = DiscreteDistribution::Uniform(atoms);
    auto r = RewardFunction::Tabular(p, std::move(values));
    return {cfg.kind, std::move(p), std::move(r), FeatureMap::NearestIndicator(std::move(atoms)),
            std::move(group), cfg.classes, "class_"};
  }
  const auto centers = Gaussian8Centers(cfg.radius);
  std::vector<SupportPoint> atoms;
  std::vector<double> values;
  std::vector<size_t> group;
  for (size_t t = 0; t < kGaussianModes; ++t) {
    for (size_t a = 0; a < cfg.atoms_per_mode; ++a) {
      const double x = centers[t][0] + cfg.sigma * rng.Normal();
      const double y = centers[t][1] + cfg.sigma * rng.Normal();
      SupportPoint pt{x, y};
      // Zero noise would repeat the center; keep one atom per distinct point.
      if (std::any_of(atoms.begin(), atoms.end(),
                      [&](const SupportPoint& q) { return SameAtom(q, pt); })) {
        continue;
      }
      values.push_back(Gaussian8Reward(pt, cfg.mu_star, cfg.tau, cfg.gamma));
      group.push_back(NearestIndex(pt, centers));
      atoms.push_back(std::move(pt));
    }
  }
  auto p = DiscreteDistribution::Uniform(std::move(atoms));
  auto r = RewardFunction::Tabular(p, std::move(values));
  return {cfg.kind, std::move(p), std::move(r),
          FeatureMap::Radial(centers, cfg.feature_bandwidth), std::move(group), kGaussianModes,
          "mode_"};
}

// ---------------------------------------------------------------------------
// Adversarial reward presets

enum class AdversaryKind { kLearned, kNegated, kShiftedTarget };

// r~ = −r on the support of `env`.
inline RewardFunction NegatedReward(const Environment& env) {
  std::vector<double> v = env.reward.Values(env.p_data);
  for (double& x : v) x = -x;
  return RewardFunction::Tabular(env.p_data, std::move(v));
}

// classes only: r~ = index + 1, favoring the least-preferred class.
inline RewardFunction ShiftedTargetReward(const Environment& env) {
  if (env.kind != EnvironmentKind::kClasses) {
    throw InvalidArgumentError("shifted-target adversary is defined for the classes environment");
  }
  std::vector<double> v(env.p_data.size());
  for (size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i) + 1.0;
  return RewardFunction::Tabular(env.p_data, std::move(v));
}

// Wraps a reward model fitted by an attack.
inline RewardFunction LearnedReward(const LinearRewardModel& model) {
  return RewardFunction::Linear(model);
}

}  // namespace curatelab

#endif  // CURATELAB_ENVIRONMENT_HPP_
