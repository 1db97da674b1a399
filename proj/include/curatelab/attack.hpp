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

#ifndef CURATELAB_ATTACK_HPP_
#define CURATELAB_ATTACK_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "curatelab/errors.hpp"
#include "curatelab/feature_map.hpp"
#include "curatelab/format.hpp"
#include "curatelab/reward_learning.hpp"
#include "curatelab/rng.hpp"
#include "curatelab/support.hpp"
#include "json.hpp"

namespace curatelab {

inline constexpr double kHessianDamping = 1e-8;

// floor(kappa·n), robust to kappa·n landing a hair below an integer.
inline size_t FlipBudget(double kappa, size_t n) {
  return static_cast<size_t>(std::floor(kappa * static_cast<double>(n) + 1e-9));
}

// Pairs with a hard label (o in {0, 1}); ties cannot be flipped.
inline std::vector<size_t> EligibleIndices(const PreferenceDataset& data) {
  std::vector<size_t> out;
  for (size_t i = 0; i < data.size(); ++i) {
    if (data[i].o == 0.0 || data[i].o == 1.0) out.push_back(i);
  }
  return out;
}

enum class FlipPhase { kRelaxed, kDiscrete };

// Per-pair label perturbation. Discrete masks hold delta_i in {−1, 0, +1}.
struct FlipMask {
  std::vector<double> delta;
  FlipPhase phase = FlipPhase::kDiscrete;
  size_t budget = 0;
  bool budget_clipped = false;  // budget exceeded the eligible pairs

  static FlipMask Empty(size_t n, size_t budget = 0) {
    return {std::vector<double>(n, 0.0), FlipPhase::kDiscrete, budget, false};
  }

  // Discrete mask flipping `indices` of `data`.
  static FlipMask FromIndices(const PreferenceDataset& data, std::span<const size_t> indices,
                              size_t budget) {
    FlipMask m = Empty(data.size(), budget);
    for (size_t i : indices) {
      if (i >= data.size()) throw InvalidFlipError("flip index out of range");
      const double o = data[i].o;
      if (o != 0.0 && o != 1.0) {
        throw InvalidFlipError("pair " + std::to_string(i) + " has a tie label and cannot be flipped");
      }
      m.delta[i] = 1.0 - 2.0 * o;
    }
    return m;
  }

  std::vector<size_t> FlippedIndices() const {
    std::vector<size_t> out;
    for (size_t i = 0; i < delta.size(); ++i) {
      if (delta[i] != 0.0) out.push_back(i);
    }
    return out;
  }

  size_t NumFlips() const {
    return static_cast<size_t>(std::count_if(delta.begin(), delta.end(),
                                             [](double d) { return d != 0.0; }));
  }

  // Checks the phase invariants against `data`.
  void Validate(const PreferenceDataset& data) const {
    if (delta.size() != data.size()) throw InvalidFlipError("mask length does not match dataset");
    for (size_t i = 0; i < delta.size(); ++i) {
      const double o = data[i].o;
      const double after = o + delta[i];
      if (phase == FlipPhase::kRelaxed) {
        if (!(after >= 0.0 && after <= 1.0)) {
          throw InvalidFlipError("relaxed label leaves [0, 1] at pair " + std::to_string(i));
        }
        continue;
      }
      if (delta[i] == 0.0) continue;
      if ((o != 0.0 && o != 1.0) || (after != 0.0 && after != 1.0)) {
        throw InvalidFlipError("invalid discrete flip at pair " + std::to_string(i));
      }
    }
    if (phase == FlipPhase::kDiscrete && NumFlips() > budget) {
      throw InvalidFlipError("mask flips more pairs than its budget");
    }
  }
};

// o_i <- 1 − o_i on every flipped index; the mask's signs are not consulted,
// so applying a mask twice restores the data.
inline PreferenceDataset ApplyFlips(const PreferenceDataset& data, const FlipMask& mask) {
  if (mask.phase != FlipPhase::kDiscrete) throw InvalidFlipError("ApplyFlips needs a discrete mask");
  if (mask.delta.size() != data.size()) throw InvalidFlipError("mask length does not match dataset");
  Eigen::VectorXd o = data.Labels();
  for (size_t i : mask.FlippedIndices()) {
    if (o[i] != 0.0 && o[i] != 1.0) {
      throw InvalidFlipError("pair " + std::to_string(i) + " has a tie label and cannot be flipped");
    }
    o[i] = 1.0 - o[i];
  }
  return data.WithLabels(o);
}

// ---------------------------------------------------------------------------
// Attack objective J = cov_term + alpha·dist_term on a batch drawn from p_t:
//   cov_term  = empirical Cov(e^R, e^{R~})
//   dist_term = mean (R − R~)^2

struct AttackConfig {
  double kappa = 0.2;
  double alpha = 0.1;
  size_t cov_batch = 1024;
  double attack_lr = 0.1;
  size_t attack_iters = 30;
  uint64_t seed = 0;
  double init_scale = 0.1;  // relaxed start |delta_i| ~ U(0, init_scale)

  void Validate() const {
    if (!(kappa >= 0.0 && kappa <= 1.0)) throw InvalidArgumentError("kappa must lie in [0, 1]");
    if (!(alpha >= 0.0 && std::isfinite(alpha))) throw InvalidArgumentError("alpha must be >= 0");
    if (cov_batch == 0) throw InvalidArgumentError("cov_batch must be >= 1");
    if (!(attack_lr > 0.0 && std::isfinite(attack_lr))) {
      throw InvalidArgumentError("attack_lr must be positive");
    }
    if (!(init_scale >= 0.0 && init_scale <= 1.0)) {
      throw InvalidArgumentError("init_scale must lie in [0, 1]");
    }
  }
};

struct ObjectiveValue {
  double cov_term = 0.0;
  double dist_term = 0.0;
  double total = 0.0;
};

struct ObjectiveLogRow {
  size_t iteration = 0;
  ObjectiveValue value;
};

namespace detail {

inline ObjectiveValue Objective(const Eigen::VectorXd& r, const Eigen::VectorXd& rt, double alpha) {
  if (r.size() == 0) throw InvalidArgumentError("objective needs a non-empty batch");
  const double b = static_cast<double>(r.size());
  const Eigen::ArrayXd a = r.array().exp();
  const Eigen::ArrayXd c = rt.array().exp();
  ObjectiveValue v;
  v.cov_term = ((a - a.mean()) * (c - c.mean())).sum() / b;
  v.dist_term = (r - rt).squaredNorm() / b;
  v.total = v.cov_term + alpha * v.dist_term;
  return v;
}

// dJ/dR~ on the batch.
inline Eigen::VectorXd ObjectiveRewardGradient(const Eigen::VectorXd& r, const Eigen::VectorXd& rt,
                                               double alpha) {
  const double b = static_cast<double>(r.size());
  const Eigen::ArrayXd a = r.array().exp();
  const Eigen::ArrayXd c = rt.array().exp();
  const Eigen::ArrayXd dcov = (a - a.mean()) * c / b;
  const Eigen::ArrayXd ddist = -2.0 * (r - rt).array() / b;
  return (dcov + alpha * ddist).matrix();
}

inline Eigen::LDLT<Eigen::MatrixXd> DampedHessian(const Eigen::MatrixXd& g,
                                                  const Eigen::VectorXd& theta, double l2) {
  Eigen::MatrixXd h = Hessian(g, theta, l2);
  h.diagonal().array() += kHessianDamping;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw SingularHessianError("loss Hessian is singular after damping");
  }
  return ldlt;
}

}  // namespace detail

inline ObjectiveValue ObjectiveJ(const LinearRewardModel& benign, const LinearRewardModel& tilde,
                                 std::span<const SupportPoint> batch, double alpha) {
  if (batch.empty()) throw InvalidArgumentError("objective needs a non-empty batch");
  return detail::Objective(benign.Evaluate(batch), tilde.Evaluate(batch), alpha);
}

// d theta~ / d delta = −(H + eps·I)^{-1} · d(grad L)/d(delta), q x n.
inline Eigen::MatrixXd ImplicitParamJacobian(const PreferenceDataset& data,
                                             const LinearRewardModel& tilde, double l2_reg) {
  const Eigen::MatrixXd g = detail::FeatureDiffs(data, tilde.features);
  const auto ldlt = detail::DampedHessian(g, tilde.theta, l2_reg);
  Eigen::MatrixXd jac = -ldlt.solve(g.transpose());
  if (!jac.allFinite()) throw SingularHessianError("implicit Jacobian is not finite");
  return jac;
}

// Common result of every attack: the discrete mask and the adversarial
// reward model refit on the flipped labels.
struct AttackOutcome {
  FlipMask mask;
  LinearRewardModel tilde;
  ObjectiveValue objective;           // J of `tilde` on the batch
  std::vector<ObjectiveLogRow> log;   // relaxed-phase trace (gradient attack)
};

namespace detail {

inline AttackOutcome Finish(const PreferenceDataset& data, FlipMask mask,
                            const LinearRewardModel& benign, std::span<const SupportPoint> batch,
                            double alpha, const FitConfig& fit,
                            std::vector<ObjectiveLogRow> log = {}) {
  const PreferenceDataset flipped = ApplyFlips(data, mask);
  LinearRewardModel tilde = FitMle(flipped, benign, fit);
  const ObjectiveValue obj = ObjectiveJ(benign, tilde, batch, alpha);
  return {std::move(mask), std::move(tilde), obj, std::move(log)};
}

// Indices of the `budget` largest scores among `eligible`; ties go to the
// lower pair index.
inline std::vector<size_t> TopByScore(std::vector<size_t> eligible, std::span<const double> score,
                                      size_t budget) {
  std::stable_sort(eligible.begin(), eligible.end(),
                   [&](size_t a, size_t b) { return score[a] > score[b]; });
  eligible.resize(std::min(budget, eligible.size()));
  std::sort(eligible.begin(), eligible.end());
  return eligible;
}

// Euclidean projection of the relaxed mask onto
//   {delta : o_i + delta_i in [0, 1], sum_i |delta_i| <= budget}.
// Each delta_i already points toward its flip after the box clamp, so the
// budget part soft-thresholds magnitudes by the tau solving
// sum_i max(0, |delta_i| − tau) = budget.
inline void ProjectRelaxedMask(Eigen::VectorXd& delta, const Eigen::VectorXd& o, size_t budget) {
  for (Eigen::Index i = 0; i < delta.size(); ++i) delta[i] = std::clamp(delta[i], -o[i], 1.0 - o[i]);
  auto mass = [&](double tau) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < delta.size(); ++i) s += std::max(0.0, std::abs(delta[i]) - tau);
    return s;
  };
  const double cap = static_cast<double>(budget);
  if (mass(0.0) <= cap) return;
  double lo = 0.0, hi = delta.lpNorm<Eigen::Infinity>();
  for (int k = 0; k < 100; ++k) {
    const double mid = 0.5 * (lo + hi);
    (mass(mid) > cap ? lo : hi) = mid;
  }
  for (Eigen::Index i = 0; i < delta.size(); ++i) {
    const double m = std::max(0.0, std::abs(delta[i]) - hi);
    delta[i] = delta[i] >= 0.0 ? m : -m;
  }
}

}  // namespace detail

// Fits the benign reward model R_theta on clean labels from a zero start.
inline LinearRewardModel FitBenign(const PreferenceDataset& data, const FeatureMap& features,
                                   const FitConfig& fit) {
  return FitMle(data, LinearRewardModel(features), fit);
}

// Gradient-based attack on the relaxed mask. Each round refits R~ on the soft
// labels o + delta (warm start), differentiates J through the implicit
// function theorem, takes a max-norm-normalized step, and projects back onto
// o + delta in [0, 1] with sum |delta_i| <= floor(kappa·n). The final discrete
// mask flips the floor(kappa·n) eligible pairs with the largest |delta_i|.
inline AttackOutcome GradientAttack(const PreferenceDataset& data, const LinearRewardModel& benign,
                                    const AttackConfig& cfg, const FitConfig& fit,
                                    std::span<const SupportPoint> batch) {
  cfg.Validate();
  if (batch.empty()) throw InvalidArgumentError("attack needs a non-empty batch");
  const size_t n = data.size();
  const size_t budget = FlipBudget(cfg.kappa, n);
  const std::vector<size_t> eligible = EligibleIndices(data);
  if (budget == 0) {
    return detail::Finish(data, FlipMask::Empty(n, 0), benign, batch, cfg.alpha, fit);
  }

  const Eigen::MatrixXd g = detail::FeatureDiffs(data, benign.features);
  const Eigen::VectorXd o = data.Labels();
  const Eigen::MatrixXd phi_batch = benign.features.Rows(batch);
  const Eigen::VectorXd r_batch = phi_batch * benign.theta;

  Rng rng(DeriveSeed(cfg.seed, {0x6772616469656e74ULL}));
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (size_t i : eligible) {
    const double u = rng.Uniform(0.0, cfg.init_scale);
    delta[i] = o[i] == 0.0 ? u : -u;
  }
  detail::ProjectRelaxedMask(delta, o, budget);

  Eigen::VectorXd theta = benign.theta;
  std::vector<ObjectiveLogRow> log;
  for (size_t it = 0; it < cfg.attack_iters; ++it) {
    const Eigen::VectorXd soft = o + delta;
    theta = detail::FitTheta(g, soft, theta, fit).theta;
    const Eigen::VectorXd rt_batch = phi_batch * theta;
    log.push_back({it, detail::Objective(r_batch, rt_batch, cfg.alpha)});

    const Eigen::VectorXd dj_dtheta =
        phi_batch.transpose() * detail::ObjectiveRewardGradient(r_batch, rt_batch, cfg.alpha);
    const auto ldlt = detail::DampedHessian(g, theta, fit.l2_reg);
    Eigen::VectorXd dj_ddelta = -(g * ldlt.solve(dj_dtheta));
    for (size_t i = 0; i < n; ++i) {
      if (o[i] != 0.0 && o[i] != 1.0) dj_ddelta[i] = 0.0;
    }
    const double scale = dj_ddelta.lpNorm<Eigen::Infinity>();
    if (!(scale > 0.0) || !std::isfinite(scale)) break;
    delta -= (cfg.attack_lr / scale) * dj_ddelta;
    detail::ProjectRelaxedMask(delta, o, budget);
  }

  std::vector<double> magnitude(n);
  for (size_t i = 0; i < n; ++i) magnitude[i] = std::abs(delta[i]);
  const auto chosen = detail::TopByScore(eligible, magnitude, budget);
  FlipMask mask = FlipMask::FromIndices(data, chosen, budget);
  mask.budget_clipped = budget > eligible.size();
  return detail::Finish(data, std::move(mask), benign, batch, cfg.alpha, fit, std::move(log));
}

enum class HeuristicMode { kDiff, kMaxAbs };

// Flips the floor(kappa·n) eligible pairs with the highest score
//   diff:    |R(x) − R(z)|
//   max-abs: max(|R(x)|, |R(z)|)
// ties broken by lower pair index.
inline FlipMask HeuristicRank(const PreferenceDataset& data, const LinearRewardModel& benign,
                              HeuristicMode mode, double kappa) {
  const size_t budget = FlipBudget(kappa, data.size());
  const std::vector<size_t> eligible = EligibleIndices(data);
  std::vector<double> score(data.size());
  for (size_t i = 0; i < data.size(); ++i) {
    const double rx = benign(data[i].x);
    const double rz = benign(data[i].z);
    score[i] = mode == HeuristicMode::kDiff ? std::abs(rx - rz)
                                            : std::max(std::abs(rx), std::abs(rz));
  }
  FlipMask mask = FlipMask::FromIndices(data, detail::TopByScore(eligible, score, budget), budget);
  mask.budget_clipped = budget > eligible.size();
  return mask;
}

// Uniformly chosen floor(kappa·n) eligible pairs, without replacement.
inline FlipMask RandomAttack(const PreferenceDataset& data, double kappa, Rng& rng) {
  const size_t budget = FlipBudget(kappa, data.size());
  std::vector<size_t> eligible = EligibleIndices(data);
  const size_t take = std::min(budget, eligible.size());
  for (size_t i = 0; i < take; ++i) {
    std::swap(eligible[i], eligible[i + rng.UniformIndex(eligible.size() - i)]);
  }
  eligible.resize(take);
  std::sort(eligible.begin(), eligible.end());
  FlipMask mask = FlipMask::FromIndices(data, eligible, budget);
  mask.budget_clipped = budget > take;
  return mask;
}

// Indices (ascending) of points not dominated under minimization of both
// coordinates. Equal points do not dominate each other.
inline std::vector<size_t> NonDominatedFront(std::span<const std::pair<double, double>> points) {
  std::vector<size_t> order(points.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return points[a] < points[b]; });
  std::vector<size_t> front;
  double best_f2 = std::numeric_limits<double>::infinity();
  for (size_t s = 0; s < order.size();) {
    size_t e = s;
    while (e < order.size() && points[order[e]].first == points[order[s]].first) ++e;
    // Sorted by f2 within a group, so the group minimum comes first.
    const double group_min = points[order[s]].second;
    if (group_min < best_f2) {
      for (size_t k = s; k < e && points[order[k]].second == group_min; ++k) {
        front.push_back(order[k]);
      }
      best_f2 = group_min;
    }
    s = e;
  }
  std::sort(front.begin(), front.end());
  return front;
}

enum class ParetoSelection { kMinSum, kMinCov };

struct ParetoOutcome {
  AttackOutcome outcome;
  std::vector<ObjectiveValue> pool;
  std::vector<size_t> front;
  size_t chosen = 0;
};

// Pool of random budget-floor(kappa·n) masks; each is scored by refitting R~.
// Returns the non-dominated (cov_term, dist_term) member minimizing the
// selection criterion (lowest pool index on ties).
inline ParetoOutcome ParetoAttack(const PreferenceDataset& data, const LinearRewardModel& benign,
                                  const AttackConfig& cfg, const FitConfig& fit, size_t pool_size,
                                  std::span<const SupportPoint> batch,
                                  ParetoSelection selection = ParetoSelection::kMinSum) {
  cfg.Validate();
  if (pool_size == 0) throw InvalidArgumentError("pool_size must be >= 1");
  if (EligibleIndices(data).empty()) throw EmptyEligibleError("no pair has a flippable label");
  Rng rng(DeriveSeed(cfg.seed, {0x70617265746fULL}));
  std::vector<AttackOutcome> candidates;
  ParetoOutcome out{AttackOutcome{FlipMask{}, benign, {}, {}}, {}, {}, 0};
  std::vector<std::pair<double, double>> points;
  for (size_t k = 0; k < pool_size; ++k) {
    FlipMask mask = RandomAttack(data, cfg.kappa, rng);
    candidates.push_back(detail::Finish(data, std::move(mask), benign, batch, cfg.alpha, fit));
    out.pool.push_back(candidates.back().objective);
    points.emplace_back(out.pool.back().cov_term, out.pool.back().dist_term);
  }
  out.front = NonDominatedFront(points);
  auto criterion = [&](size_t i) {
    return selection == ParetoSelection::kMinSum ? points[i].first + points[i].second
                                                 : points[i].first;
  };
  out.chosen = out.front.front();
  for (size_t i : out.front) {
    if (criterion(i) < criterion(out.chosen)) out.chosen = i;
  }
  out.outcome = std::move(candidates[out.chosen]);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

// {"phase": ..., "budget": ..., "budget_clipped": ..., "flips": [{"index", "new_label"}]}
inline nlohmann::json FlipMaskToJson(const FlipMask& mask) {
  nlohmann::json flips = nlohmann::json::array();
  for (size_t i : mask.FlippedIndices()) {
    flips.push_back({{"index", i}, {"new_label", mask.delta[i] > 0.0 ? 1 : 0}});
  }
  return {{"phase", mask.phase == FlipPhase::kDiscrete ? "discrete" : "relaxed"},
          {"n", mask.delta.size()},
          {"budget", mask.budget},
          {"budget_clipped", mask.budget_clipped},
          {"flips", flips}};
}

inline FlipMask FlipMaskFromJson(const nlohmann::json& j) {
  if (j.at("phase") != "discrete") throw InvalidArgumentError("only discrete masks are serialized");
  FlipMask mask = FlipMask::Empty(j.at("n").get<size_t>(), j.at("budget").get<size_t>());
  mask.budget_clipped = j.at("budget_clipped").get<bool>();
  for (const auto& f : j.at("flips")) {
    const size_t i = f.at("index").get<size_t>();
    if (i >= mask.delta.size()) throw InvalidArgumentError("flip index out of range");
    mask.delta[i] = f.at("new_label").get<int>() == 1 ? 1.0 : -1.0;
  }
  return mask;
}

// Delimited rows: iteration,cov_term,dist_term,total.
inline void WriteObjectiveLog(std::ostream& os, std::span<const ObjectiveLogRow> rows) {
  os << "iteration,cov_term,dist_term,total\n";
  for (const auto& row : rows) {
    os << row.iteration << ',' << FormatDouble(row.value.cov_term) << ','
       << FormatDouble(row.value.dist_term) << ',' << FormatDouble(row.value.total) << '\n';
  }
}

}  // namespace curatelab

#endif  // CURATELAB_ATTACK_HPP_
