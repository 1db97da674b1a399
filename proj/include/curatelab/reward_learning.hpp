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

#ifndef CURATELAB_REWARD_LEARNING_HPP_
#define CURATELAB_REWARD_LEARNING_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "curatelab/dist_core.hpp"
#include "curatelab/errors.hpp"
#include "curatelab/feature_map.hpp"
#include "curatelab/format.hpp"
#include "curatelab/rng.hpp"
#include "curatelab/support.hpp"

namespace curatelab {

// One comparison. o = 1 means z was preferred, o = 0 means x was, 0.5 a tie;
// relaxed attacks use soft labels in between.
struct PreferencePair {
  SupportPoint x;
  SupportPoint z;
  double o = 0.5;

  bool operator==(const PreferencePair&) const = default;
};

class PreferenceDataset {
 public:
  explicit PreferenceDataset(std::vector<PreferencePair> pairs) : pairs_(std::move(pairs)) {
    if (pairs_.empty()) throw InvalidArgumentError("preference dataset needs n >= 1");
    for (const auto& p : pairs_) CheckLabel(p.o);
  }

  size_t size() const { return pairs_.size(); }
  const std::vector<PreferencePair>& pairs() const { return pairs_; }
  const PreferencePair& operator[](size_t i) const { return pairs_[i]; }

  Eigen::VectorXd Labels() const {
    Eigen::VectorXd o(pairs_.size());
    for (size_t i = 0; i < pairs_.size(); ++i) o[i] = pairs_[i].o;
    return o;
  }

  PreferenceDataset WithLabels(const Eigen::VectorXd& labels) const {
    if (static_cast<size_t>(labels.size()) != pairs_.size()) {
      throw InvalidArgumentError("label vector length does not match dataset");
    }
    PreferenceDataset out(*this);
    for (size_t i = 0; i < pairs_.size(); ++i) {
      CheckLabel(labels[i]);
      out.pairs_[i].o = labels[i];
    }
    return out;
  }

  bool operator==(const PreferenceDataset&) const = default;

 private:
  static void CheckLabel(double o) {
    if (!(o >= 0.0 && o <= 1.0)) throw InvalidArgumentError("preference label must lie in [0, 1]");
  }

  std::vector<PreferencePair> pairs_;
};

struct PointPair {
  SupportPoint x;
  SupportPoint z;
};

// n pairs with both members drawn i.i.d. from p.
inline std::vector<PointPair> SamplePairs(const DiscreteDistribution& p, size_t n, Rng& rng) {
  if (n == 0) throw InvalidArgumentError("SamplePairs needs n >= 1");
  const IndexSampler sampler(p.probs());
  std::vector<PointPair> out;
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const size_t a = sampler(rng);
    const size_t b = sampler(rng);
    out.push_back({p.atom(a), p.atom(b)});
  }
  return out;
}

inline double Sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// log(1 + e^t) without overflow.
inline double Softplus(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

// o = 1 if r(x) < r(z), 0.5 on ties, 0 otherwise.
inline PreferenceDataset LabelDeterministic(std::span<const PointPair> pairs,
                                            const RewardFunction& r) {
  std::vector<PreferencePair> out;
  out.reserve(pairs.size());
  for (const auto& [x, z] : pairs) {
    const double rx = r(x);
    const double rz = r(z);
    const double o = rx < rz ? 1.0 : (rx == rz ? 0.5 : 0.0);
    out.push_back({x, z, o});
  }
  return PreferenceDataset(std::move(out));
}

// o ~ Bernoulli(sigma(r(z) − r(x))).
inline PreferenceDataset LabelStochastic(std::span<const PointPair> pairs, const RewardFunction& r,
                                         Rng& rng) {
  std::vector<PreferencePair> out;
  out.reserve(pairs.size());
  for (const auto& [x, z] : pairs) {
    const double o = rng.Bernoulli(Sigmoid(r(z) - r(x))) ? 1.0 : 0.0;
    out.push_back({x, z, o});
  }
  return PreferenceDataset(std::move(out));
}

// ---------------------------------------------------------------------------
// Bradley-Terry negative log-likelihood for a linear model. With
// Delta_i = R(x_i) − R(z_i) = g_i . theta and g_i = phi(x_i) − phi(z_i):
//   L = −sum_i [(1−o_i) log sigma(Delta_i) + o_i log sigma(−Delta_i)] + l2 |theta|^2

namespace detail {

// Rows g_i = phi(x_i) − phi(z_i).
inline Eigen::MatrixXd FeatureDiffs(const PreferenceDataset& data, const FeatureMap& f) {
  const Eigen::Index q = static_cast<Eigen::Index>(f.dim());
  Eigen::MatrixXd g(static_cast<Eigen::Index>(data.size()), q);
  Eigen::VectorXd a(q), b(q);
  for (size_t i = 0; i < data.size(); ++i) {
    f.EvaluateInto(data[i].x, a);
    f.EvaluateInto(data[i].z, b);
    g.row(static_cast<Eigen::Index>(i)) = (a - b).transpose();
  }
  return g;
}

inline double Loss(const Eigen::MatrixXd& g, const Eigen::VectorXd& o,
                   const Eigen::VectorXd& theta, double l2) {
  const Eigen::VectorXd delta = g * theta;
  double s = 0.0;
  for (Eigen::Index i = 0; i < delta.size(); ++i) {
    s += (1.0 - o[i]) * Softplus(-delta[i]) + o[i] * Softplus(delta[i]);
  }
  return s + l2 * theta.squaredNorm();
}

inline Eigen::VectorXd Gradient(const Eigen::MatrixXd& g, const Eigen::VectorXd& o,
                                const Eigen::VectorXd& theta, double l2) {
  const Eigen::VectorXd delta = g * theta;
  Eigen::VectorXd w(delta.size());
  for (Eigen::Index i = 0; i < delta.size(); ++i) w[i] = Sigmoid(delta[i]) - (1.0 - o[i]);
  return g.transpose() * w + 2.0 * l2 * theta;
}

inline Eigen::MatrixXd Hessian(const Eigen::MatrixXd& g, const Eigen::VectorXd& theta, double l2) {
  const Eigen::VectorXd delta = g * theta;
  Eigen::VectorXd w(delta.size());
  for (Eigen::Index i = 0; i < delta.size(); ++i) {
    const double s = Sigmoid(delta[i]);
    w[i] = s * (1.0 - s);
  }
  Eigen::MatrixXd h = g.transpose() * w.asDiagonal() * g;
  h.diagonal().array() += 2.0 * l2;
  return h;
}

}  // namespace detail

inline double BtLoss(const PreferenceDataset& data, const LinearRewardModel& model, double l2_reg) {
  return detail::Loss(detail::FeatureDiffs(data, model.features), data.Labels(), model.theta,
                      l2_reg);
}

inline Eigen::VectorXd BtLossGradient(const PreferenceDataset& data,
                                      const LinearRewardModel& model, double l2_reg) {
  return detail::Gradient(detail::FeatureDiffs(data, model.features), data.Labels(), model.theta,
                          l2_reg);
}

inline Eigen::MatrixXd BtLossHessian(const PreferenceDataset& data, const LinearRewardModel& model,
                                     double l2_reg) {
  return detail::Hessian(detail::FeatureDiffs(data, model.features), model.theta, l2_reg);
}

// d(grad L)/d(delta), q x n: perturbing o_i moves the gradient by g_i.
inline Eigen::MatrixXd LabelCrossDerivative(const PreferenceDataset& data,
                                            const LinearRewardModel& model) {
  return detail::FeatureDiffs(data, model.features).transpose();
}

// ---------------------------------------------------------------------------
// Maximum-likelihood fit

enum class FitSolver { kNewton, kGradientDescent };

struct FitConfig {
  // Gradient-descent step, applied to the per-pair mean gradient.
  double learning_rate = 0.5;
  size_t max_iters = 200;
  double l2_reg = 1e-4;
  double grad_tol = 1e-8;
  FitSolver solver = FitSolver::kNewton;

  void Validate() const {
    if (!(learning_rate > 0.0 && std::isfinite(learning_rate))) {
      throw InvalidArgumentError("learning_rate must be positive");
    }
    if (!(l2_reg >= 0.0 && std::isfinite(l2_reg))) throw InvalidArgumentError("l2_reg must be >= 0");
    if (!(grad_tol >= 0.0)) throw InvalidArgumentError("grad_tol must be >= 0");
  }
};

struct FitResult {
  Eigen::VectorXd theta;
  double loss = 0.0;
  double grad_norm = 0.0;
  size_t iterations = 0;
  bool converged = false;
};

namespace detail {

inline void CheckFinite(double loss, size_t iter) {
  if (!std::isfinite(loss)) {
    throw DivergenceError("non-finite loss at iteration " + std::to_string(iter) +
                          "; try a smaller learning_rate");
  }
}

// Minimizes the loss from `theta0`. Keeps the best iterate seen, so the result
// never has a larger loss than the start.
inline FitResult FitTheta(const Eigen::MatrixXd& g, const Eigen::VectorXd& o,
                          const Eigen::VectorXd& theta0, const FitConfig& cfg) {
  cfg.Validate();
  const double n = static_cast<double>(g.rows());
  Eigen::VectorXd theta = theta0;
  double loss = Loss(g, o, theta, cfg.l2_reg);
  CheckFinite(loss, 0);
  Eigen::VectorXd grad = Gradient(g, o, theta, cfg.l2_reg);
  const FitResult start{theta, loss, grad.norm(), 0, false};
  FitResult res = start;
  for (size_t it = 1; it <= cfg.max_iters && grad.norm() > cfg.grad_tol; ++it) {
    Eigen::VectorXd step;
    double next_loss;
    if (cfg.solver == FitSolver::kNewton) {
      Eigen::MatrixXd h = Hessian(g, theta, cfg.l2_reg);
      h.diagonal().array() += 1e-12 * std::max(1.0, h.diagonal().maxCoeff());
      step = -h.ldlt().solve(grad);
      if (!step.allFinite() || step.dot(grad) >= 0.0) step = -grad / n;
      // Armijo backtracking. Close to the optimum the decrease drowns in the
      // loss's rounding error; there a full step is kept if it shrinks the
      // gradient.
      const double slope = grad.dot(step);
      next_loss = Loss(g, o, theta + step, cfg.l2_reg);
      const double noise = 1e-12 * std::max(1.0, std::abs(loss));
      const bool flat = next_loss <= loss + noise &&
                        Gradient(g, o, theta + step, cfg.l2_reg).norm() < grad.norm();
      for (int k = 0; k < 60 && !flat && !(next_loss <= loss + 1e-4 * slope); ++k) {
        step *= 0.5;
        next_loss = Loss(g, o, theta + step, cfg.l2_reg);
      }
      if (!flat && !(next_loss <= loss)) break;  // no further progress in floating point
    } else {
      step = -cfg.learning_rate * grad / n;
      next_loss = Loss(g, o, theta + step, cfg.l2_reg);
      CheckFinite(next_loss, it);
    }
    theta += step;
    loss = next_loss;
    grad = Gradient(g, o, theta, cfg.l2_reg);
    if (!grad.allFinite()) CheckFinite(std::numeric_limits<double>::quiet_NaN(), it);
    res.iterations = it;
    // Newton iterates are monotone up to rounding; gradient descent keeps the
    // best point seen.
    if (cfg.solver == FitSolver::kNewton || loss <= res.loss) {
      res.theta = theta;
      res.loss = loss;
      res.grad_norm = grad.norm();
    }
  }
  if (res.loss > start.loss) {
    res.theta = start.theta;
    res.loss = start.loss;
    res.grad_norm = start.grad_norm;
  }
  res.converged = res.grad_norm <= cfg.grad_tol;
  return res;
}

}  // namespace detail

inline FitResult FitMleDetailed(const PreferenceDataset& data, const LinearRewardModel& init,
                                const FitConfig& cfg) {
  return detail::FitTheta(detail::FeatureDiffs(data, init.features), data.Labels(), init.theta,
                          cfg);
}

// Minimizes the regularized BT loss starting from `init`.
inline LinearRewardModel FitMle(const PreferenceDataset& data, const LinearRewardModel& init,
                                const FitConfig& cfg) {
  return LinearRewardModel(FitMleDetailed(data, init, cfg).theta, init.features);
}

// ---------------------------------------------------------------------------
// Text format: one pair per line, "x_1 ... x_d | z_1 ... z_d | o", numbers
// printed with 17 significant digits.

inline void WriteDataset(std::ostream& os, const PreferenceDataset& data) {
  auto put = [&](double v) { os << FormatDouble(v); };
  for (const auto& p : data.pairs()) {
    for (size_t i = 0; i < p.x.dim(); ++i) {
      put(p.x[i]);
      os << ' ';
    }
    os << "| ";
    for (size_t i = 0; i < p.z.dim(); ++i) {
      put(p.z[i]);
      os << ' ';
    }
    os << "| ";
    put(p.o);
    os << '\n';
  }
}

inline PreferenceDataset ReadDataset(std::istream& is) {
  std::vector<PreferencePair> pairs;
  std::string line;
  size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<std::vector<double>> fields(1);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      if (tok == "|") {
        fields.emplace_back();
        continue;
      }
      size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) {
        throw InvalidArgumentError("line " + std::to_string(lineno) + ": bad number '" + tok + "'");
      }
      fields.back().push_back(v);
    }
    if (fields.size() != 3 || fields[2].size() != 1) {
      throw InvalidArgumentError("line " + std::to_string(lineno) + ": expected 'x | z | o'");
    }
    pairs.push_back({SupportPoint(fields[0]), SupportPoint(fields[1]), fields[2][0]});
  }
  return PreferenceDataset(std::move(pairs));
}

}  // namespace curatelab

#endif  // CURATELAB_REWARD_LEARNING_HPP_
