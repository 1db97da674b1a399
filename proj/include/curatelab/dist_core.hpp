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

#ifndef CURATELAB_DIST_CORE_HPP_
#define CURATELAB_DIST_CORE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "curatelab/errors.hpp"
#include "curatelab/feature_map.hpp"
#include "curatelab/support.hpp"

namespace curatelab {

// Reward r(x), stored in log space. Either a per-atom table over a fixed
// support or a linear model theta . phi(x). Values are exponentiated only
// inside the moment operators below; environments keep |r| moderate so
// e^{2r} stays inside double range.
class RewardFunction {
 public:
  enum class Kind { kTabular, kLinear };

  static RewardFunction Tabular(const DiscreteDistribution& support, std::vector<double> values) {
    if (values.size() != support.size()) {
      throw InvalidArgumentError("tabular reward needs one value per support atom");
    }
    for (double v : values) {
      if (!std::isfinite(v)) throw InvalidArgumentError("reward values must be finite");
    }
    RewardFunction r(Kind::kTabular);
    r.support_ = support;
    r.values_ = std::move(values);
    return r;
  }

  static RewardFunction Tabular(std::vector<SupportPoint> atoms, std::vector<double> values) {
    return Tabular(DiscreteDistribution::Uniform(std::move(atoms)), std::move(values));
  }

  static RewardFunction Linear(LinearRewardModel model) {
    RewardFunction r(Kind::kLinear);
    r.model_ = std::move(model);
    return r;
  }

  Kind kind() const { return kind_; }
  const std::vector<double>& table() const { return values_; }
  const LinearRewardModel& model() const { return *model_; }

  double operator()(const SupportPoint& x) const {
    if (kind_ == Kind::kLinear) return (*model_)(x);
    const auto idx = support_->IndexOf(x);
    if (!idx) throw DomainMismatchError("tabular reward is undefined on the requested point");
    return values_[*idx];
  }

  // r evaluated on every atom of p, in atom order.
  std::vector<double> Values(const DiscreteDistribution& p) const {
    if (kind_ == Kind::kTabular && support_->SharesSupportWith(p)) return values_;
    if (kind_ == Kind::kLinear) {
      const Eigen::VectorXd v = model_->Evaluate(p.atoms());
      return std::vector<double>(v.data(), v.data() + v.size());
    }
    std::vector<double> out(p.size());
    for (size_t i = 0; i < p.size(); ++i) out[i] = (*this)(p.atom(i));
    return out;
  }

 private:
  explicit RewardFunction(Kind kind) : kind_(kind) {}

  Kind kind_;
  std::optional<DiscreteDistribution> support_;
  std::vector<double> values_;
  std::optional<LinearRewardModel> model_;
};

struct RewardRange {
  double min;
  double max;
};

inline RewardRange Extrema(std::span<const double> values) {
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return {*lo, *hi};
}

// Moment operators on per-atom reward values aligned with `probs`.

inline double ExpectExp(std::span<const double> probs, std::span<const double> values) {
  double s = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) s += probs[i] * std::exp(values[i]);
  return s;
}

// Cov[e^a, e^b], two-pass. Variance goes through the same path with a == b.
inline double CovExp(std::span<const double> probs, std::span<const double> a,
                     std::span<const double> b) {
  const double mean_a = ExpectExp(probs, a);
  const double mean_b = ExpectExp(probs, b);
  double s = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    s += probs[i] * (std::exp(a[i]) - mean_a) * (std::exp(b[i]) - mean_b);
  }
  return s;
}

inline double VarExp(std::span<const double> probs, std::span<const double> values) {
  return std::max(0.0, CovExp(probs, values, values));
}

// E_p[e^{r(x)}].
inline double ExpectExpReward(const DiscreteDistribution& p, const RewardFunction& r) {
  return ExpectExp(p.probs(), r.Values(p));
}

// Var_p[e^{r(x)}], clamped at zero.
inline double VarExpReward(const DiscreteDistribution& p, const RewardFunction& r) {
  return VarExp(p.probs(), r.Values(p));
}

// Cov_p[e^{r(x)}, e^{r~(x)}].
inline double CovExpRewards(const DiscreteDistribution& p, const RewardFunction& r,
                            const RewardFunction& r_tilde) {
  return CovExp(p.probs(), r.Values(p), r_tilde.Values(p));
}

// E_p[r(x)] (no exponential); used for reporting.
inline double ExpectReward(std::span<const double> probs, std::span<const double> values) {
  double s = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) s += probs[i] * values[i];
  return s;
}

}  // namespace curatelab

#endif  // CURATELAB_DIST_CORE_HPP_
