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

#ifndef CURATELAB_FEATURE_MAP_HPP_
#define CURATELAB_FEATURE_MAP_HPP_

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "curatelab/errors.hpp"
#include "curatelab/support.hpp"

namespace curatelab {

// Deterministic map phi: R^d -> R^q parameterizing linear reward models.
//
// Built-in families:
//   identity-plus-bias   (x_1, ..., x_d, 1)
//   nearest-indicator    one-hot of the nearest anchor (discrete classes)
//   radial               exp(-|x - c_j|^2 / (2 h^2)) per center c_j
// plus arbitrary user-supplied scalar basis functions.
class FeatureMap {
 public:
  using BasisFunction = std::function<double(const SupportPoint&)>;

  enum class Kind { kIdentityPlusBias, kNearestIndicator, kRadial, kCustom };

  static FeatureMap IdentityPlusBias(size_t input_dim) {
    if (input_dim == 0) throw InvalidArgumentError("identity-plus-bias needs input_dim >= 1");
    FeatureMap f(Kind::kIdentityPlusBias, input_dim + 1, "identity-plus-bias");
    f.input_dim_ = input_dim;
    return f;
  }

  static FeatureMap NearestIndicator(std::vector<SupportPoint> anchors) {
    if (anchors.empty()) throw InvalidArgumentError("nearest-indicator needs anchors");
    FeatureMap f(Kind::kNearestIndicator, anchors.size(), "nearest-indicator");
    f.points_ = std::make_shared<const std::vector<SupportPoint>>(std::move(anchors));
    return f;
  }

  static FeatureMap Radial(std::vector<SupportPoint> centers, double bandwidth) {
    if (centers.empty()) throw InvalidArgumentError("radial features need centers");
    if (!(bandwidth > 0.0)) throw InvalidArgumentError("radial bandwidth must be positive");
    FeatureMap f(Kind::kRadial, centers.size(), "radial");
    f.points_ = std::make_shared<const std::vector<SupportPoint>>(std::move(centers));
    f.bandwidth_ = bandwidth;
    return f;
  }

  static FeatureMap Custom(std::vector<BasisFunction> basis, std::string name = "custom") {
    if (basis.empty()) throw InvalidArgumentError("custom feature map needs basis functions");
    FeatureMap f(Kind::kCustom, basis.size(), std::move(name));
    f.basis_ = std::make_shared<const std::vector<BasisFunction>>(std::move(basis));
    return f;
  }

  Kind kind() const { return kind_; }
  size_t dim() const { return dim_; }
  const std::string& name() const { return name_; }

  void EvaluateInto(const SupportPoint& x, Eigen::Ref<Eigen::VectorXd> out) const {
    switch (kind_) {
      case Kind::kIdentityPlusBias:
        if (x.dim() != input_dim_) {
          throw InvalidArgumentError("identity-plus-bias expects d = " +
                                     std::to_string(input_dim_));
        }
        for (size_t i = 0; i < input_dim_; ++i) out[i] = x[i];
        out[input_dim_] = 1.0;
        break;
      case Kind::kNearestIndicator: {
        out.setZero();
        size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (size_t j = 0; j < points_->size(); ++j) {
          const double d = SquaredDistance(x, (*points_)[j]);
          if (d < best_d) {
            best_d = d;
            best = j;
          }
        }
        out[best] = 1.0;
        break;
      }
      case Kind::kRadial: {
        const double denom = 2.0 * bandwidth_ * bandwidth_;
        for (size_t j = 0; j < points_->size(); ++j) {
          out[j] = std::exp(-SquaredDistance(x, (*points_)[j]) / denom);
        }
        break;
      }
      case Kind::kCustom:
        for (size_t j = 0; j < basis_->size(); ++j) {
          const double v = (*basis_)[j](x);
          if (!std::isfinite(v)) throw InvalidArgumentError("feature map produced a non-finite value");
          out[j] = v;
        }
        break;
    }
  }

  Eigen::VectorXd operator()(const SupportPoint& x) const {
    Eigen::VectorXd out(dim_);
    EvaluateInto(x, out);
    return out;
  }

  // One row of features per point.
  Eigen::MatrixXd Rows(std::span<const SupportPoint> points) const {
    Eigen::MatrixXd out(points.size(), dim_);
    Eigen::VectorXd row(dim_);
    for (size_t i = 0; i < points.size(); ++i) {
      EvaluateInto(points[i], row);
      out.row(i) = row.transpose();
    }
    return out;
  }

 private:
  FeatureMap(Kind kind, size_t dim, std::string name)
      : kind_(kind), dim_(dim), name_(std::move(name)) {}

  Kind kind_;
  size_t dim_;
  std::string name_;
  size_t input_dim_ = 0;
  double bandwidth_ = 1.0;
  std::shared_ptr<const std::vector<SupportPoint>> points_;
  std::shared_ptr<const std::vector<BasisFunction>> basis_;
};

// R_theta(x) = theta . phi(x).
struct LinearRewardModel {
  Eigen::VectorXd theta;
  FeatureMap features;

  explicit LinearRewardModel(FeatureMap f)
      : theta(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(f.dim()))), features(std::move(f)) {}
  LinearRewardModel(Eigen::VectorXd t, FeatureMap f) : theta(std::move(t)), features(std::move(f)) {
    if (static_cast<size_t>(theta.size()) != features.dim()) {
      throw InvalidArgumentError("theta length does not match feature dimension");
    }
    if (!theta.allFinite()) throw InvalidArgumentError("theta must be finite");
  }

  double operator()(const SupportPoint& x) const { return theta.dot(features(x)); }

  Eigen::VectorXd Evaluate(std::span<const SupportPoint> points) const {
    return features.Rows(points) * theta;
  }
};

}  // namespace curatelab

#endif  // CURATELAB_FEATURE_MAP_HPP_
