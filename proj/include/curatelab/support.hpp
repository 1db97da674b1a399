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

#ifndef CURATELAB_SUPPORT_HPP_
#define CURATELAB_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "curatelab/errors.hpp"
#include "curatelab/rng.hpp"

namespace curatelab {

// Coordinates closer than this are the same atom when supports are merged.
inline constexpr double kAtomTolerance = 1e-12;

// A point x in R^d.
class SupportPoint {
 public:
  SupportPoint() = default;
  explicit SupportPoint(std::vector<double> coords) : coords_(std::move(coords)) {
    if (coords_.empty()) throw InvalidArgumentError("SupportPoint needs d >= 1");
    for (double c : coords_) {
      if (!std::isfinite(c)) throw InvalidArgumentError("SupportPoint coordinate is not finite");
    }
  }
  SupportPoint(std::initializer_list<double> coords)
      : SupportPoint(std::vector<double>(coords)) {}

  size_t dim() const { return coords_.size(); }
  double operator[](size_t i) const { return coords_[i]; }
  const std::vector<double>& coords() const { return coords_; }

  bool operator==(const SupportPoint&) const = default;

 private:
  std::vector<double> coords_;
};

inline bool SameAtom(const SupportPoint& a, const SupportPoint& b,
                     double tol = kAtomTolerance) {
  if (a.dim() != b.dim()) return false;
  for (size_t i = 0; i < a.dim(); ++i) {
    if (std::abs(a[i] - b[i]) > tol) return false;
  }
  return true;
}

inline double SquaredDistance(const SupportPoint& a, const SupportPoint& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.dim(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// Finite-support probability distribution. The atom list is immutable and
// shared between distributions derived from one another, so the retraining
// loop can reweight a fixed support without copying it.
class DiscreteDistribution {
 public:
  using AtomList = std::vector<SupportPoint>;

  // Validates and renormalizes `probs`. Atoms must be pairwise distinct.
  DiscreteDistribution(AtomList atoms, std::vector<double> probs)
      : atoms_(std::make_shared<const AtomList>(std::move(atoms))),
        probs_(std::move(probs)) {
    if (atoms_->empty()) throw InvalidArgumentError("distribution needs at least one atom");
    for (size_t i = 0; i < atoms_->size(); ++i) {
      for (size_t j = i + 1; j < atoms_->size(); ++j) {
        if (SameAtom((*atoms_)[i], (*atoms_)[j])) {
          throw InvalidArgumentError("distribution atoms " + std::to_string(i) + " and " +
                                     std::to_string(j) + " coincide");
        }
      }
    }
    Normalize();
  }

  static DiscreteDistribution Uniform(AtomList atoms) {
    std::vector<double> probs(atoms.size(), 1.0);
    return DiscreteDistribution(std::move(atoms), std::move(probs));
  }

  static DiscreteDistribution PointMass(SupportPoint atom) {
    return DiscreteDistribution(AtomList{std::move(atom)}, {1.0});
  }

  // Same support, new (renormalized) weights.
  DiscreteDistribution WithProbs(std::vector<double> probs) const {
    DiscreteDistribution out(*this);
    out.probs_ = std::move(probs);
    out.Normalize();
    return out;
  }

  size_t size() const { return atoms_->size(); }
  const AtomList& atoms() const { return *atoms_; }
  const SupportPoint& atom(size_t i) const { return (*atoms_)[i]; }
  std::span<const double> probs() const { return probs_; }
  double prob(size_t i) const { return probs_[i]; }

  // True when both distributions reference the same atom list object.
  bool SharesSupportWith(const DiscreteDistribution& other) const {
    return atoms_ == other.atoms_;
  }

  std::optional<size_t> IndexOf(const SupportPoint& x) const {
    for (size_t i = 0; i < atoms_->size(); ++i) {
      if (SameAtom((*atoms_)[i], x)) return i;
    }
    return std::nullopt;
  }

 private:
  void Normalize() {
    if (probs_.size() != atoms_->size()) {
      throw InvalidArgumentError("probability vector length does not match atom count");
    }
    double total = 0.0;
    for (double p : probs_) {
      if (!std::isfinite(p) || p < 0.0) {
        throw InvalidArgumentError("probabilities must be finite and non-negative");
      }
      total += p;
    }
    if (!(total > 0.0)) throw InvalidArgumentError("probabilities sum to zero");
    for (double& p : probs_) p /= total;
  }

  std::shared_ptr<const AtomList> atoms_;
  std::vector<double> probs_;
};

// Inverse-CDF sampler over atom indices.
class IndexSampler {
 public:
  explicit IndexSampler(std::span<const double> probs) : cdf_(probs.size()) {
    double acc = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      cdf_[i] = acc;
      if (probs[i] > 0.0) last_positive_ = i;
    }
  }

  size_t operator()(Rng& rng) const {
    const double u = rng.Uniform01() * cdf_.back();
    const auto i = static_cast<size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
    return std::min(i, last_positive_);
  }

 private:
  std::vector<double> cdf_;
  size_t last_positive_ = 0;
};

inline std::vector<size_t> SampleIndices(const DiscreteDistribution& p, size_t n, Rng& rng) {
  IndexSampler sampler(p.probs());
  std::vector<size_t> out(n);
  for (size_t& i : out) i = sampler(rng);
  return out;
}

// n i.i.d. draws from p.
inline std::vector<SupportPoint> Sample(const DiscreteDistribution& p, size_t n, Rng& rng) {
  if (n == 0) throw InvalidArgumentError("Sample needs n >= 1");
  std::vector<SupportPoint> out;
  out.reserve(n);
  for (size_t i : SampleIndices(p, n, rng)) out.push_back(p.atom(i));
  return out;
}

// Empirical distribution of `counts` on the support of p.
inline DiscreteDistribution EmpiricalOnSupport(const DiscreteDistribution& p,
                                               std::span<const size_t> indices) {
  std::vector<double> counts(p.size(), 0.0);
  for (size_t i : indices) counts[i] += 1.0;
  return p.WithProbs(std::move(counts));
}

namespace detail {

// Merges the supports of p and q: p's atoms first, then q's atoms not present
// in p. Returns aligned probability vectors.
struct MergedSupport {
  DiscreteDistribution::AtomList atoms;
  std::vector<double> p;
  std::vector<double> q;
};

inline MergedSupport MergeSupports(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  MergedSupport out;
  out.atoms = p.atoms();
  out.p.assign(p.probs().begin(), p.probs().end());
  out.q.assign(p.size(), 0.0);
  if (p.SharesSupportWith(q)) {
    out.q.assign(q.probs().begin(), q.probs().end());
    return out;
  }
  for (size_t j = 0; j < q.size(); ++j) {
    const auto idx = p.IndexOf(q.atom(j));
    if (idx) {
      out.q[*idx] += q.prob(j);
    } else {
      out.atoms.push_back(q.atom(j));
      out.p.push_back(0.0);
      out.q.push_back(q.prob(j));
    }
  }
  return out;
}

}  // namespace detail

// w·p + (1−w)·q on the merged support.
inline DiscreteDistribution Mix(const DiscreteDistribution& p, const DiscreteDistribution& q,
                                double w) {
  if (!(w >= 0.0 && w <= 1.0)) throw InvalidArgumentError("mixing weight must lie in [0, 1]");
  if (p.SharesSupportWith(q)) {
    std::vector<double> probs(p.size());
    for (size_t i = 0; i < p.size(); ++i) probs[i] = w * p.prob(i) + (1.0 - w) * q.prob(i);
    return p.WithProbs(std::move(probs));
  }
  auto merged = detail::MergeSupports(p, q);
  std::vector<double> probs(merged.atoms.size());
  for (size_t i = 0; i < probs.size(); ++i) probs[i] = w * merged.p[i] + (1.0 - w) * merged.q[i];
  return DiscreteDistribution(std::move(merged.atoms), std::move(probs));
}

// Total-variation distance (1/2)·Σ|p_i − q_i| on the merged support.
inline double TvDistance(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  const auto merged = detail::MergeSupports(p, q);
  double s = 0.0;
  for (size_t i = 0; i < merged.p.size(); ++i) s += std::abs(merged.p[i] - merged.q[i]);
  return std::min(1.0, 0.5 * s);
}

}  // namespace curatelab

#endif  // CURATELAB_SUPPORT_HPP_
