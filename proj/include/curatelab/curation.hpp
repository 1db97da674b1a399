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

#ifndef CURATELAB_CURATION_HPP_
#define CURATELAB_CURATION_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "curatelab/dist_core.hpp"
#include "curatelab/errors.hpp"
#include "curatelab/rng.hpp"
#include "curatelab/support.hpp"

namespace curatelab {

// Absolute slack for bound checks against exact enumeration.
inline constexpr double kBoundTolerance = 1e-9;
// Monte Carlo bound checks accept observations within this many standard errors.
inline constexpr double kMonteCarloSigmas = 3.0;
inline constexpr uint64_t kDefaultMaxTuples = 10'000'000;

struct CurationConfig {
  double phi = 0.0;  // malicious fraction
  int k = 2;         // choice-set size
  // Weight of curated synthetic data relative to real data. Empty means
  // retraining on curated data only (lambda -> infinity).
  std::optional<double> lambda;

  void Validate() const {
    if (!(phi >= 0.0 && phi <= 1.0)) throw InvalidArgumentError("phi must lie in [0, 1]");
    if (k < 2) throw InvalidArgumentError("k must be >= 2");
    if (lambda && !(*lambda >= 0.0 && std::isfinite(*lambda))) {
      throw InvalidArgumentError("lambda must be finite and >= 0 (or infinite)");
    }
  }
};

// Lower/upper bounds on E_{p'}[e^r] next to the realized value.
struct BoundReport {
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  double observed = 0.0;
  double var_tilde = 0.0;
  double cov_tilde = 0.0;
  double std_error = 0.0;  // zero when `observed` is exact
  bool satisfied = false;
};

inline bool WithinBounds(double lower, double observed, double upper, double std_error = 0.0) {
  const double slack = std::max(kBoundTolerance, kMonteCarloSigmas * std_error);
  return lower - slack <= observed && observed <= upper + slack;
}

// ---------------------------------------------------------------------------
// Choice models

inline void BtChoiceProbsInto(std::span<const double> rewards, std::span<double> out) {
  const double top = *std::max_element(rewards.begin(), rewards.end());
  double total = 0.0;
  for (size_t i = 0; i < rewards.size(); ++i) {
    out[i] = std::exp(rewards[i] - top);
    total += out[i];
  }
  for (size_t i = 0; i < rewards.size(); ++i) out[i] /= total;
}

// Bradley-Terry choice among K items: softmax of their rewards.
inline std::vector<double> BtChoiceProbs(std::span<const double> rewards) {
  if (rewards.empty()) throw InvalidArgumentError("BtChoiceProbs needs at least one reward");
  std::vector<double> out(rewards.size());
  BtChoiceProbsInto(rewards, out);
  return out;
}

// (1 − phi)·softmax(r) + phi·softmax(r~).
inline std::vector<double> MixtureChoiceProbs(std::span<const double> r_vals,
                                              std::span<const double> rtilde_vals, double phi) {
  if (r_vals.size() != rtilde_vals.size()) {
    throw InvalidArgumentError("benign and adversarial reward lists differ in length");
  }
  if (!(phi >= 0.0 && phi <= 1.0)) throw InvalidArgumentError("phi must lie in [0, 1]");
  std::vector<double> benign = BtChoiceProbs(r_vals);
  const std::vector<double> malicious = BtChoiceProbs(rtilde_vals);
  for (size_t i = 0; i < benign.size(); ++i) {
    benign[i] = (1.0 - phi) * benign[i] + phi * malicious[i];
  }
  return benign;
}

namespace detail {

// Reusable scratch for evaluating the mixture rule on one K-tuple.
class TupleChooser {
 public:
  TupleChooser(std::span<const double> r, std::span<const double> rt, double phi, int k)
      : r_(r), rt_(rt), phi_(phi), rv_(k), rtv_(k), a_(k), b_(k), sel_(k) {}

  // Selection probabilities for the atoms at `idx`.
  std::span<const double> operator()(std::span<const size_t> idx) {
    for (size_t j = 0; j < idx.size(); ++j) {
      rv_[j] = r_[idx[j]];
      rtv_[j] = rt_[idx[j]];
    }
    BtChoiceProbsInto(rv_, a_);
    BtChoiceProbsInto(rtv_, b_);
    for (size_t j = 0; j < idx.size(); ++j) sel_[j] = (1.0 - phi_) * a_[j] + phi_ * b_[j];
    return sel_;
  }

 private:
  std::span<const double> r_, rt_;
  double phi_;
  std::vector<double> rv_, rtv_, a_, b_, sel_;
};

inline void CheckAligned(const DiscreteDistribution& p, std::span<const double> r,
                         std::span<const double> rt) {
  if (r.size() != p.size() || rt.size() != p.size()) {
    throw DomainMismatchError("reward values do not cover the support");
  }
}

inline uint64_t TupleCount(size_t m, int k, uint64_t cap) {
  uint64_t total = 1;
  for (int i = 0; i < k; ++i) {
    if (total > cap / std::max<uint64_t>(m, 1)) return cap + 1;
    total *= m;
  }
  return total;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// One-step updates. The `*Values` forms take per-atom reward values aligned
// with p's support; the RewardFunction forms evaluate them first.

// Draws `n_draws` K-tuples from p, selects one atom from each by the mixture
// rule, and returns the empirical distribution of selections on p's support.
inline DiscreteDistribution CurateMonteCarloValues(const DiscreteDistribution& p,
                                                   std::span<const double> r,
                                                   std::span<const double> rt,
                                                   const CurationConfig& cfg, size_t n_draws,
                                                   Rng& rng) {
  cfg.Validate();
  detail::CheckAligned(p, r, rt);
  if (n_draws == 0) throw InvalidArgumentError("n_draws must be >= 1");
  const IndexSampler sampler(p.probs());
  detail::TupleChooser choose(r, rt, cfg.phi, cfg.k);
  std::vector<size_t> tuple(cfg.k);
  std::vector<double> counts(p.size(), 0.0);
  for (size_t d = 0; d < n_draws; ++d) {
    for (size_t& i : tuple) i = sampler(rng);
    const auto sel = choose(tuple);
    const double u = rng.Uniform01();
    double acc = 0.0;
    size_t pick = tuple.size() - 1;
    for (size_t j = 0; j < tuple.size(); ++j) {
      acc += sel[j];
      if (u < acc) {
        pick = j;
        break;
      }
    }
    counts[tuple[pick]] += 1.0;
  }
  return p.WithProbs(std::move(counts));
}

inline DiscreteDistribution CurateMonteCarlo(const DiscreteDistribution& p,
                                             const RewardFunction& r,
                                             const RewardFunction& r_tilde,
                                             const CurationConfig& cfg, size_t n_draws, Rng& rng) {
  return CurateMonteCarloValues(p, r.Values(p), r_tilde.Values(p), cfg, n_draws, rng);
}

// K -> infinity limit of the curated distribution:
//   p'(x) = p(x)[(1−phi) e^{r(x)}/E_p[e^r] + phi e^{r~(x)}/E_p[e^{r~}]].
inline DiscreteDistribution UpdateExactKInfValues(const DiscreteDistribution& p,
                                                  std::span<const double> r,
                                                  std::span<const double> rt, double phi) {
  detail::CheckAligned(p, r, rt);
  if (!(phi >= 0.0 && phi <= 1.0)) throw InvalidArgumentError("phi must lie in [0, 1]");
  // Shift by the max so the weights cannot overflow; the ratio is shift-free.
  const double r_top = *std::max_element(r.begin(), r.end());
  const double rt_top = *std::max_element(rt.begin(), rt.end());
  double zr = 0.0, zt = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    zr += p.prob(i) * std::exp(r[i] - r_top);
    zt += p.prob(i) * std::exp(rt[i] - rt_top);
  }
  std::vector<double> next(p.size());
  for (size_t i = 0; i < p.size(); ++i) {
    next[i] = p.prob(i) * ((1.0 - phi) * std::exp(r[i] - r_top) / zr +
                           phi * std::exp(rt[i] - rt_top) / zt);
  }
  return p.WithProbs(std::move(next));
}

inline DiscreteDistribution UpdateExactKInf(const DiscreteDistribution& p, const RewardFunction& r,
                                            const RewardFunction& r_tilde, double phi) {
  return UpdateExactKInfValues(p, r.Values(p), r_tilde.Values(p), phi);
}

// Exact finite-K curated distribution by enumerating all m^K ordered tuples.
inline DiscreteDistribution UpdateExactFiniteKValues(const DiscreteDistribution& p,
                                                     std::span<const double> r,
                                                     std::span<const double> rt, double phi,
                                                     int k,
                                                     uint64_t max_tuples = kDefaultMaxTuples) {
  detail::CheckAligned(p, r, rt);
  if (k < 1) throw InvalidArgumentError("k must be >= 1");
  if (!(phi >= 0.0 && phi <= 1.0)) throw InvalidArgumentError("phi must lie in [0, 1]");
  const size_t m = p.size();
  if (detail::TupleCount(m, k, max_tuples) > max_tuples) {
    throw EnumerationTooLargeError("m^K = " + std::to_string(m) + "^" + std::to_string(k) +
                                   " exceeds the enumeration cap");
  }
  detail::TupleChooser choose(r, rt, phi, k);
  std::vector<size_t> idx(k, 0);
  std::vector<double> next(m, 0.0);
  while (true) {
    double weight = 1.0;
    for (size_t i : idx) weight *= p.prob(i);
    if (weight > 0.0) {
      const auto sel = choose(idx);
      for (size_t j = 0; j < idx.size(); ++j) next[idx[j]] += weight * sel[j];
    }
    int pos = k - 1;
    while (pos >= 0 && ++idx[pos] == m) idx[pos--] = 0;
    if (pos < 0) break;
  }
  return p.WithProbs(std::move(next));
}

inline DiscreteDistribution UpdateExactFiniteK(const DiscreteDistribution& p,
                                               const RewardFunction& r,
                                               const RewardFunction& r_tilde, double phi, int k,
                                               uint64_t max_tuples = kDefaultMaxTuples) {
  return UpdateExactFiniteKValues(p, r.Values(p), r_tilde.Values(p), phi, k, max_tuples);
}

// Maximizer of the weighted cross-entropy over real and curated data:
// weights 1/(1+lambda) on p_data and lambda/(1+lambda) on the curated law.
inline DiscreteDistribution MixedUpdate(const DiscreteDistribution& p_data,
                                        const DiscreteDistribution& p_curated, double lambda) {
  if (!(lambda >= 0.0 && std::isfinite(lambda))) {
    throw InvalidArgumentError("lambda must be finite and >= 0");
  }
  return Mix(p_data, p_curated, 1.0 / (1.0 + lambda));
}

inline DiscreteDistribution MixedUpdate(const DiscreteDistribution& p_data,
                                        const DiscreteDistribution& p_curated,
                                        std::optional<double> lambda) {
  return lambda ? MixedUpdate(p_data, p_curated, *lambda) : p_curated;
}

// ---------------------------------------------------------------------------
// Bound calculators

struct SandwichOptions {
  bool allow_exact = true;
  bool allow_monte_carlo = true;
  uint64_t max_tuples = kDefaultMaxTuples;
  size_t monte_carlo_draws = 100'000;
  uint64_t monte_carlo_seed = 0;
};

namespace detail {

struct ObservedExpReward {
  double value;
  double std_error;
};

// E_{p'}[e^r] for the finite-K curated law, by enumeration when feasible
// and otherwise by a Rao-Blackwellized Monte Carlo average (the conditional
// expectation given each sampled tuple).
inline ObservedExpReward ObservedAfterCuration(const DiscreteDistribution& p,
                                               std::span<const double> r,
                                               std::span<const double> rt, double phi, int k,
                                               const SandwichOptions& opt) {
  const bool feasible = TupleCount(p.size(), k, opt.max_tuples) <= opt.max_tuples;
  if (opt.allow_exact && feasible) {
    const auto next = UpdateExactFiniteKValues(p, r, rt, phi, k, opt.max_tuples);
    return {ExpectExp(next.probs(), r), 0.0};
  }
  if (!opt.allow_monte_carlo) {
    throw EnumerationTooLargeError("exact enumeration infeasible and Monte Carlo disabled");
  }
  Rng rng(opt.monte_carlo_seed);
  const IndexSampler sampler(p.probs());
  TupleChooser choose(r, rt, phi, k);
  std::vector<size_t> tuple(k);
  double mean = 0.0, m2 = 0.0;
  const size_t n = std::max<size_t>(opt.monte_carlo_draws, 2);
  for (size_t d = 0; d < n; ++d) {
    for (size_t& i : tuple) i = sampler(rng);
    const auto sel = choose(tuple);
    double v = 0.0;
    for (size_t j = 0; j < tuple.size(); ++j) v += sel[j] * std::exp(r[tuple[j]]);
    const double delta = v - mean;
    mean += delta / static_cast<double>(d + 1);
    m2 += delta * (v - mean);
  }
  const double var = m2 / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n))};
}

}  // namespace detail

// Upper and lower bounds on E_{p'}[e^r] after one finite-K curation step:
//   Var~ = (1−phi)(K−1)/K · Var_p[e^r],  Cov~ = phi(K−1)/K · Cov_p[e^r, e^{r~}]
//   lower = E_p[e^r] + Var~/e^{r_max} + Cov~/e^{r~_min}
//   upper = E_p[e^r] + Var~/e^{r_min} + Cov~/e^{r~_max}
// with extrema taken over the support of p.
inline BoundReport SandwichBoundsValues(const DiscreteDistribution& p, std::span<const double> r,
                                        std::span<const double> rt, double phi, int k,
                                        const SandwichOptions& opt = {}) {
  detail::CheckAligned(p, r, rt);
  if (k < 1) throw InvalidArgumentError("k must be >= 1");
  const double shrink = static_cast<double>(k - 1) / static_cast<double>(k);
  const RewardRange rr = Extrema(r);
  const RewardRange tr = Extrema(rt);
  BoundReport rep;
  rep.var_tilde = (1.0 - phi) * shrink * VarExp(p.probs(), r);
  rep.cov_tilde = phi * shrink * CovExp(p.probs(), r, rt);
  const double base = ExpectExp(p.probs(), r);
  rep.lower = base + rep.var_tilde / std::exp(rr.max) + rep.cov_tilde / std::exp(tr.min);
  rep.upper = base + rep.var_tilde / std::exp(rr.min) + rep.cov_tilde / std::exp(tr.max);
  const auto obs = detail::ObservedAfterCuration(p, r, rt, phi, k, opt);
  rep.observed = obs.value;
  rep.std_error = obs.std_error;
  rep.satisfied = WithinBounds(rep.lower, rep.observed, rep.upper, rep.std_error);
  return rep;
}

inline BoundReport SandwichBounds(const DiscreteDistribution& p, const RewardFunction& r,
                                  const RewardFunction& r_tilde, double phi, int k,
                                  const SandwichOptions& opt = {}) {
  return SandwichBoundsValues(p, r.Values(p), r_tilde.Values(p), phi, k, opt);
}

// K-free lower bound E_p[e^r] + phi·Cov_p[e^r, e^{r~}].
inline double CovarianceFloorValues(const DiscreteDistribution& p, std::span<const double> r,
                                    std::span<const double> rt, double phi) {
  detail::CheckAligned(p, r, rt);
  return ExpectExp(p.probs(), r) + phi * CovExp(p.probs(), r, rt);
}

inline double CovarianceFloor(const DiscreteDistribution& p, const RewardFunction& r,
                              const RewardFunction& r_tilde, double phi) {
  return CovarianceFloorValues(p, r.Values(p), r_tilde.Values(p), phi);
}

// Constant multiplying phi·Cov_min in the mixed-data floor.
//   kStated:   (1+lambda)(1 − rho^t)
//   kProofSum: sum_{j=1..t} rho^j = lambda(1 − rho^t)
// with rho = lambda/(1+lambda). For lambda = infinity both tend to t.
enum class LoopBoundVariant { kStated, kProofSum };

inline double MixedLoopFactor(std::optional<double> lambda, size_t t, LoopBoundVariant variant) {
  if (!lambda) return static_cast<double>(t);
  const double rho = *lambda / (1.0 + *lambda);
  const double tail = 1.0 - std::pow(rho, static_cast<double>(t));
  return variant == LoopBoundVariant::kStated ? (1.0 + *lambda) * tail : *lambda * tail;
}

inline double MixedLoopFloor(double exp_reward_data, double cov_min, std::optional<double> lambda,
                             double phi_star, size_t t, LoopBoundVariant variant) {
  return exp_reward_data + phi_star * MixedLoopFactor(lambda, t, variant) * cov_min;
}

// Per-step monitor over a mixed-data trajectory p_0 = p_data, p_1, ..., p_T.
// `adversarial[i]` is the malicious reward used when producing p_{i+1}.
// Report t (0-based) bounds E_{p_{t+1}}[e^r] using Cov_min over p_0..p_t.
inline std::vector<BoundReport> MixedLoopMonitor(std::span<const DiscreteDistribution> trajectory,
                                                 const RewardFunction& r,
                                                 std::span<const RewardFunction> adversarial,
                                                 std::optional<double> lambda, double phi_star,
                                                 LoopBoundVariant variant) {
  if (trajectory.size() < 2) throw InvalidArgumentError("monitor needs a non-empty trajectory");
  if (adversarial.size() + 1 < trajectory.size()) {
    throw InvalidArgumentError("one adversarial reward per step is required");
  }
  const double e_data = ExpectExpReward(trajectory[0], r);
  double cov_min = std::numeric_limits<double>::infinity();
  std::vector<BoundReport> out;
  for (size_t t = 0; t + 1 < trajectory.size(); ++t) {
    cov_min = std::min(cov_min, CovExpRewards(trajectory[t], r, adversarial[t]));
    BoundReport rep;
    rep.cov_tilde = cov_min;
    rep.lower = MixedLoopFloor(e_data, cov_min, lambda, phi_star, t, variant);
    rep.observed = ExpectExpReward(trajectory[t + 1], r);
    rep.satisfied = rep.observed >= rep.lower - kBoundTolerance;
    out.push_back(rep);
  }
  return out;
}

}  // namespace curatelab

#endif  // CURATELAB_CURATION_HPP_
