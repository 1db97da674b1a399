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

#ifndef CURATELAB_RETRAIN_LOOP_HPP_
#define CURATELAB_RETRAIN_LOOP_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "curatelab/attack.hpp"
#include "curatelab/curation.hpp"
#include "curatelab/dist_core.hpp"
#include "curatelab/environment.hpp"
#include "curatelab/errors.hpp"
#include "curatelab/format.hpp"
#include "curatelab/reward_learning.hpp"
#include "curatelab/rng.hpp"
#include "curatelab/support.hpp"
#include "json.hpp"

namespace curatelab {

enum class UpdateMode { kMonteCarlo, kExactKInf, kExactFiniteK };
enum class BenignScorer { kLearned, kTrue };
enum class AttackMethod { kNone, kGradient, kHeuristicDiff, kHeuristicMaxAbs, kPareto, kRandom };

struct LoopConfig {
  size_t iterations = 10;
  size_t n_gen = 2000;   // samples generated per iteration
  double beta = 0.5;     // fraction of generated samples kept by curation
  size_t n_pairs = 512;  // preference pairs per iteration
  CurationConfig curation;
  AttackMethod attack = AttackMethod::kNone;
  AttackConfig attack_cfg;
  FitConfig fit = [] {
    FitConfig f;
    f.l2_reg = 30.0;
    return f;
  }();
  size_t pareto_pool = 32;
  ParetoSelection pareto_selection = ParetoSelection::kMinSum;
  UpdateMode update = UpdateMode::kMonteCarlo;
  BenignScorer benign = BenignScorer::kLearned;
  AdversaryKind adversary = AdversaryKind::kLearned;
  uint64_t seed = 0;

  void Validate() const {
    if (iterations == 0) throw InvalidArgumentError("iterations must be >= 1");
    if (!(beta > 0.0 && beta <= 1.0)) throw InvalidArgumentError("beta must lie in (0, 1]");
    if (n_pairs == 0) throw InvalidArgumentError("n_pairs must be >= 1");
    if (update == UpdateMode::kMonteCarlo &&
        static_cast<size_t>(std::llround(beta * static_cast<double>(n_gen))) == 0) {
      throw InvalidArgumentError("beta·n_gen must round to at least one curated sample");
    }
    if (pareto_pool == 0) throw InvalidArgumentError("pareto_pool must be >= 1");
    curation.Validate();
    attack_cfg.Validate();
    fit.Validate();
  }
};

struct StepRecord {
  size_t t = 0;
  std::vector<double> proportions;
  double e_r = 0.0;      // E_{p_t}[r], true reward
  double e_exp_r = 0.0;  // E_{p_t}[e^r]
  double tv_to_data = 0.0;
  // Monitors for the step p_{t−1} -> p_t (absent at t = 0). They use the
  // reward that scored the benign share and the adversarial reward r~_t.
  double cov = 0.0;  // Cov_{p_{t−1}}[e^r, e^{r~_t}]
  std::optional<BoundReport> lemma2;
  double appx_floor = 0.0;
  bool appx_ok = true;
  std::optional<BoundReport> lemma3_stated;
  std::optional<BoundReport> lemma3_proofsum;
  size_t flips = 0;
  std::optional<ObjectiveValue> objective;
};

struct Trajectory {
  std::vector<StepRecord> steps;                    // t = 0..T
  std::vector<DiscreteDistribution> distributions;  // p_0..p_T
  std::vector<FlipMask> masks;                      // one per iteration
  std::vector<std::vector<ObjectiveLogRow>> attack_logs;
  std::string group_prefix;
};

namespace detail {

enum StreamTag : uint64_t {
  kPairs = 1,
  kAttack = 2,
  kBatch = 3,
  kCurate = 4,
  kGenerate = 5,
  kSandwich = 6,
};

inline std::string AttackName(AttackMethod m) {
  switch (m) {
    case AttackMethod::kNone: return "none";
    case AttackMethod::kGradient: return "gradient";
    case AttackMethod::kHeuristicDiff: return "heuristic-diff";
    case AttackMethod::kHeuristicMaxAbs: return "heuristic-maxabs";
    case AttackMethod::kPareto: return "pareto";
    case AttackMethod::kRandom: return "random";
  }
  return "unknown";
}

inline AttackOutcome RunAttack(const LoopConfig& cfg, const PreferenceDataset& data,
                               const LinearRewardModel& benign,
                               std::span<const SupportPoint> batch, uint64_t seed) {
  AttackConfig acfg = cfg.attack_cfg;
  acfg.seed = seed;
  switch (cfg.attack) {
    case AttackMethod::kNone:
      return Finish(data, FlipMask::Empty(data.size()), benign, batch, acfg.alpha, cfg.fit);
    case AttackMethod::kGradient:
      return GradientAttack(data, benign, acfg, cfg.fit, batch);
    case AttackMethod::kHeuristicDiff:
    case AttackMethod::kHeuristicMaxAbs: {
      const auto mode = cfg.attack == AttackMethod::kHeuristicDiff ? HeuristicMode::kDiff
                                                                   : HeuristicMode::kMaxAbs;
      return Finish(data, HeuristicRank(data, benign, mode, acfg.kappa), benign, batch,
                    acfg.alpha, cfg.fit);
    }
    case AttackMethod::kPareto:
      return ParetoAttack(data, benign, acfg, cfg.fit, cfg.pareto_pool, batch,
                          cfg.pareto_selection)
          .outcome;
    case AttackMethod::kRandom: {
      Rng rng(seed);
      return Finish(data, RandomAttack(data, acfg.kappa, rng), benign, batch, acfg.alpha,
                    cfg.fit);
    }
  }
  throw InvalidArgumentError("unknown attack method");
}

inline void FillState(const Environment& env, const DiscreteDistribution& p, StepRecord& rec) {
  const std::vector<double> r = env.reward.Values(p);
  rec.proportions = env.GroupProportions(p);
  rec.e_r = ExpectReward(p.probs(), r);
  rec.e_exp_r = ExpectExp(p.probs(), r);
  rec.tv_to_data = TvDistance(p, env.p_data);
}

}  // namespace detail

// Iterated retraining: at each t, draw preference pairs from p_{t−1} and label
// them by the true reward, fit R_theta, run the attack to obtain R~, curate
// by the mixture choice rule, and mix with real data according to lambda.
inline Trajectory RunRetraining(const Environment& env, const LoopConfig& cfg) {
  cfg.Validate();
  const DiscreteDistribution& p_data = env.p_data;
  Trajectory traj;
  traj.group_prefix = env.group_prefix;
  traj.distributions.push_back(p_data);
  StepRecord first;
  detail::FillState(env, p_data, first);
  traj.steps.push_back(first);

  std::vector<RewardFunction> adversarial_rewards;
  for (size_t t = 1; t <= cfg.iterations; ++t) {
    try {
      const DiscreteDistribution& prev = traj.distributions.back();
      Rng pair_rng(DeriveSeed(cfg.seed, {t, detail::kPairs}));
      const auto pairs = SamplePairs(prev, cfg.n_pairs, pair_rng);
      const PreferenceDataset data = LabelDeterministic(pairs, env.reward);
      const LinearRewardModel benign = FitBenign(data, env.features, cfg.fit);
      Rng batch_rng(DeriveSeed(cfg.seed, {t, detail::kBatch}));
      const auto batch = Sample(prev, cfg.attack_cfg.cov_batch, batch_rng);
      AttackOutcome attack =
          detail::RunAttack(cfg, data, benign, batch, DeriveSeed(cfg.seed, {t, detail::kAttack}));

      RewardFunction r_cur = cfg.benign == BenignScorer::kTrue ? env.reward : LearnedReward(benign);
      RewardFunction r_adv = [&] {
        switch (cfg.adversary) {
          case AdversaryKind::kNegated: return NegatedReward(env);
          case AdversaryKind::kShiftedTarget: return ShiftedTargetReward(env);
          case AdversaryKind::kLearned: break;
        }
        return LearnedReward(attack.tilde);
      }();
      // Tabulate on the fixed support; every p_t shares it.
      const std::vector<double> rv = r_cur.Values(p_data);
      const std::vector<double> rtv = r_adv.Values(p_data);
      const double phi = cfg.curation.phi;

      DiscreteDistribution curated = prev;
      switch (cfg.update) {
        case UpdateMode::kMonteCarlo: {
          Rng gen_rng(DeriveSeed(cfg.seed, {t, detail::kGenerate}));
          const auto generated = EmpiricalOnSupport(prev, SampleIndices(prev, cfg.n_gen, gen_rng));
          Rng cur_rng(DeriveSeed(cfg.seed, {t, detail::kCurate}));
          const auto keep =
              static_cast<size_t>(std::llround(cfg.beta * static_cast<double>(cfg.n_gen)));
          curated = CurateMonteCarloValues(generated, rv, rtv, cfg.curation, keep, cur_rng);
          break;
        }
        case UpdateMode::kExactKInf:
          curated = UpdateExactKInfValues(prev, rv, rtv, phi);
          break;
        case UpdateMode::kExactFiniteK:
          curated = UpdateExactFiniteKValues(prev, rv, rtv, phi, cfg.curation.k);
          break;
      }
      DiscreteDistribution next = MixedUpdate(p_data, curated, cfg.curation.lambda);

      StepRecord rec;
      rec.t = t;
      detail::FillState(env, next, rec);
      rec.cov = CovExp(prev.probs(), rv, rtv);
      SandwichOptions opt;
      opt.monte_carlo_seed = DeriveSeed(cfg.seed, {t, detail::kSandwich});
      rec.lemma2 = SandwichBoundsValues(prev, rv, rtv, phi, cfg.curation.k, opt);
      rec.appx_floor = CovarianceFloorValues(prev, rv, rtv, phi);
      rec.appx_ok = WithinBounds(rec.appx_floor, rec.lemma2->observed,
                                 std::numeric_limits<double>::infinity(), rec.lemma2->std_error);
      rec.flips = attack.mask.NumFlips();
      if (cfg.attack != AttackMethod::kNone) rec.objective = attack.objective;

      traj.steps.push_back(std::move(rec));
      traj.distributions.push_back(std::move(next));
      traj.masks.push_back(std::move(attack.mask));
      traj.attack_logs.push_back(std::move(attack.log));
      adversarial_rewards.push_back(RewardFunction::Tabular(p_data, rtv));
    } catch (const StepError&) {
      throw;
    } catch (const Error& e) {
      throw StepError(t, e.what());
    }
  }

  // Mixed-data floor on E[e^r] for the true reward r.
  for (auto variant : {LoopBoundVariant::kStated, LoopBoundVariant::kProofSum}) {
    const auto reports = MixedLoopMonitor(traj.distributions, env.reward, adversarial_rewards,
                                          cfg.curation.lambda, cfg.curation.phi, variant);
    for (size_t i = 0; i < reports.size(); ++i) {
      auto& slot = variant == LoopBoundVariant::kStated ? traj.steps[i + 1].lemma3_stated
                                                        : traj.steps[i + 1].lemma3_proofsum;
      slot = reports[i];
    }
  }
  return traj;
}

struct BoundViolation {
  std::string check;
  size_t t;
  double margin;  // signed distance to the violated bound (negative)
};

struct BoundSummary {
  size_t steps = 0;
  size_t lemma2_ok = 0;
  size_t appx_ok = 0;
  size_t lemma3_stated_ok = 0;
  size_t lemma3_proofsum_ok = 0;
  std::vector<BoundViolation> violations;
};

inline BoundSummary CheckBounds(const Trajectory& traj) {
  if (traj.steps.empty()) throw InvalidArgumentError("empty trajectory");
  BoundSummary s;
  for (const auto& rec : traj.steps) {
    if (!rec.lemma2) continue;
    ++s.steps;
    const auto& l2 = *rec.lemma2;
    if (l2.satisfied) {
      ++s.lemma2_ok;
    } else {
      const double margin = l2.observed < l2.lower ? l2.observed - l2.lower : l2.upper - l2.observed;
      s.violations.push_back({"lemma2", rec.t, margin});
    }
    if (rec.appx_ok) {
      ++s.appx_ok;
    } else {
      s.violations.push_back({"appx_cov", rec.t, rec.lemma2->observed - rec.appx_floor});
    }
    if (rec.lemma3_stated) {
      if (rec.lemma3_stated->satisfied) {
        ++s.lemma3_stated_ok;
      } else {
        s.violations.push_back(
            {"lemma3_stated", rec.t, rec.lemma3_stated->observed - rec.lemma3_stated->lower});
      }
    }
    if (rec.lemma3_proofsum) {
      if (rec.lemma3_proofsum->satisfied) {
        ++s.lemma3_proofsum_ok;
      } else {
        s.violations.push_back(
            {"lemma3_proofsum", rec.t, rec.lemma3_proofsum->observed - rec.lemma3_proofsum->lower});
      }
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Output

inline void WriteTrajectoryTable(std::ostream& os, const Trajectory& traj) {
  os << "t,E_r,E_exp_r,cov,lemma2_lower,lemma2_upper,lemma2_ok,appx_ok,lemma3_stated_ok,"
        "lemma3_proofsum_ok,flips";
  const size_t groups = traj.steps.front().proportions.size();
  for (size_t g = 0; g < groups; ++g) os << ',' << traj.group_prefix << g;
  os << '\n';
  auto flag = [](bool b) { return b ? "1" : "0"; };
  for (const auto& rec : traj.steps) {
    os << rec.t << ',' << FormatDouble(rec.e_r) << ',' << FormatDouble(rec.e_exp_r) << ',';
    if (!rec.lemma2) {
      os << "NA,NA,NA,NA,NA,NA,NA,NA";
    } else {
      os << FormatDouble(rec.cov) << ',' << FormatDouble(rec.lemma2->lower) << ','
         << FormatDouble(rec.lemma2->upper) << ',' << flag(rec.lemma2->satisfied) << ','
         << flag(rec.appx_ok) << ',' << flag(rec.lemma3_stated && rec.lemma3_stated->satisfied)
         << ',' << flag(rec.lemma3_proofsum && rec.lemma3_proofsum->satisfied) << ','
         << rec.flips;
    }
    for (double p : rec.proportions) os << ',' << FormatDouble(p);
    os << '\n';
  }
}

inline nlohmann::json BoundSummaryJson(const BoundSummary& s) {
  nlohmann::json v = nlohmann::json::array();
  for (const auto& x : s.violations) {
    v.push_back({{"check", x.check}, {"t", x.t}, {"margin", x.margin}});
  }
  return {{"steps", s.steps},
          {"lemma2_ok", s.lemma2_ok},
          {"appx_ok", s.appx_ok},
          {"lemma3_stated_ok", s.lemma3_stated_ok},
          {"lemma3_proofsum_ok", s.lemma3_proofsum_ok},
          {"violations", v}};
}

}  // namespace curatelab

#endif  // CURATELAB_RETRAIN_LOOP_HPP_
