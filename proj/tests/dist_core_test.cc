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

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "curatelab/dist_core.hpp"
#include "curatelab/rng.hpp"
#include "curatelab/support.hpp"

namespace curatelab {
namespace {

std::vector<SupportPoint> Line(size_t m) {
  std::vector<SupportPoint> atoms;
  for (size_t i = 0; i < m; ++i) atoms.push_back({static_cast<double>(i)});
  return atoms;
}

RewardFunction Table(const DiscreteDistribution& p, std::vector<double> v) {
  return RewardFunction::Tabular(p, std::move(v));
}

TEST(SupportPointTest, RejectsNonFiniteAndEmpty) {
  EXPECT_THROW(SupportPoint(std::vector<double>{}), InvalidArgumentError);
  EXPECT_THROW((SupportPoint{1.0, std::nan("")}), InvalidArgumentError);
  EXPECT_THROW((SupportPoint{INFINITY}), InvalidArgumentError);
}

TEST(DiscreteDistributionTest, NormalizesAndValidates) {
  const DiscreteDistribution p(Line(3), {1.0, 2.0, 1.0});
  EXPECT_DOUBLE_EQ(p.prob(1), 0.5);
  double total = 0.0;
  for (double x : p.probs()) total += x;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_THROW(DiscreteDistribution(Line(2), {1.0, -0.1}), InvalidArgumentError);
  EXPECT_THROW(DiscreteDistribution(Line(2), {0.0, 0.0}), InvalidArgumentError);
  EXPECT_THROW(DiscreteDistribution(Line(2), {1.0}), InvalidArgumentError);
  EXPECT_THROW(DiscreteDistribution({{0.0}, {0.0}}, {1.0, 1.0}), InvalidArgumentError);
  EXPECT_THROW(DiscreteDistribution({}, {}), InvalidArgumentError);
}

TEST(ExpectExpRewardTest, Examples) {
  const auto u = DiscreteDistribution::Uniform(Line(2));
  EXPECT_NEAR(ExpectExpReward(u, Table(u, {0.0, 0.0})), 1.0, 1e-15);
  EXPECT_NEAR(ExpectExpReward(u, Table(u, {0.0, std::log(2.0)})), 1.5, 1e-15);
  const DiscreteDistribution p(Line(2), {0.25, 0.75});
  EXPECT_NEAR(ExpectExpReward(p, Table(p, {0.0, std::log(3.0)})), 2.5, 1e-15);
}

TEST(ExpectExpRewardTest, ShiftScalesByExpC) {
  const DiscreteDistribution p(Line(3), {0.2, 0.3, 0.5});
  const std::vector<double> r = {-0.4, 0.7, 1.3};
  std::vector<double> shifted = r;
  for (double& x : shifted) x += std::log(2.0);
  EXPECT_NEAR(ExpectExpReward(p, Table(p, shifted)), 2.0 * ExpectExpReward(p, Table(p, r)), 1e-14);
}

TEST(ExpectExpRewardTest, OffSupportIsDomainMismatch) {
  const auto p = DiscreteDistribution::Uniform(Line(2));
  const auto q = DiscreteDistribution::Uniform({{5.0}, {6.0}});
  EXPECT_THROW(ExpectExpReward(q, Table(p, {0.0, 1.0})), DomainMismatchError);
}

TEST(VarExpRewardTest, Examples) {
  const auto u = DiscreteDistribution::Uniform(Line(2));
  EXPECT_EQ(VarExpReward(u, Table(u, {0.7, 0.7})), 0.0);
  EXPECT_NEAR(VarExpReward(u, Table(u, {0.0, std::log(3.0)})), 1.0, 1e-14);
  const auto point = DiscreteDistribution::PointMass({3.0});
  EXPECT_EQ(VarExpReward(point, Table(point, {1.7})), 0.0);
}

TEST(CovExpRewardsTest, Examples) {
  const auto u = DiscreteDistribution::Uniform(Line(2));
  const auto r = Table(u, {0.0, std::log(3.0)});
  EXPECT_NEAR(CovExpRewards(u, r, Table(u, {std::log(3.0), 0.0})), -1.0, 1e-14);
  EXPECT_NEAR(CovExpRewards(u, r, Table(u, {2.0, 2.0})), 0.0, 1e-15);
  EXPECT_EQ(CovExpRewards(u, r, r), VarExpReward(u, r));
}

TEST(CovExpRewardsTest, SelfCovarianceMatchesVarianceOnRandomInputs) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const size_t m = 1 + rng.UniformIndex(6);
    std::vector<double> w(m), v(m);
    for (size_t i = 0; i < m; ++i) {
      w[i] = rng.Uniform01() + 1e-3;
      v[i] = rng.Uniform(-3.0, 3.0);
    }
    const DiscreteDistribution p(Line(m), w);
    const auto r = Table(p, v);
    EXPECT_NEAR(CovExpRewards(p, r, r), VarExpReward(p, r), 1e-12);
  }
}

TEST(LinearRewardTest, EvaluatesThetaDotFeatures) {
  Eigen::VectorXd theta(3);
  theta << 1.0, -2.0, 0.5;
  const auto r = RewardFunction::Linear(LinearRewardModel(theta, FeatureMap::IdentityPlusBias(2)));
  EXPECT_DOUBLE_EQ(r({2.0, 1.0}), 2.0 - 2.0 + 0.5);
  const auto p = DiscreteDistribution::Uniform({{0.0, 0.0}, {1.0, 0.0}});
  EXPECT_NEAR(ExpectExpReward(p, r), 0.5 * (std::exp(0.5) + std::exp(1.5)), 1e-14);
}

TEST(SampleTest, PointMassAndDeterminism) {
  const auto point = DiscreteDistribution::PointMass({4.0, 2.0});
  Rng rng(1);
  const auto draws = Sample(point, 5, rng);
  ASSERT_EQ(draws.size(), 5u);
  for (const auto& x : draws) EXPECT_EQ(x, (SupportPoint{4.0, 2.0}));

  const auto u = DiscreteDistribution::Uniform(Line(3));
  Rng a(99), b(99);
  EXPECT_EQ(Sample(u, 100, a), Sample(u, 100, b));
  EXPECT_THROW(Sample(u, 0, a), InvalidArgumentError);
}

TEST(SampleTest, UniformFrequencies) {
  const auto u = DiscreteDistribution::Uniform(Line(2));
  Rng rng(2024);
  const auto idx = SampleIndices(u, 100000, rng);
  size_t ones = 0;
  for (size_t i : idx) ones += i;
  EXPECT_NEAR(static_cast<double>(ones) / 1e5, 0.5, 0.01);
}

TEST(SampleTest, NeverDrawsZeroProbabilityAtoms) {
  const DiscreteDistribution p(Line(4), {0.0, 0.5, 0.5, 0.0});
  Rng rng(3);
  for (size_t i : SampleIndices(p, 20000, rng)) {
    EXPECT_TRUE(i == 1 || i == 2);
  }
}

TEST(MixTest, Examples) {
  const DiscreteDistribution p(Line(2), {0.3, 0.7});
  const DiscreteDistribution q(Line(2), {0.9, 0.1});
  EXPECT_LT(TvDistance(Mix(p, q, 1.0), p), 1e-15);
  EXPECT_LT(TvDistance(Mix(p, q, 0.0), q), 1e-15);
  const auto a = DiscreteDistribution::PointMass({0.0});
  const auto b = DiscreteDistribution::PointMass({1.0});
  const auto m = Mix(a, b, 0.5);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_DOUBLE_EQ(m.prob(0), 0.5);
  EXPECT_DOUBLE_EQ(m.prob(1), 0.5);
  EXPECT_THROW(Mix(p, q, 1.5), InvalidArgumentError);
}

TEST(MixTest, MergesAtomsWithinTolerance) {
  const auto a = DiscreteDistribution::PointMass({1.0});
  const auto b = DiscreteDistribution::PointMass({1.0 + 1e-13});
  EXPECT_EQ(Mix(a, b, 0.5).size(), 1u);
}

TEST(TvDistanceTest, Examples) {
  const DiscreteDistribution p(Line(2), {0.5, 0.5});
  const DiscreteDistribution q(Line(2), {0.25, 0.75});
  EXPECT_EQ(TvDistance(p, p), 0.0);
  EXPECT_NEAR(TvDistance(p, q), 0.25, 1e-15);
  EXPECT_DOUBLE_EQ(TvDistance(DiscreteDistribution::PointMass({0.0}),
                              DiscreteDistribution::PointMass({1.0})),
                   1.0);
}

}  // namespace
}  // namespace curatelab
