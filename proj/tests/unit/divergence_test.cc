// Copyright 2026 The Tsallis FPD Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tsallis_fpd/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "support/random_problem.hpp"

namespace tsallis_fpd {
namespace {

const std::vector<double> kP = {0.5, 0.5};
const std::vector<double> kQ = {0.25, 0.75};

// r = 2: sum p^2/q - 1 = 1 + 1/3 - 1.
TEST(TsallisDivTest, HandValueAtRTwo) {
  EXPECT_NEAR(tsallis_div(kP, kQ, DeformParam(2.0)), 1.0 / 3.0, 1e-15);
}

// r = 1/2: 2 (1 - sum sqrt(p q)).
TEST(TsallisDivTest, HandValueAtRHalf) {
  const double bc = std::sqrt(0.125) + std::sqrt(0.375);
  EXPECT_NEAR(tsallis_div(kP, kQ, DeformParam(0.5)), 2.0 * (1.0 - bc), 1e-15);
}

TEST(TsallisDivTest, KlAtROne) {
  const double kl = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
  EXPECT_NEAR(tsallis_div(kP, kQ, DeformParam(1.0)), kl, 1e-15);
  EXPECT_NEAR(kl_div(kP, kQ), kl, 1e-15);
}

TEST(TsallisDivTest, ZeroOnIdenticalPmfs) {
  testing::Rng rng(1);
  for (double r : {0.5, 1.0, 2.0, 3.5}) {
    const auto p = rng.dirichlet(5);
    EXPECT_NEAR(tsallis_div(p, p, DeformParam(r)), 0.0, 1e-15);
  }
}

TEST(TsallisDivTest, NonNegativeOnRandomPairs) {
  testing::Rng rng(2);
  for (double r : {0.3, 0.5, 0.999, 1.0, 1.001, 2.0, 3.5}) {
    for (int i = 0; i < 100; ++i) {
      const auto p = rng.dirichlet(4);
      const auto q = rng.dirichlet(4);
      EXPECT_GE(tsallis_div(p, q, DeformParam(r)), 0.0);
    }
  }
}

TEST(TsallisDivTest, ZeroMassTermsContributeNothing) {
  const std::vector<double> p = {0.0, 1.0};
  const std::vector<double> q = {0.0, 1.0};
  EXPECT_EQ(tsallis_div(p, q, DeformParam(2.0)), 0.0);
  const std::vector<double> q2 = {0.5, 0.5};
  EXPECT_NEAR(tsallis_div(p, q2, DeformParam(2.0)), 1.0, 1e-15);
}

TEST(TsallisDivTest, AbsoluteContinuityViolationNamesOutcome) {
  const std::vector<double> p = {0.2, 0.3, 0.5};
  const std::vector<double> q = {0.5, 0.5, 0.0};
  try {
    tsallis_div(p, q, DeformParam(2.0));
    FAIL() << "expected DivergenceInfinite";
  } catch (const DivergenceInfinite& e) {
    EXPECT_EQ(e.outcome(), 2u);
    EXPECT_FALSE(e.condition().has_value());
  }
}

TEST(TsallisDivTest, SizeMismatchThrows) {
  EXPECT_THROW(tsallis_div(std::vector<double>{1.0}, kQ, DeformParam(2.0)), ShapeMismatch);
}

// Tsallis divergence tends to KL with a first-order error in r - 1.
TEST(TsallisDivTest, ConvergesToKl) {
  testing::Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const auto p = rng.dirichlet(4);
    const auto q = rng.dirichlet(4);
    const double kl = kl_div(p, q);
    const double near = tsallis_div(p, q, DeformParam(1.0 + 1e-7));
    EXPECT_NEAR(near, kl, 1e-5 * std::max(kl, 1.0));
  }
}

TEST(TotalConditionalTest, WeightsRowDivergences) {
  const auto t = ConditionalPmf::from_rows({{0.5, 0.5}, {0.25, 0.75}});
  const std::vector<double> w = {0.4, 0.6};
  const std::vector<double> q = {0.25, 0.75};
  const DeformParam r(2.0);
  EXPECT_NEAR(total_conditional_tsallis_div(t, w, q, r), 0.4 / 3.0, 1e-15);
}

TEST(TotalConditionalTest, SkipsZeroWeightRowsAndReportsCondition) {
  const auto t = ConditionalPmf::from_rows({{0.5, 0.5}, {1.0, 0.0}});
  const std::vector<double> q = {1.0, 0.0};
  const DeformParam r(2.0);
  EXPECT_EQ(total_conditional_tsallis_div(t, std::vector<double>{0.0, 1.0}, q, r), 0.0);
  try {
    total_conditional_tsallis_div(t, std::vector<double>{0.5, 0.5}, q, r);
    FAIL() << "expected DivergenceInfinite";
  } catch (const DivergenceInfinite& e) {
    EXPECT_EQ(e.outcome(), 1u);
    ASSERT_TRUE(e.condition().has_value());
    EXPECT_EQ(*e.condition(), 0u);
  }
}

// Product joint at r = 2: (4/3)^2 - 1 = 7/9 = 1/3 + 1/3 + 1/9.
TEST(NonAdditivityTest, ProductJointHandValue) {
  const auto cond = ConditionalPmf::repeat(2, kP);
  const auto t = non_additivity_terms(cond, kP, kQ, kQ, DeformParam(2.0));
  EXPECT_NEAR(t.joint, 7.0 / 9.0, 1e-15);
  EXPECT_NEAR(t.conditional, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(t.marginal, 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(t.cross, 1.0 / 9.0, 1e-15);
  EXPECT_NEAR(t.residual(), 0.0, 1e-15);
}

TEST(NonAdditivityTest, ResidualVanishesOnRandomInstances) {
  testing::Rng rng(4);
  for (double r : {0.5, 1.0, 2.0, 3.5}) {
    for (int i = 0; i < 100; ++i) {
      const auto cond = rng.table(3, 4);
      const auto pz = rng.dirichlet(3);
      const auto qv = rng.dirichlet(4);
      const auto qz = rng.dirichlet(3);
      const auto t = non_additivity_terms(cond, pz, qv, qz, DeformParam(r));
      const double scale = std::max({1.0, std::abs(t.joint), std::abs(t.conditional),
                                     std::abs(t.marginal), std::abs(t.shift * t.cross)});
      EXPECT_LT(std::abs(t.residual()), 1e-12 * scale) << "r=" << r << " joint=" << t.joint;
    }
  }
}

// With p(v|z) independent of z the pointwise cross term is the product of
// the two divergences.
TEST(NonAdditivityTest, CrossTermFactorsOnFactoredInstances) {
  testing::Rng rng(5);
  for (double r : {0.5, 2.0, 3.5}) {
    const auto pv = rng.dirichlet(4);
    const auto cond = ConditionalPmf::repeat(3, pv);
    const auto pz = rng.dirichlet(3);
    const auto qv = rng.dirichlet(4);
    const auto qz = rng.dirichlet(3);
    const auto t = non_additivity_terms(cond, pz, qv, qz, DeformParam(r));
    EXPECT_NEAR(t.cross, t.cross_product_form, 1e-12 * std::max(1.0, t.cross));
  }
}

TEST(NonAdditivityTest, KlLimitIsAdditive) {
  testing::Rng rng(6);
  const auto cond = rng.table(3, 2);
  const auto pz = rng.dirichlet(3);
  const auto qv = rng.dirichlet(2);
  const auto qz = rng.dirichlet(3);
  const auto t = non_additivity_terms(cond, pz, qv, qz, DeformParam(1.0));
  EXPECT_EQ(t.shift, 0.0);
  EXPECT_NEAR(t.joint, t.conditional + t.marginal, 1e-14);
}

}  // namespace
}  // namespace tsallis_fpd
