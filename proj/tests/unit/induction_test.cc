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

#include "tsallis_fpd/induction.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "support/random_problem.hpp"
#include "tsallis_fpd/fixed_point.hpp"
#include "tsallis_fpd/oracle.hpp"
#include "tsallis_fpd/problem_io.hpp"

namespace tsallis_fpd {
namespace {

ValidatedProblem shifted_prior_problem(std::size_t n, std::size_t m, std::size_t horizon,
                                       double r, std::uint64_t seed) {
  auto s = testing::random_spec(n, m, horizon, r, seed);
  testing::Rng rng(seed + 1000);
  s.prior = Pmf(rng.dirichlet(n));
  return validate(s);
}

// Objective after replacing the stage-k table.
double with_stage(const ValidatedProblem& vp, PolicySequence p, std::size_t k,
                  const ConditionalPmf& table) {
  p.stage(k) = table;
  return objective(vp, p);
}

TEST(PSetsTest, SplitsIterateAndSweep) {
  const auto vp = testing::random_problem(2, 2, 4, 2.0, 51);
  testing::Rng rng(51);
  const auto iterate = testing::random_policies(vp, rng);
  const auto sweep = testing::random_policies(vp, rng);
  std::vector<PolicyAccess> seen;
  PSets ps(2, iterate, sweep, [&](const PolicyAccess& a) { seen.push_back(a); });
  EXPECT_EQ(ps.earlier().size(), 2u);
  EXPECT_EQ(ps.later().size(), 2u);
  EXPECT_EQ(ps.policy(1), iterate.stage(1));
  EXPECT_EQ(ps.policy(2), iterate.stage(2));
  EXPECT_EQ(ps.policy(3), sweep.stage(3));
  EXPECT_EQ(ps.policy(4), sweep.stage(4));
  ASSERT_EQ(seen.size(), 4u);
  EXPECT_EQ(seen[1].source, PolicySource::kIterate);
  EXPECT_EQ(seen[2].source, PolicySource::kSweep);
  EXPECT_THROW(ps.policy(5), ShapeMismatch);
  EXPECT_THROW(PSets(5, iterate, sweep), ShapeMismatch);
  EXPECT_TRUE(PSets(4, iterate, sweep).later().empty());
}

// Stage k reads stages <= k from the iterate and stages > k from the sweep,
// and the sweep tables it reads are the ones already produced for them.
TEST(ApplyTTest, GaussSeidelAccessPattern) {
  const auto vp = testing::random_problem(2, 2, 4, 2.0, 52);
  testing::Rng rng(52);
  const auto p = testing::random_policies(vp, rng);
  std::vector<PolicyAccess> seen;
  const auto out = apply_T(vp, p, [&](const PolicyAccess& a) { seen.push_back(a); });
  ASSERT_FALSE(seen.empty());
  std::size_t previous = vp.horizon();
  for (const auto& a : seen) {
    EXPECT_LE(a.computing_stage, previous) << "sweep must run backwards";
    previous = a.computing_stage;
    EXPECT_EQ(a.source, a.stage <= a.computing_stage ? PolicySource::kIterate
                                                     : PolicySource::kSweep);
  }
  for (std::size_t k = 1; k <= vp.horizon(); ++k) {
    bool touched = false;
    for (const auto& a : seen) touched = touched || a.computing_stage == k;
    EXPECT_TRUE(touched) << "stage " << k << " never computed";
  }
  // Recompute stage 2 from the recorded split and compare.
  const auto again = apply_S(vp, PSets(2, p, out));
  EXPECT_EQ(again, out.stage(2));
}

TEST(StageTermsTest, BaseEqualsGeneralAtLastStage) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const double r = seed % 3 == 0 ? 0.5 : (seed % 3 == 1 ? 2.0 : 3.5);
    const auto vp = shifted_prior_problem(2 + seed % 2, 2, 2 + seed % 3, r, 53 + seed);
    testing::Rng rng(seed);
    const auto p = testing::random_policies(vp, rng);
    const auto base = base_stage_terms(vp, p);
    const auto general = general_stage_terms(vp, PSets(vp.horizon(), p, p));
    EXPECT_NEAR(base.rho, general.rho, 1e-14);
    for (std::size_t i = 0; i < base.J.size(); ++i) {
      EXPECT_NEAR(base.J[i], general.J[i], 1e-14) << "seed " << seed;
      EXPECT_NEAR(base.ref[i], general.ref[i], 1e-14) << "seed " << seed;
    }
  }
}

// Straight-line evaluation of the last-stage terms from enumerated prefixes.
TEST(StageTermsTest, BaseTermsByHand) {
  const double r = 2.0;
  const double c = r - 1.0;
  const auto vp = shifted_prior_problem(2, 2, 2, r, 54);
  testing::Rng rng(54);
  const auto p = testing::random_policies(vp, rng);
  const auto t = base_stage_terms(vp, p);

  std::vector<double> mu(2, 0.0);
  std::vector<double> power(2, 0.0);  // sum p (p/q)^c over prefixes ending in x1
  for (std::size_t x0 = 0; x0 < 2; ++x0) {
    for (std::size_t u = 0; u < 2; ++u) {
      for (std::size_t x1 = 0; x1 < 2; ++x1) {
        const double a = vp.prior()[x0] * p.stage(1)(x0, u) * vp.plant(1)(x0 * 2 + u, x1);
        const double b =
            vp.ref_prior()[x0] * vp.ref_policy(1)(x0, u) * vp.ref_plant(1)(x0 * 2 + u, x1);
        mu[x1] += a;
        power[x1] += a * a / b;
      }
    }
  }
  const double scale = power[0] + power[1];  // 1 + c P
  EXPECT_NEAR(t.rho, scale, 1e-14);
  for (std::size_t x = 0; x < 2; ++x) {
    const double w = scale * mu[x] / power[x];
    std::vector<double> tilted(2);
    double z = 0.0;
    for (std::size_t u = 0; u < 2; ++u) {
      double ds = 0.0;
      for (std::size_t y = 0; y < 2; ++y) {
        const double s = vp.plant(2)(x * 2 + u, y);
        ds += s * (s / vp.ref_plant(2)(x * 2 + u, y) - 1.0);
      }
      tilted[u] = vp.ref_policy(2)(x, u) / (1.0 + c * ds);
      z += tilted[u];
    }
    for (std::size_t u = 0; u < 2; ++u) {
      double cost = 0.0;
      for (std::size_t y = 0; y < 2; ++y) cost += vp.plant(2)(x * 2 + u, y) * vp.costs(2)[y];
      EXPECT_NEAR(t.ref[x * 2 + u], tilted[u] / z, 1e-14);
      EXPECT_NEAR(t.J[x * 2 + u], w * z * cost, 1e-14);
    }
  }
}

// S minimizes the objective over the stage-k block: no grid row does better.
TEST(ApplySTest, ExactBlockMinimizer) {
  for (double r : {0.5, 2.0, 3.5}) {
    const auto vp = shifted_prior_problem(2, 2, 2, r, 55);
    testing::Rng rng(55);
    const auto p = testing::random_policies(vp, rng);
    for (std::size_t k = 1; k <= 2; ++k) {
      const auto best = apply_S(vp, PSets(k, p, p));
      const double value = with_stage(vp, p, k, best);
      double grid = std::numeric_limits<double>::infinity();
      for (const auto& a : simplex_grid(2, 0.02)) {
        for (const auto& b : simplex_grid(2, 0.02)) {
          grid = std::min(grid, with_stage(vp, p, k, ConditionalPmf::from_rows({a, b})));
        }
      }
      EXPECT_LE(value, grid + 1e-9) << "r=" << r << " k=" << k;
      // Small perturbations only increase the objective.
      for (double eps : {1e-3, -1e-3}) {
        auto moved = best;
        moved(0, 0) += eps;
        moved(0, 1) -= eps;
        EXPECT_GE(with_stage(vp, p, k, moved), value - 1e-12);
      }
    }
  }
}

TEST(ApplyTTest, NeverIncreasesObjective) {
  for (double r : {0.5, 2.0, 3.5}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto vp = shifted_prior_problem(3, 2, 3, r, 56 + seed);
      testing::Rng rng(seed);
      const auto p = testing::random_policies(vp, rng);
      EXPECT_LE(objective(vp, apply_T(vp, p)), objective(vp, p) + 1e-12);
    }
  }
}

// At r = 1 one sweep from any start is the classical backward recursion.
TEST(ApplyTTest, OneSweepIsKlFpdAtROne) {
  const auto vp = shifted_prior_problem(3, 2, 3, 1.0, 57);
  testing::Rng rng(57);
  const auto p = testing::random_policies(vp, rng);
  EXPECT_LT(policy_distance(apply_T(vp, p), kl_fpd_solve(vp)), 1e-12);
}

TEST(ApplyTTest, MatchedZeroCostKeepsReference) {
  const auto vp = validate(testing::matched_zero_cost_spec(2, 2, 3, 2.0));
  const auto ref = reference_policies(vp);
  EXPECT_EQ(apply_T(vp, ref), ref);
}

TEST(ApplySTest, UnreachableStateKeepsReferenceRow) {
  auto s = testing::random_spec(2, 2, 2, 2.0, 58);
  s.prior = Pmf{1.0, 0.0};
  const auto vp = validate(s);
  testing::Rng rng(58);
  const auto p = testing::random_policies(vp, rng);
  StageTerms terms;
  const auto out = apply_S(vp, PSets(1, p, p), &terms);
  EXPECT_EQ(terms.components.marginal[1], 0.0);
  EXPECT_EQ(terms.components.prefix_weight[1], 1.0);
  EXPECT_EQ(out.row(1)[0], vp.ref_policy(1)(1, 0));
  EXPECT_EQ(out.row(1)[1], vp.ref_policy(1)(1, 1));
  EXPECT_NE(out.row(0)[0], vp.ref_policy(1)(0, 0));
}

TEST(ApplySTest, ZeroReferenceActionStaysZero) {
  auto s = testing::random_spec(2, 3, 2, 0.5, 59);
  s.ref_policy[0].mutable_row(0)[1] = 0.0;
  s.ref_policy[0].mutable_row(0)[0] = 0.3;
  s.ref_policy[0].mutable_row(0)[2] = 0.7;
  const auto vp = validate(s);
  const auto out = apply_T(vp, reference_policies(vp));
  EXPECT_EQ(out.stage(1)(0, 1), 0.0);
  EXPECT_TRUE(out.stage(1).is_row_stochastic(1e-12));
}

TEST(ApplyTTest, ErrorsCarryStageAndRow) {
  const auto vp =
      validate(load_problem(std::string(TSALLIS_FPD_FIXTURES) + "/overflow_cost.json"));
  try {
    apply_T(vp, reference_policies(vp));
    FAIL() << "expected a solver error";
  } catch (const Error& e) {
    ASSERT_FALSE(e.context().empty());
    EXPECT_EQ(e.context().front().rfind("stage ", 0), 0u) << e.what();
  }
}

TEST(StageTermsTest, ComponentsAreConsistent) {
  const auto vp = shifted_prior_problem(3, 2, 3, 2.0, 60);
  testing::Rng rng(60);
  const auto p = testing::random_policies(vp, rng);
  const auto t = general_stage_terms(vp, PSets(2, p, p));
  const auto& cp = t.components;
  EXPECT_NEAR(t.rho, 1.0 + cp.prefix_divergence, 1e-14);
  for (std::size_t x = 0; x < vp.n(); ++x) {
    double z = 0.0;
    for (std::size_t u = 0; u < vp.m(); ++u) z += t.ref[x * vp.m() + u];
    EXPECT_NEAR(z, 1.0, 1e-14);
    EXPECT_GT(t.tilt_mass[x], 0.0);
    EXPECT_NEAR(cp.frozen_policy_divergence[x],
                tsallis_div(p.stage(2).row(x), vp.ref_policy(2).row(x), vp.r()), 1e-15);
  }
  // B = D_s + E_s[D_suf] + c E_s[log_r(s/q) D_suf] >= D_s when suffixes are nonnegative.
  for (std::size_t i = 0; i < cp.block_divergence.size(); ++i) {
    EXPECT_GE(cp.block_divergence[i], cp.plant_divergence[i]);
  }
}

TEST(CheckScaleTest, RejectsNonPositive) {
  EXPECT_NO_THROW(check_scale(0.5, 2.0, 0.1));
  EXPECT_THROW(check_scale(0.0, 0.5, 2.0), NonPositiveScale);
  try {
    check_scale(-0.1, 0.5, 2.2);
  } catch (const NonPositiveScale& e) {
    EXPECT_EQ(e.rho(), -0.1);
    EXPECT_EQ(e.r(), 0.5);
    EXPECT_EQ(e.prefix_divergence(), 2.2);
  }
}

}  // namespace
}  // namespace tsallis_fpd
