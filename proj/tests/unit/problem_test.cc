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

#include "tsallis_fpd/problem.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "support/random_problem.hpp"

namespace tsallis_fpd {
namespace {

bool has_issue(const ValidationError& e, const std::string& code, const std::string& field,
               int stage = -2, int row = -2) {
  return std::any_of(e.issues().begin(), e.issues().end(), [&](const ValidationIssue& i) {
    return i.code == code && i.field == field && (stage == -2 || i.stage == stage) &&
           (row == -2 || i.row == row);
  });
}

ValidationError expect_invalid(ProblemSpec s) {
  try {
    validate(std::move(s));
  } catch (const ValidationError& e) {
    return e;
  }
  ADD_FAILURE() << "validate accepted an invalid problem";
  return ValidationError({});
}

TEST(ValidateTest, AcceptsRandomInstance) {
  const auto vp = testing::random_problem(3, 2, 4, 2.0, 1);
  EXPECT_EQ(vp.n(), 3u);
  EXPECT_EQ(vp.m(), 2u);
  EXPECT_EQ(vp.horizon(), 4u);
  EXPECT_EQ(vp.r().value(), 2.0);
  EXPECT_EQ(vp.plant(1).conditions(), 6u);
  EXPECT_EQ(vp.plant_row(2, 1, 1).data(), vp.plant(2).row(3).data());
}

TEST(ValidateTest, RenormalizesRowsWithinTolerance) {
  auto s = testing::random_spec(2, 2, 2, 2.0, 2);
  s.plant[1](0, 0) += 5e-10;
  const auto vp = validate(s);
  EXPECT_TRUE(is_stochastic(vp.plant(2).row(0), 1e-15));
}

TEST(ValidateTest, ReportsNonStochasticRowWithStageAndRow) {
  auto s = testing::random_spec(2, 2, 3, 2.0, 3);
  s.plant[1](3, 0) += 0.1;
  const auto e = expect_invalid(s);
  EXPECT_TRUE(has_issue(e, "non_stochastic_row", "plant", 2, 3));
}

TEST(ValidateTest, CollectsEveryIssue) {
  auto s = testing::random_spec(2, 2, 2, 2.0, 4);
  s.ref_policy[0](1, 0) = -0.2;
  s.costs[1][0] = std::nan("");
  s.ref_plant[0](0, 1) += 0.5;
  const auto e = expect_invalid(s);
  EXPECT_TRUE(has_issue(e, "negative_entry", "ref_policy", 1, 1));
  EXPECT_TRUE(has_issue(e, "non_finite", "costs", 2, 0));
  EXPECT_TRUE(has_issue(e, "non_stochastic_row", "ref_plant", 1, 0));
  EXPECT_GE(e.issues().size(), 3u);
}

TEST(ValidateTest, AbsoluteContinuityOfPlant) {
  auto s = testing::random_spec(2, 2, 2, 2.0, 5);
  s.ref_plant[0].mutable_row(1)[0] = 1.0;
  s.ref_plant[0].mutable_row(1)[1] = 0.0;
  const auto e = expect_invalid(s);
  EXPECT_TRUE(has_issue(e, "absolute_continuity", "plant", 1, 1));
}

TEST(ValidateTest, AbsoluteContinuityOfPrior) {
  auto s = testing::random_spec(2, 2, 1, 2.0, 6);
  s.ref_prior = Pmf{1.0, 0.0};
  s.prior = Pmf{0.5, 0.5};
  EXPECT_TRUE(has_issue(expect_invalid(s), "absolute_continuity", "prior"));
}

TEST(ValidateTest, ShapeAndScalarChecks) {
  {
    auto s = testing::random_spec(2, 2, 2, 2.0, 7);
    s.r = 0.0;
    EXPECT_TRUE(has_issue(expect_invalid(s), "invalid_r", "r"));
  }
  {
    auto s = testing::random_spec(2, 2, 2, 2.0, 7);
    s.horizon = 0;
    EXPECT_TRUE(has_issue(expect_invalid(s), "invalid_horizon", "horizon"));
  }
  {
    auto s = testing::random_spec(2, 2, 2, 2.0, 7);
    s.plant.pop_back();
    EXPECT_TRUE(has_issue(expect_invalid(s), "missing_stage", "plant"));
  }
  {
    auto s = testing::random_spec(2, 2, 2, 2.0, 7);
    s.ref_policy[0] = ConditionalPmf::repeat(2, std::vector<double>{0.2, 0.3, 0.5});
    EXPECT_TRUE(has_issue(expect_invalid(s), "shape_mismatch", "ref_policy", 1));
  }
  {
    auto s = testing::random_spec(2, 2, 2, 2.0, 7);
    s.states = {"a", "a"};
    EXPECT_TRUE(has_issue(expect_invalid(s), "duplicate_label", "states"));
  }
  {
    auto s = testing::random_spec(2, 2, 2, 2.0, 7);
    s.costs[0].push_back(1.0);
    EXPECT_TRUE(has_issue(expect_invalid(s), "shape_mismatch", "costs", 1));
  }
  {
    auto s = testing::random_spec(2, 2, 2, 2.0, 7);
    s.solver = IterationConfig{};
    s.solver->omega = 1.5;
    EXPECT_TRUE(has_issue(expect_invalid(s), "invalid_solver", "solver"));
  }
}

TEST(ValidateTest, InitPolicyChecked) {
  auto s = testing::random_spec(2, 2, 2, 2.0, 8);
  auto bad = PolicySequence{s.ref_policy};
  bad.stages[1](0, 0) = 0.9;
  bad.stages[1](0, 1) = 0.3;
  s.init_policy = bad;
  EXPECT_TRUE(has_issue(expect_invalid(s), "non_stochastic_row", "policy", 2, 0));
}

TEST(ValidateTest, WithRKeepsEverythingElse) {
  const auto vp = testing::random_problem(2, 2, 2, 2.0, 9);
  const auto other = vp.with_r(0.5);
  EXPECT_EQ(other.r().value(), 0.5);
  EXPECT_EQ(other.plant(2), vp.plant(2));
  EXPECT_EQ(other.costs(1), vp.costs(1));
}

TEST(PolicyIssuesTest, SupportOutsideReference) {
  auto s = testing::random_spec(2, 2, 1, 2.0, 10);
  s.ref_policy[0].mutable_row(0)[0] = 0.0;
  s.ref_policy[0].mutable_row(0)[1] = 1.0;
  const auto vp = validate(s);
  PolicySequence p{{ConditionalPmf::from_rows({{0.5, 0.5}, {0.5, 0.5}})}};
  const auto issues = policy_issues(vp, p);
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].code, "absolute_continuity");
  EXPECT_EQ(issues[0].row, 0);
}

TEST(InitPoliciesTest, ReferenceUniformAndCustom) {
  auto s = testing::random_spec(2, 3, 2, 2.0, 11);
  s.ref_policy[1].mutable_row(1)[0] = 0.0;
  s.ref_policy[1].mutable_row(1)[1] = 0.4;
  s.ref_policy[1].mutable_row(1)[2] = 0.6;
  const auto vp = validate(s);

  IterationConfig cfg;
  EXPECT_EQ(init_policies(vp, cfg), reference_policies(vp));

  cfg.init_mode = InitMode::kUniform;
  const auto u = init_policies(vp, cfg);
  EXPECT_NEAR(u.stage(1)(0, 2), 1.0 / 3.0, 1e-15);
  EXPECT_EQ(u.stage(2)(1, 0), 0.0);
  EXPECT_EQ(u.stage(2)(1, 1), 0.5);

  cfg.init_mode = InitMode::kCustom;
  EXPECT_THROW(init_policies(vp, cfg), ValidationError);
  EXPECT_EQ(init_policies(vp, cfg, u), u);
}

TEST(IterationConfigTest, Checks) {
  IterationConfig cfg;
  EXPECT_NO_THROW(cfg.check());
  EXPECT_EQ(cfg.omega, 0.4);
  EXPECT_EQ(cfg.tol, 1e-10);
  EXPECT_EQ(cfg.max_outer, 10000);
  cfg.omega = 0.0;
  EXPECT_THROW(cfg.check(), DomainError);
  cfg.omega = 1.0;
  cfg.tol = 0.0;
  EXPECT_THROW(cfg.check(), DomainError);
  cfg.tol = 1e-8;
  cfg.max_outer = 0;
  EXPECT_THROW(cfg.check(), DomainError);
}

TEST(InitModeTest, RoundTrip) {
  for (auto m : {InitMode::kReference, InitMode::kUniform, InitMode::kCustom}) {
    EXPECT_EQ(parse_init_mode(to_string(m)), m);
  }
  EXPECT_FALSE(parse_init_mode("random").has_value());
}

}  // namespace
}  // namespace tsallis_fpd
