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

// Problem instances, policy sequences and solver configuration.
//
// Time indexing: stage k (1..N) applies u_k in state x_{k-1} and moves the
// system to x_k. The policy of stage k conditions on x_{k-1}; the plant of
// stage k conditions on the composite index (x_{k-1}, u_k), stored state-major
// as row x_{k-1} * m + u_k. Internally stages live in 0-based vectors, so
// stage k is element k - 1.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tsallis_fpd/deform.hpp"
#include "tsallis_fpd/errors.hpp"
#include "tsallis_fpd/pmf.hpp"

namespace tsallis_fpd {

// Tolerance for row-stochastic checks on policies produced by the solver.
inline constexpr double kPolicyTolerance = 1e-10;

enum class InitMode { kReference, kUniform, kCustom };

inline const char* to_string(InitMode m) {
  switch (m) {
    case InitMode::kReference: return "reference";
    case InitMode::kUniform: return "uniform";
    case InitMode::kCustom: return "custom";
  }
  return "reference";
}

inline std::optional<InitMode> parse_init_mode(const std::string& s) {
  if (s == "reference") return InitMode::kReference;
  if (s == "uniform") return InitMode::kUniform;
  if (s == "custom") return InitMode::kCustom;
  return std::nullopt;
}

struct IterationConfig {
  double omega = 0.4;
  double tol = 1e-10;
  int max_outer = 10000;
  InitMode init_mode = InitMode::kReference;
  std::uint64_t rng_seed = 0;

  void check() const {
    if (!(omega > 0.0 && omega <= 1.0)) {
      throw DomainError("omega must lie in (0, 1], got " + std::to_string(omega));
    }
    if (!(tol > 0.0) || !std::isfinite(tol)) {
      throw DomainError("tol must be positive, got " + std::to_string(tol));
    }
    if (max_outer <= 0) throw DomainError("max_outer must be positive");
  }

  friend bool operator==(const IterationConfig&, const IterationConfig&) = default;
};

// {p_k(u_k | x_{k-1})}_{k=1..N}; stages[k-1] has one row per state.
struct PolicySequence {
  std::vector<ConditionalPmf> stages;

  std::size_t horizon() const { return stages.size(); }
  const ConditionalPmf& stage(std::size_t k) const { return stages.at(k - 1); }
  ConditionalPmf& stage(std::size_t k) { return stages.at(k - 1); }

  friend bool operator==(const PolicySequence&, const PolicySequence&) = default;
};

struct ProblemSpec {
  double r = 1.0;
  int horizon = 0;
  std::vector<std::string> states;
  std::vector<std::string> actions;
  Pmf prior;
  Pmf ref_prior;
  std::vector<ConditionalPmf> plant;       // [k-1]: (n*m) x n
  std::vector<ConditionalPmf> ref_plant;   // [k-1]: (n*m) x n
  std::vector<ConditionalPmf> ref_policy;  // [k-1]: n x m
  std::vector<std::vector<double>> costs;  // [k-1][x_k]
  std::optional<IterationConfig> solver;
  std::optional<PolicySequence> init_policy;

  std::size_t num_states() const { return states.size(); }
  std::size_t num_actions() const { return actions.size(); }

  friend bool operator==(const ProblemSpec&, const ProblemSpec&) = default;
};

// A ProblemSpec that passed validate(). Immutable and cheap to copy.
class ValidatedProblem {
 public:
  const ProblemSpec& spec() const { return *spec_; }
  DeformParam r() const { return r_; }
  std::size_t n() const { return spec_->states.size(); }
  std::size_t m() const { return spec_->actions.size(); }
  std::size_t horizon() const { return static_cast<std::size_t>(spec_->horizon); }

  std::span<const double> prior() const { return spec_->prior.weights(); }
  std::span<const double> ref_prior() const { return spec_->ref_prior.weights(); }

  // 1-based stage accessors.
  const ConditionalPmf& plant(std::size_t k) const { return spec_->plant.at(k - 1); }
  const ConditionalPmf& ref_plant(std::size_t k) const {
    return spec_->ref_plant.at(k - 1);
  }
  const ConditionalPmf& ref_policy(std::size_t k) const {
    return spec_->ref_policy.at(k - 1);
  }
  const std::vector<double>& costs(std::size_t k) const {
    return spec_->costs.at(k - 1);
  }

  std::span<const double> plant_row(std::size_t k, std::size_t x, std::size_t u) const {
    return plant(k).row(x * m() + u);
  }
  std::span<const double> ref_plant_row(std::size_t k, std::size_t x,
                                        std::size_t u) const {
    return ref_plant(k).row(x * m() + u);
  }

  // Same problem with a different deformation parameter (used by sweeps).
  ValidatedProblem with_r(double r) const {
    ProblemSpec copy = *spec_;
    copy.r = r;
    return ValidatedProblem(std::make_shared<const ProblemSpec>(std::move(copy)),
                            DeformParam(r));
  }

 private:
  friend ValidatedProblem validate(ProblemSpec spec);

  ValidatedProblem(std::shared_ptr<const ProblemSpec> spec, DeformParam r)
      : spec_(std::move(spec)), r_(r) {}

  std::shared_ptr<const ProblemSpec> spec_;
  DeformParam r_;
};

namespace detail {

class IssueCollector {
 public:
  void add(std::string code, std::string field, int stage, int row, std::string msg) {
    issues_.push_back({std::move(code), std::move(field), stage, row, std::move(msg)});
  }
  bool empty() const { return issues_.empty(); }
  std::vector<ValidationIssue> take() { return std::move(issues_); }

 private:
  std::vector<ValidationIssue> issues_;
};

inline std::string where(const std::string& field, int stage, int row) {
  std::string s = field;
  if (stage > 0) s += " stage " + std::to_string(stage);
  if (row >= 0) s += " row " + std::to_string(row);
  return s;
}

// Checks finiteness/nonnegativity and renormalizes rows close to 1.
inline void check_row(std::span<double> row, const std::string& field, int stage,
                      int r, IssueCollector& out) {
  CompensatedSum s;
  for (double x : row) {
    if (!std::isfinite(x)) {
      out.add("non_finite", field, stage, r, where(field, stage, r) + " has a non-finite entry");
      return;
    }
    if (x < 0.0) {
      out.add("negative_entry", field, stage, r, where(field, stage, r) + " has a negative entry");
      return;
    }
    s.add(x);
  }
  const double total = s.value();
  if (std::abs(total - 1.0) > kRenormalizeTolerance) {
    out.add("non_stochastic_row", field, stage, r,
            where(field, stage, r) + " sums to " + std::to_string(total) + ", not 1");
    return;
  }
  for (double& x : row) x /= total;
}

inline void check_support(std::span<const double> p, std::span<const double> q,
                          const std::string& field, int stage, int r,
                          IssueCollector& out) {
  for (std::size_t i = 0; i < p.size() && i < q.size(); ++i) {
    if (p[i] > 0.0 && q[i] <= 0.0) {
      out.add("absolute_continuity", field, stage, r,
              where(field, stage, r) + " puts mass on outcome " + std::to_string(i) +
                  " where its reference is 0");
      return;
    }
  }
}

inline bool check_table_shape(const ConditionalPmf& t, std::size_t rows,
                              std::size_t cols, const std::string& field, int stage,
                              IssueCollector& out) {
  if (t.conditions() != rows || t.outcomes() != cols) {
    out.add("shape_mismatch", field, stage, -1,
            where(field, stage, -1) + " has shape " + std::to_string(t.conditions()) +
                "x" + std::to_string(t.outcomes()) + ", expected " +
                std::to_string(rows) + "x" + std::to_string(cols));
    return false;
  }
  return true;
}

inline void check_stage_tables(std::vector<ConditionalPmf>& tables, std::size_t horizon,
                               std::size_t rows, std::size_t cols,
                               const std::string& field, IssueCollector& out) {
  if (tables.size() != horizon) {
    out.add("missing_stage", field, 0, -1,
            field + " has " + std::to_string(tables.size()) + " stages, expected " +
                std::to_string(horizon));
    return;
  }
  for (std::size_t k = 0; k < tables.size(); ++k) {
    const int stage = static_cast<int>(k + 1);
    if (!check_table_shape(tables[k], rows, cols, field, stage, out)) continue;
    for (std::size_t i = 0; i < rows; ++i) {
      check_row(tables[k].mutable_row(i), field, stage, static_cast<int>(i), out);
    }
  }
}

inline void check_labels(const std::vector<std::string>& labels, const std::string& field,
                         IssueCollector& out) {
  if (labels.empty()) {
    out.add("empty_space", field, 0, -1, field + " must not be empty");
    return;
  }
  std::set<std::string> seen;
  for (const auto& l : labels) {
    if (!seen.insert(l).second) {
      out.add("duplicate_label", field, 0, -1, field + " repeats label '" + l + "'");
    }
  }
}

}  // namespace detail

// Issues for a policy sequence measured against a validated problem: shape,
// row sums (tolerance kPolicyTolerance) and support within the reference policy.
inline std::vector<ValidationIssue> policy_issues(const ValidatedProblem& vp,
                                                  const PolicySequence& policy,
                                                  double tol = kPolicyTolerance) {
  detail::IssueCollector out;
  if (policy.horizon() != vp.horizon()) {
    out.add("missing_stage", "policy", 0, -1,
            "policy has " + std::to_string(policy.horizon()) + " stages, expected " +
                std::to_string(vp.horizon()));
    return out.take();
  }
  for (std::size_t k = 1; k <= vp.horizon(); ++k) {
    const auto& t = policy.stage(k);
    const int stage = static_cast<int>(k);
    if (!detail::check_table_shape(t, vp.n(), vp.m(), "policy", stage, out)) continue;
    for (std::size_t x = 0; x < vp.n(); ++x) {
      const int row = static_cast<int>(x);
      if (!is_stochastic(t.row(x), tol)) {
        out.add("non_stochastic_row", "policy", stage, row,
                detail::where("policy", stage, row) + " is not a pmf");
      }
      detail::check_support(t.row(x), vp.ref_policy(k).row(x), "policy", stage, row, out);
    }
  }
  return out.take();
}

// Checks every invariant of the problem, renormalizes rows within 1e-9 of a
// pmf and returns the immutable result. Throws ValidationError listing every
// issue found.
inline ValidatedProblem validate(ProblemSpec spec) {
  detail::IssueCollector out;

  if (!std::isfinite(spec.r) || spec.r <= 0.0) {
    out.add("invalid_r", "r", 0, -1, "r must be finite and > 0");
  }
  if (spec.horizon < 1) {
    out.add("invalid_horizon", "horizon", 0, -1, "horizon must be >= 1");
  }
  detail::check_labels(spec.states, "states", out);
  detail::check_labels(spec.actions, "actions", out);
  if (!out.empty()) throw ValidationError(out.take());

  const std::size_t n = spec.states.size();
  const std::size_t m = spec.actions.size();
  const std::size_t horizon = static_cast<std::size_t>(spec.horizon);

  for (auto* prior : {&spec.prior, &spec.ref_prior}) {
    const std::string field = prior == &spec.prior ? "prior" : "ref_prior";
    if (prior->size() != n) {
      out.add("shape_mismatch", field, 0, -1,
              field + " has " + std::to_string(prior->size()) + " entries, expected " +
                  std::to_string(n));
      continue;
    }
    detail::check_row(prior->mutable_weights(), field, 0, -1, out);
  }
  if (spec.prior.size() == n && spec.ref_prior.size() == n) {
    detail::check_support(spec.prior.weights(), spec.ref_prior.weights(), "prior", 0, -1,
                          out);
  }

  detail::check_stage_tables(spec.plant, horizon, n * m, n, "plant", out);
  detail::check_stage_tables(spec.ref_plant, horizon, n * m, n, "ref_plant", out);
  detail::check_stage_tables(spec.ref_policy, horizon, n, m, "ref_policy", out);

  if (spec.plant.size() == horizon && spec.ref_plant.size() == horizon) {
    for (std::size_t k = 0; k < horizon; ++k) {
      const auto& p = spec.plant[k];
      const auto& q = spec.ref_plant[k];
      if (p.conditions() != q.conditions() || p.outcomes() != q.outcomes()) continue;
      for (std::size_t i = 0; i < p.conditions(); ++i) {
        detail::check_support(p.row(i), q.row(i), "plant", static_cast<int>(k + 1),
                              static_cast<int>(i), out);
      }
    }
  }

  if (spec.costs.size() != horizon) {
    out.add("missing_stage", "costs", 0, -1,
            "costs has " + std::to_string(spec.costs.size()) + " stages, expected " +
                std::to_string(horizon));
  } else {
    for (std::size_t k = 0; k < horizon; ++k) {
      const int stage = static_cast<int>(k + 1);
      if (spec.costs[k].size() != n) {
        out.add("shape_mismatch", "costs", stage, -1,
                detail::where("costs", stage, -1) + " must have one entry per state");
        continue;
      }
      for (std::size_t x = 0; x < n; ++x) {
        if (!std::isfinite(spec.costs[k][x])) {
          out.add("non_finite", "costs", stage, static_cast<int>(x),
                  detail::where("costs", stage, static_cast<int>(x)) + " is not finite");
        }
      }
    }
  }

  if (spec.solver) {
    try {
      spec.solver->check();
    } catch (const DomainError& e) {
      out.add("invalid_solver", "solver", 0, -1, e.message());
    }
  }

  if (!out.empty()) throw ValidationError(out.take());

  auto shared = std::make_shared<const ProblemSpec>(std::move(spec));
  ValidatedProblem vp(shared, DeformParam(shared->r));
  if (shared->init_policy) {
    auto issues = policy_issues(vp, *shared->init_policy);
    if (!issues.empty()) throw ValidationError(std::move(issues));
  }
  return vp;
}

inline PolicySequence reference_policies(const ValidatedProblem& vp) {
  PolicySequence p;
  for (std::size_t k = 1; k <= vp.horizon(); ++k) p.stages.push_back(vp.ref_policy(k));
  return p;
}

// Initial iterate. Reference copies q^(u)_k, uniform spreads mass evenly over
// the support of each reference row, custom validates `custom` (falling back
// to the problem's init_policy).
inline PolicySequence init_policies(const ValidatedProblem& vp, const IterationConfig& cfg,
                                    const std::optional<PolicySequence>& custom = {}) {
  switch (cfg.init_mode) {
    case InitMode::kReference:
      return reference_policies(vp);
    case InitMode::kUniform: {
      PolicySequence p = reference_policies(vp);
      for (auto& stage : p.stages) {
        for (std::size_t x = 0; x < stage.conditions(); ++x) {
          auto row = stage.mutable_row(x);
          const auto support = static_cast<double>(
              std::count_if(row.begin(), row.end(), [](double v) { return v > 0.0; }));
          for (double& v : row) v = v > 0.0 ? 1.0 / support : 0.0;
        }
      }
      return p;
    }
    case InitMode::kCustom: {
      const auto& src = custom ? custom : vp.spec().init_policy;
      if (!src) {
        throw ValidationError({{"missing_init_policy", "init_policy", 0, -1,
                                "custom init mode requires an initial policy"}});
      }
      auto issues = policy_issues(vp, *src);
      if (!issues.empty()) throw ValidationError(std::move(issues));
      return *src;
    }
  }
  return reference_policies(vp);
}

}  // namespace tsallis_fpd
