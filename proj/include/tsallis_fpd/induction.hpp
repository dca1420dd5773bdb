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

// Backward induction: stage-wise effective costs, the block solution operator
// S and one Gauss-Seidel sweep T.
//
// Notation for stage k, with c = r - 1 and every other stage frozen:
//   mu(x)   law of x_{k-1},
//   M(x)    sum over prefixes ending in x of p (p/q)^c; sum_x M = 1 + c P
//           with P the prefix divergence,
//   B(x,u)  = sum_y s [log_r(s/q^x) + (s/q^x)^c D_suf(y)], the divergence of
//           the stage-k transition together with the suffix it starts,
//   C(x,u)  = E_s[c_k + future cost].
//
// Trajectory weights p^r q^{1-r} factor over stages, so as a function of the
// stage-k policy the objective splits into rows:
//
//   (M(x) / c) sum_u p(u)^r q^u(u)^{1-r} (1 + c B(x,u)) + mu(x) E_p[C] + const.
//
// Tilting the reference, qt(u) = q^u(u) / exp_r(B(x,u)) with mass Z(x), turns
// each row into the single-stage problem E_p[J] / rho + D(p || qt / Z) with
//
//   rho = 1 + c P,   J(x,u) = w(x) Z(x)^c C(x,u),   w(x) = (1 + c P) mu(x) / M(x).
//
// S therefore minimises the objective exactly over the stage-k block, and a
// sweep is block coordinate descent. In the KL limit qt = q^u e^{-B} and
// J = C, the classical backward recursion. At k = N the suffix is empty and
// B reduces to the plant divergence D_s.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tsallis_fpd/behavior.hpp"
#include "tsallis_fpd/divergence.hpp"
#include "tsallis_fpd/errors.hpp"
#include "tsallis_fpd/parallel.hpp"
#include "tsallis_fpd/problem.hpp"
#include "tsallis_fpd/stage_solver.hpp"

namespace tsallis_fpd {

// Scales at or below this value are rejected.
inline constexpr double kScaleEpsilon = 1e-12;

enum class PolicySource { kIterate, kSweep };

struct PolicyAccess {
  std::size_t computing_stage = 0;
  std::size_t stage = 0;
  PolicySource source = PolicySource::kIterate;
};

using AccessObserver = std::function<void(const PolicyAccess&)>;

// Frozen policies seen by stage k: stages 1..k from the outer iterate l
// (stage k's own entry is its previous-iterate copy) and stages k+1..N as
// already produced by the current sweep. The latter set is empty at k = N.
class PSets {
 public:
  PSets(std::size_t k, const PolicySequence& iterate, const PolicySequence& sweep,
        AccessObserver observer = {})
      : k_(k), observer_(std::move(observer)) {
    if (k < 1 || k > iterate.horizon() || sweep.horizon() != iterate.horizon()) {
      throw ShapeMismatch("PSets: stage " + std::to_string(k) + " outside 1.." +
                          std::to_string(iterate.horizon()));
    }
    earlier_.assign(iterate.stages.begin(), iterate.stages.begin() + k);
    later_.assign(sweep.stages.begin() + k, sweep.stages.end());
  }

  std::size_t stage() const { return k_; }
  std::size_t horizon() const { return earlier_.size() + later_.size(); }
  const std::vector<ConditionalPmf>& earlier() const { return earlier_; }
  const std::vector<ConditionalPmf>& later() const { return later_; }

  // Stage-j policy as stage k must see it. Reports the read to the observer.
  const ConditionalPmf& policy(std::size_t j) const {
    if (j < 1 || j > horizon()) throw ShapeMismatch("PSets: no stage " + std::to_string(j));
    const bool early = j <= k_;
    if (observer_) {
      observer_({k_, j, early ? PolicySource::kIterate : PolicySource::kSweep});
    }
    return early ? earlier_[j - 1] : later_[j - k_ - 1];
  }

 private:
  std::size_t k_;
  std::vector<ConditionalPmf> earlier_;
  std::vector<ConditionalPmf> later_;
  AccessObserver observer_;
};

struct StageComponents {
  double prefix_divergence = 0.0;
  std::vector<double> marginal;                  // mu, n
  std::vector<double> prefix_weight;             // w, n (1 where mu = 0)
  std::vector<double> plant_divergence;          // D_s, n*m
  std::vector<double> suffix_divergence;         // E_s[D_suf], n*m
  std::vector<double> block_divergence;          // B, n*m
  std::vector<double> frozen_policy_divergence;  // n, diagnostic
  std::vector<double> cost_expectation;          // C, n*m
};

struct StageTerms {
  std::size_t stage = 0;
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<double> J;    // row-major over (x_{k-1}, u_k)
  double rho = 1.0;
  std::vector<double> ref;  // tilted reference rows, row-major
  std::vector<double> tilt_mass;  // Z, n
  StageComponents components;

  std::span<const double> row(std::size_t x) const { return {J.data() + x * m, m}; }
  std::span<const double> ref_row(std::size_t x) const { return {ref.data() + x * m, m}; }
};

// Throws NonPositiveScale when rho <= kScaleEpsilon.
inline void check_scale(double rho, double r, double prefix_divergence) {
  if (!(rho > kScaleEpsilon)) throw NonPositiveScale(rho, r, prefix_divergence);
}

namespace detail {

inline StageComponents stage_components(const ValidatedProblem& vp, const PSets& ps) {
  const std::size_t k = ps.stage();
  const std::size_t n = vp.n();
  const std::size_t m = vp.m();
  const DeformParam r = vp.r();
  const double c = r.shift();
  auto read = [&ps](std::size_t j) -> const ConditionalPmf& { return ps.policy(j); };

  StageComponents out;
  auto prefix = prefix_summary(vp, read, k);
  out.prefix_divergence = prefix.divergence;
  out.marginal = std::move(prefix.marginal);
  const double scale = 1.0 + c * out.prefix_divergence;
  out.prefix_weight.assign(n, 1.0);
  for (std::size_t x = 0; x < n; ++x) {
    const double mu = out.marginal[x];
    if (mu <= 0.0) continue;
    const double weight = mu + c * prefix.weighted[x];
    if (weight > 0.0) out.prefix_weight[x] = scale * mu / weight;
  }

  const SuffixSummary suffix = suffix_summary(vp, read, k);
  const ConditionalPmf& frozen = ps.policy(k);
  const ConditionalPmf& ref_pol = vp.ref_policy(k);
  const auto& cost = vp.costs(k);

  out.plant_divergence.resize(n * m);
  out.suffix_divergence.resize(n * m);
  out.block_divergence.resize(n * m);
  out.cost_expectation.resize(n * m);
  out.frozen_policy_divergence.resize(n);
  for (std::size_t x = 0; x < n; ++x) {
    try {
      out.frozen_policy_divergence[x] = tsallis_div(frozen.row(x), ref_pol.row(x), r);
    } catch (Error& e) {
      e.add_context("frozen policy row " + std::to_string(x));
      throw;
    }
    for (std::size_t u = 0; u < m; ++u) {
      const std::size_t i = x * m + u;
      const auto s = vp.plant_row(k, x, u);
      const auto qx = vp.ref_plant_row(k, x, u);
      CompensatedSum ds;
      CompensatedSum sig;
      CompensatedSum blk;
      CompensatedSum cst;
      for (std::size_t y = 0; y < n; ++y) {
        if (s[y] <= 0.0) continue;
        double l = 0.0;
        try {
          l = detail::log_ratio(s[y], qx[y], r, y);
        } catch (Error& e) {
          e.add_context("plant row " + std::to_string(i));
          throw;
        }
        ds.add(s[y] * l);
        sig.add(s[y] * suffix.divergence[y]);
        blk.add(s[y] * (l + (1.0 + c * l) * suffix.divergence[y]));
        cst.add(s[y] * (cost[y] + suffix.cost[y]));
      }
      out.plant_divergence[i] = ds.value();
      out.suffix_divergence[i] = sig.value();
      out.block_divergence[i] = blk.value();
      out.cost_expectation[i] = cst.value();
    }
  }
  return out;
}

// Shared assembly; `divergence` supplies B row-major.
inline StageTerms assemble(const ValidatedProblem& vp, std::size_t k, StageComponents cp,
                           const std::vector<double>& divergence) {
  const DeformParam r = vp.r();
  const double c = r.shift();
  StageTerms t;
  t.stage = k;
  t.n = vp.n();
  t.m = vp.m();
  t.rho = 1.0 + c * cp.prefix_divergence;
  check_scale(t.rho, r.value(), cp.prefix_divergence);
  t.J.resize(t.n * t.m);
  t.ref.resize(t.n * t.m);
  t.tilt_mass.resize(t.n);
  const ConditionalPmf& q = vp.ref_policy(k);
  for (std::size_t x = 0; x < t.n; ++x) {
    CompensatedSum mass;
    for (std::size_t u = 0; u < t.m; ++u) {
      const std::size_t i = x * t.m + u;
      const double g = exp_r(divergence[i], r);
      if (!(g > 0.0 && std::isfinite(g))) {
        throw DomainError("tilt exp_r(B) = " + std::to_string(g) + " at action " +
                          std::to_string(u) + " of row " + std::to_string(x));
      }
      t.ref[i] = q(x, u) / g;
      mass.add(t.ref[i]);
    }
    const double z = mass.value();
    if (!(z > 0.0)) throw DegenerateKernel("tilted reference of row " + std::to_string(x) +
                                           " has no mass");
    t.tilt_mass[x] = z;
    const double scale = cp.prefix_weight[x] * deformed_power(z, r);
    for (std::size_t u = 0; u < t.m; ++u) {
      const std::size_t i = x * t.m + u;
      t.ref[i] /= z;
      t.J[i] = scale * cp.cost_expectation[i];
    }
  }
  t.components = std::move(cp);
  return t;
}

// At k = N: B is the plant divergence itself.
inline StageTerms base_terms(const ValidatedProblem& vp, const PSets& ps) {
  StageComponents cp = stage_components(vp, ps);
  const std::vector<double> b = cp.plant_divergence;
  return assemble(vp, ps.stage(), std::move(cp), b);
}

inline StageTerms general_terms(const ValidatedProblem& vp, const PSets& ps) {
  StageComponents cp = stage_components(vp, ps);
  const std::vector<double> b = cp.block_divergence;
  return assemble(vp, ps.stage(), std::move(cp), b);
}

inline void check_psets(const ValidatedProblem& vp, const PSets& ps) {
  if (ps.horizon() != vp.horizon()) {
    throw ShapeMismatch("P-sets cover " + std::to_string(ps.horizon()) +
                        " stages, problem has " + std::to_string(vp.horizon()));
  }
}

}  // namespace detail

// Terms of the last stage from the iterate-l policies.
inline StageTerms base_stage_terms(const ValidatedProblem& vp,
                                   const PolicySequence& policies_l) {
  const std::size_t k = vp.horizon();
  return detail::base_terms(vp, PSets(k, policies_l, policies_l));
}

// Terms of stage k. At k = N this is the general formula with an empty suffix,
// which must agree with base_stage_terms.
inline StageTerms general_stage_terms(const ValidatedProblem& vp, const PSets& psets) {
  detail::check_psets(vp, psets);
  return detail::general_terms(vp, psets);
}

// One block of the sweep: exact row-wise minimisation over stage k.
// Unreachable states keep their reference rows.
inline ConditionalPmf apply_S(const ValidatedProblem& vp, const PSets& psets,
                              StageTerms* terms_out = nullptr) {
  detail::check_psets(vp, psets);
  const std::size_t k = psets.stage();
  StageTerms terms = k == vp.horizon() ? detail::base_terms(vp, psets)
                                       : detail::general_terms(vp, psets);
  ConditionalPmf out = vp.ref_policy(k);
  parallel_for(vp.n(), [&](std::size_t x) {
    if (terms.components.marginal[x] <= 0.0) return;
    try {
      const auto ref = terms.ref_row(x);
      StageProblem sp{{terms.row(x).begin(), terms.row(x).end()},
                      {ref.begin(), ref.end()},
                      terms.rho,
                      vp.r()};
      const auto p = single_stage_solve(sp);
      std::copy(p.begin(), p.end(), out.mutable_row(x).begin());
    } catch (Error& e) {
      e.add_context("row " + std::to_string(x));
      throw;
    }
  });
  if (terms_out) *terms_out = std::move(terms);
  return out;
}

// Backward sweep k = N, ..., 1. Each new stage enters the sweep set before
// the next (earlier) stage is computed.
inline PolicySequence apply_T(const ValidatedProblem& vp, const PolicySequence& policies_l,
                              const AccessObserver& observer = {}) {
  if (policies_l.horizon() != vp.horizon()) {
    throw ShapeMismatch("apply_T: policy horizon does not match the problem");
  }
  PolicySequence sweep = policies_l;
  for (std::size_t k = vp.horizon(); k >= 1; --k) {
    try {
      sweep.stage(k) = apply_S(vp, PSets(k, policies_l, sweep, observer));
    } catch (Error& e) {
      e.add_context("stage " + std::to_string(k));
      throw;
    }
  }
  return sweep;
}

}  // namespace tsallis_fpd
