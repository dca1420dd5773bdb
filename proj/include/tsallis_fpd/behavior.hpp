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

// Divergences of truncated closed-loop behaviours against their references.
//
// The prefix covers x_0 and stages 1..k-1, i.e. the joint of
// (x_0, u_1, x_1, ..., u_{k-1}, x_{k-1}). The suffix started at x_k covers
// stages k+1..N. Each quantity has two independent evaluations: trajectory
// enumeration, and a recursion built on the two-factor non-additivity
// expansion
//
//   log_r(a b) = log_r(a) + log_r(b) + (r-1) log_r(a) log_r(b).
//
// Policies are passed as a callable `policy_at(j)` returning the stage-j
// table, so the induction module can route reads through its P-sets.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "tsallis_fpd/deform.hpp"
#include "tsallis_fpd/divergence.hpp"
#include "tsallis_fpd/errors.hpp"
#include "tsallis_fpd/problem.hpp"

namespace tsallis_fpd {

// Above this many trajectories the recursive form replaces enumeration.
inline constexpr double kEnumerationLimit = 1e6;

struct PrefixSummary {
  double divergence = 0.0;
  std::vector<double> marginal;  // law of x_{k-1}
  // Sum over prefixes ending in x of p log_r(p/q); adds up to `divergence`.
  std::vector<double> weighted;
};

struct SuffixSummary {
  std::vector<double> divergence;  // per starting state x_k
  std::vector<double> cost;        // expected sum of c_{k+1..N} per x_k
};

namespace detail {

// log_r(a/b) for a > 0. Throws DivergenceInfinite(outcome) when b == 0.
inline double log_ratio(double a, double b, DeformParam r, std::size_t outcome) {
  if (b <= 0.0) throw DivergenceInfinite(outcome);
  return log_r(a / b, r);
}

inline double trajectory_count(std::size_t n, std::size_t m, std::size_t stages) {
  return std::pow(static_cast<double>(n * m), static_cast<double>(stages));
}

struct Path {
  std::size_t x;
  double p;
  double q;
  double cost;
};

// Advances every path by stage j. Paths of zero behaviour probability are
// dropped; they contribute nothing to any expectation.
template <class PolicyAt>
std::vector<Path> extend_paths(const ValidatedProblem& vp, PolicyAt& policy_at,
                               const std::vector<Path>& paths, std::size_t j) {
  const std::size_t n = vp.n();
  const std::size_t m = vp.m();
  const ConditionalPmf& pol = policy_at(j);
  const ConditionalPmf& ref_pol = vp.ref_policy(j);
  const ConditionalPmf& plant = vp.plant(j);
  const ConditionalPmf& ref_plant = vp.ref_plant(j);
  const auto& c = vp.costs(j);
  std::vector<Path> next;
  next.reserve(paths.size() * n * m);
  for (const Path& path : paths) {
    for (std::size_t u = 0; u < m; ++u) {
      const double pu = pol(path.x, u);
      if (pu <= 0.0) continue;
      const double qu = ref_pol(path.x, u);
      for (std::size_t y = 0; y < n; ++y) {
        const double py = plant(path.x * m + u, y);
        if (py <= 0.0) continue;
        next.push_back({y, path.p * pu * py, path.q * qu * ref_plant(path.x * m + u, y),
                        path.cost + c[y]});
      }
    }
  }
  return next;
}

inline double path_divergence(const std::vector<Path>& paths, DeformParam r) {
  CompensatedSum s;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    s.add(paths[i].p * log_ratio(paths[i].p, paths[i].q, r, i));
  }
  return s.value();
}

// One-step divergence at state x for stage j:
//   sum_{u, y} a log_r(a / b),  a = p_j(u|x) s_j(y|x,u),  b = q^u_j(u|x) q^x_j(y|x,u).
template <class PolicyAt>
double step_divergence(const ValidatedProblem& vp, PolicyAt& policy_at, std::size_t j,
                       std::size_t x) {
  const std::size_t n = vp.n();
  const std::size_t m = vp.m();
  const ConditionalPmf& pol = policy_at(j);
  CompensatedSum s;
  for (std::size_t u = 0; u < m; ++u) {
    const double pu = pol(x, u);
    if (pu <= 0.0) continue;
    const double qu = vp.ref_policy(j)(x, u);
    for (std::size_t y = 0; y < n; ++y) {
      const double a = pu * vp.plant(j)(x * m + u, y);
      if (a <= 0.0) continue;
      const double b = qu * vp.ref_plant(j)(x * m + u, y);
      s.add(a * log_ratio(a, b, vp.r(), u * n + y));
    }
  }
  return s.value();
}

// Forward recursion over stages 1..k-1. W(x) is the marginal of the current
// state and M(x) = sum over prefixes ending in x of p log_r(p/q).
template <class PolicyAt>
PrefixSummary prefix_recursive(const ValidatedProblem& vp, PolicyAt& policy_at,
                               std::size_t k) {
  const std::size_t n = vp.n();
  const std::size_t m = vp.m();
  const DeformParam r = vp.r();
  const double c = r.shift();

  std::vector<double> w(vp.prior().begin(), vp.prior().end());
  std::vector<double> mm(n, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    if (w[x] > 0.0) mm[x] = w[x] * log_ratio(w[x], vp.ref_prior()[x], r, x);
  }
  double divergence = tsallis_div(vp.prior(), vp.ref_prior(), r);

  for (std::size_t j = 1; j < k; ++j) {
    const ConditionalPmf& pol = policy_at(j);
    CompensatedSum inc;
    std::vector<CompensatedSum> w_next(n);
    std::vector<CompensatedSum> m_next(n);
    for (std::size_t x = 0; x < n; ++x) {
      if (w[x] <= 0.0) continue;
      inc.add((w[x] + c * mm[x]) * step_divergence(vp, policy_at, j, x));
      for (std::size_t u = 0; u < m; ++u) {
        const double pu = pol(x, u);
        if (pu <= 0.0) continue;
        const double qu = vp.ref_policy(j)(x, u);
        for (std::size_t y = 0; y < n; ++y) {
          const double a = pu * vp.plant(j)(x * m + u, y);
          if (a <= 0.0) continue;
          const double l = log_ratio(a, qu * vp.ref_plant(j)(x * m + u, y), r, y);
          w_next[y].add(w[x] * a);
          m_next[y].add(a * (mm[x] + w[x] * l + c * mm[x] * l));
        }
      }
    }
    divergence += inc.value();
    for (std::size_t y = 0; y < n; ++y) {
      w[y] = w_next[y].value();
      mm[y] = m_next[y].value();
    }
  }
  return {std::max(0.0, divergence), std::move(w), std::move(mm)};
}

template <class PolicyAt>
PrefixSummary prefix_enumerated(const ValidatedProblem& vp, PolicyAt& policy_at,
                                std::size_t k) {
  const std::size_t n = vp.n();
  std::vector<Path> paths;
  for (std::size_t x = 0; x < n; ++x) {
    if (vp.prior()[x] > 0.0) paths.push_back({x, vp.prior()[x], vp.ref_prior()[x], 0.0});
  }
  for (std::size_t j = 1; j < k; ++j) paths = extend_paths(vp, policy_at, paths, j);
  PrefixSummary out;
  out.divergence = std::max(0.0, path_divergence(paths, vp.r()));
  std::vector<CompensatedSum> mu(n);
  std::vector<CompensatedSum> wt(n);
  for (std::size_t i = 0; i < paths.size(); ++i) {
    mu[paths[i].x].add(paths[i].p);
    wt[paths[i].x].add(paths[i].p * log_ratio(paths[i].p, paths[i].q, vp.r(), i));
  }
  out.marginal.resize(n);
  out.weighted.resize(n);
  for (std::size_t x = 0; x < n; ++x) {
    out.marginal[x] = mu[x].value();
    out.weighted[x] = wt[x].value();
  }
  return out;
}

// Backward recursion over stages N..k+1.
template <class PolicyAt>
SuffixSummary suffix_recursive(const ValidatedProblem& vp, PolicyAt& policy_at,
                               std::size_t k) {
  const std::size_t n = vp.n();
  const std::size_t m = vp.m();
  const DeformParam r = vp.r();
  const double c = r.shift();
  SuffixSummary s{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (std::size_t j = vp.horizon(); j > k; --j) {
    const ConditionalPmf& pol = policy_at(j);
    const auto& cost = vp.costs(j);
    SuffixSummary prev{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    for (std::size_t x = 0; x < n; ++x) {
      CompensatedSum d;
      CompensatedSum v;
      for (std::size_t u = 0; u < m; ++u) {
        const double pu = pol(x, u);
        if (pu <= 0.0) continue;
        const double qu = vp.ref_policy(j)(x, u);
        for (std::size_t y = 0; y < n; ++y) {
          const double a = pu * vp.plant(j)(x * m + u, y);
          if (a <= 0.0) continue;
          const double l = log_ratio(a, qu * vp.ref_plant(j)(x * m + u, y), r, y);
          d.add(a * (l + (1.0 + c * l) * s.divergence[y]));
          v.add(a * (cost[y] + s.cost[y]));
        }
      }
      prev.divergence[x] = std::max(0.0, d.value());
      prev.cost[x] = v.value();
    }
    s = std::move(prev);
  }
  return s;
}

template <class PolicyAt>
SuffixSummary suffix_enumerated(const ValidatedProblem& vp, PolicyAt& policy_at,
                                std::size_t k) {
  const std::size_t n = vp.n();
  SuffixSummary s{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  for (std::size_t x = 0; x < n; ++x) {
    std::vector<Path> paths{{x, 1.0, 1.0, 0.0}};
    for (std::size_t j = k + 1; j <= vp.horizon(); ++j) {
      paths = extend_paths(vp, policy_at, paths, j);
    }
    s.divergence[x] = std::max(0.0, path_divergence(paths, vp.r()));
    CompensatedSum v;
    for (const Path& p : paths) v.add(p.p * p.cost);
    s.cost[x] = v.value();
  }
  return s;
}

inline void check_prefix_stage(const ValidatedProblem& vp, std::size_t k) {
  if (k < 1 || k > vp.horizon() + 1) {
    throw DomainError("prefix stage " + std::to_string(k) + " outside 1.." +
                      std::to_string(vp.horizon() + 1));
  }
}

inline void check_suffix_stage(const ValidatedProblem& vp, std::size_t k) {
  if (k > vp.horizon()) {
    throw DomainError("suffix stage " + std::to_string(k) + " outside 0.." +
                      std::to_string(vp.horizon()));
  }
}

}  // namespace detail

// Prefix through stage k-1. k may be N+1, which covers the whole behaviour.
// Enumerates trajectories unless that exceeds kEnumerationLimit.
template <class PolicyAt>
PrefixSummary prefix_summary(const ValidatedProblem& vp, PolicyAt&& policy_at,
                             std::size_t k) {
  detail::check_prefix_stage(vp, k);
  if (vp.n() * detail::trajectory_count(vp.n(), vp.m(), k - 1) > kEnumerationLimit) {
    return detail::prefix_recursive(vp, policy_at, k);
  }
  return detail::prefix_enumerated(vp, policy_at, k);
}

template <class PolicyAt>
PrefixSummary prefix_summary_recursive(const ValidatedProblem& vp, PolicyAt&& policy_at,
                                       std::size_t k) {
  detail::check_prefix_stage(vp, k);
  return detail::prefix_recursive(vp, policy_at, k);
}

template <class PolicyAt>
SuffixSummary suffix_summary(const ValidatedProblem& vp, PolicyAt&& policy_at,
                             std::size_t k) {
  detail::check_suffix_stage(vp, k);
  if (detail::trajectory_count(vp.n(), vp.m(), vp.horizon() - k) > kEnumerationLimit) {
    return detail::suffix_recursive(vp, policy_at, k);
  }
  return detail::suffix_enumerated(vp, policy_at, k);
}

template <class PolicyAt>
SuffixSummary suffix_summary_recursive(const ValidatedProblem& vp, PolicyAt&& policy_at,
                                       std::size_t k) {
  detail::check_suffix_stage(vp, k);
  return detail::suffix_recursive(vp, policy_at, k);
}

inline auto stage_reader(const PolicySequence& policies) {
  return [&policies](std::size_t j) -> const ConditionalPmf& { return policies.stage(j); };
}

// D_r(p_{0:k-1} || q_{0:k-1}) for 1 <= k <= N.
inline double prefix_divergence(const ValidatedProblem& vp, const PolicySequence& policies,
                                std::size_t k) {
  if (k < 1 || k > vp.horizon()) throw DomainError("prefix_divergence: k outside 1..N");
  return prefix_summary(vp, stage_reader(policies), k).divergence;
}

inline double prefix_divergence_recursive(const ValidatedProblem& vp,
                                          const PolicySequence& policies, std::size_t k) {
  if (k < 1 || k > vp.horizon()) throw DomainError("prefix_divergence: k outside 1..N");
  return prefix_summary_recursive(vp, stage_reader(policies), k).divergence;
}

// Divergence of the suffix k+1..N started at x_k; 0 when k = N.
inline double suffix_divergence(const ValidatedProblem& vp, const PolicySequence& policies,
                                std::size_t k, std::size_t x) {
  return suffix_summary(vp, stage_reader(policies), k).divergence.at(x);
}

inline double suffix_divergence_recursive(const ValidatedProblem& vp,
                                          const PolicySequence& policies, std::size_t k,
                                          std::size_t x) {
  return suffix_summary_recursive(vp, stage_reader(policies), k).divergence.at(x);
}

}  // namespace tsallis_fpd
