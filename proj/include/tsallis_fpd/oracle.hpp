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

// Ground truth independent of the solver: the exact objective by trajectory
// enumeration, exhaustive grid minimization for tiny instances, and the
// classical KL-FPD backward recursion.
//
// The objective of a policy sequence p is
//
//   D_r(p_{0:N} || q_{0:N}) + sum_k E[c_k(x_k)].

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tsallis_fpd/behavior.hpp"
#include "tsallis_fpd/deform.hpp"
#include "tsallis_fpd/errors.hpp"
#include "tsallis_fpd/parallel.hpp"
#include "tsallis_fpd/problem.hpp"

namespace tsallis_fpd {

inline constexpr double kJointGuard = 1e7;
inline constexpr double kBruteForceGuard = 1e8;

// Probabilities of full trajectories (x_0, u_1, x_1, ..., u_N, x_N). The index
// is mixed-radix with x_0 most significant, then u_1, x_1 and so on.
struct JointBehavior {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t horizon = 0;
  std::vector<double> probabilities;

  std::size_t index(std::size_t x0, const std::vector<std::pair<std::size_t, std::size_t>>&
                                        steps) const {
    std::size_t i = x0;
    for (const auto& [u, x] : steps) i = (i * m + u) * n + x;
    return i;
  }
};

namespace detail {

inline double joint_size(const ValidatedProblem& vp) {
  return static_cast<double>(vp.n()) * trajectory_count(vp.n(), vp.m(), vp.horizon());
}

inline void check_joint_guard(const ValidatedProblem& vp) {
  const double size = joint_size(vp);
  if (size > kJointGuard) {
    throw GuardExceeded("trajectory table would have " + std::to_string(size) +
                        " entries, above the limit of " + std::to_string(kJointGuard));
  }
}

// Fills the table for a behaviour whose stage-k kernels are policy(k) and
// plant(k), starting from `prior`.
template <class Policy, class Plant>
JointBehavior build_joint(const ValidatedProblem& vp, std::span<const double> prior,
                          Policy&& policy, Plant&& plant) {
  check_joint_guard(vp);
  const std::size_t n = vp.n();
  const std::size_t m = vp.m();
  JointBehavior jb;
  jb.n = n;
  jb.m = m;
  jb.horizon = vp.horizon();
  std::vector<double> cur(prior.begin(), prior.end());
  for (std::size_t k = 1; k <= vp.horizon(); ++k) {
    const ConditionalPmf& pol = policy(k);
    const ConditionalPmf& pl = plant(k);
    std::vector<double> next(cur.size() * m * n);
    for (std::size_t i = 0; i < cur.size(); ++i) {
      const std::size_t x = i % n;
      for (std::size_t u = 0; u < m; ++u) {
        for (std::size_t y = 0; y < n; ++y) {
          next[(i * m + u) * n + y] = cur[i] * pol(x, u) * pl(x * m + u, y);
        }
      }
    }
    cur = std::move(next);
  }
  jb.probabilities = std::move(cur);
  return jb;
}

// Streams every trajectory depth-first in table order and accumulates
// p log_r(p/q) and p * cost without storing the table.
class ObjectiveStream {
 public:
  explicit ObjectiveStream(const ValidatedProblem& vp) : vp_(vp) {}

  double operator()(const PolicySequence& policies) {
    policies_ = &policies;
    div_ = CompensatedSum();
    cost_ = CompensatedSum();
    index_ = 0;
    for (std::size_t x = 0; x < vp_.n(); ++x) {
      visit(1, x, vp_.prior()[x], vp_.ref_prior()[x], 0.0);
    }
    return std::max(0.0, div_.value()) + cost_.value();
  }

 private:
  void visit(std::size_t k, std::size_t x, double p, double q, double cost) {
    const std::size_t n = vp_.n();
    const std::size_t m = vp_.m();
    if (k > vp_.horizon()) {
      if (p > 0.0) {
        if (q <= 0.0) throw DivergenceInfinite(index_);
        div_.add(p * log_r(p / q, vp_.r()));
        cost_.add(p * cost);
      }
      ++index_;
      return;
    }
    const ConditionalPmf& pol = policies_->stage(k);
    const ConditionalPmf& ref_pol = vp_.ref_policy(k);
    const ConditionalPmf& plant = vp_.plant(k);
    const ConditionalPmf& ref_plant = vp_.ref_plant(k);
    const auto& c = vp_.costs(k);
    for (std::size_t u = 0; u < m; ++u) {
      const double pu = p * pol(x, u);
      const double qu = q * ref_pol(x, u);
      for (std::size_t y = 0; y < n; ++y) {
        if (pu <= 0.0) {
          index_ += subtree_size(k);
          continue;
        }
        visit(k + 1, y, pu * plant(x * m + u, y), qu * ref_plant(x * m + u, y),
              cost + c[y]);
      }
    }
  }

  std::size_t subtree_size(std::size_t k) const {
    std::size_t s = 1;
    for (std::size_t j = k + 1; j <= vp_.horizon(); ++j) s *= vp_.n() * vp_.m();
    return s;
  }

  const ValidatedProblem& vp_;
  const PolicySequence* policies_ = nullptr;
  CompensatedSum div_;
  CompensatedSum cost_;
  std::size_t index_ = 0;
};

}  // namespace detail

inline JointBehavior joint_behavior(const ValidatedProblem& vp,
                                    const PolicySequence& policies) {
  if (policies.horizon() != vp.horizon()) {
    throw ShapeMismatch("joint_behavior: policy horizon does not match the problem");
  }
  return detail::build_joint(
      vp, vp.prior(), [&](std::size_t k) -> const ConditionalPmf& { return policies.stage(k); },
      [&](std::size_t k) -> const ConditionalPmf& { return vp.plant(k); });
}

inline JointBehavior reference_behavior(const ValidatedProblem& vp) {
  return detail::build_joint(
      vp, vp.ref_prior(),
      [&](std::size_t k) -> const ConditionalPmf& { return vp.ref_policy(k); },
      [&](std::size_t k) -> const ConditionalPmf& { return vp.ref_plant(k); });
}

// Exact objective by enumeration of every trajectory.
inline double objective(const ValidatedProblem& vp, const PolicySequence& policies) {
  if (policies.horizon() != vp.horizon()) {
    throw ShapeMismatch("objective: policy horizon does not match the problem");
  }
  detail::check_joint_guard(vp);
  return detail::ObjectiveStream(vp)(policies);
}

// The same value from the forward non-additivity recursion and propagated
// state marginals; no trajectory is enumerated.
inline double objective_recursive(const ValidatedProblem& vp,
                                  const PolicySequence& policies) {
  const auto read = stage_reader(policies);
  const PrefixSummary full = prefix_summary_recursive(vp, read, vp.horizon() + 1);
  CompensatedSum cost;
  for (std::size_t k = 1; k <= vp.horizon(); ++k) {
    const auto law = prefix_summary_recursive(vp, read, k + 1).marginal;
    for (std::size_t x = 0; x < vp.n(); ++x) cost.add(law[x] * vp.costs(k)[x]);
  }
  return full.divergence + cost.value();
}

// Enumeration when the table fits under the guard, the recursion otherwise.
inline double objective_auto(const ValidatedProblem& vp, const PolicySequence& policies) {
  if (detail::joint_size(vp) > kJointGuard) return objective_recursive(vp, policies);
  return objective(vp, policies);
}

// Every pmf on m outcomes whose entries are multiples of step, as
// compositions of K = round(1/step). Ordered lexicographically by weight
// vector, so for m = 2 and step 0.5: (0,1), (0.5,0.5), (1,0).
inline std::vector<std::vector<double>> simplex_grid(std::size_t m, double step) {
  if (m == 0) throw DomainError("simplex_grid: m must be positive");
  if (!(step > 0.0 && step <= 1.0)) throw DomainError("simplex_grid: step must lie in (0, 1]");
  const long parts = std::lround(1.0 / step);
  if (std::abs(parts * step - 1.0) > 1e-9) {
    throw DomainError("simplex_grid: 1/step must be an integer");
  }
  std::vector<std::vector<double>> out;
  std::vector<long> counts(m, 0);
  // Recursive composition generator in lexicographic order.
  auto emit = [&](auto& self, std::size_t i, long left) -> void {
    if (i + 1 == m) {
      counts[i] = left;
      std::vector<double> row(m);
      for (std::size_t j = 0; j < m; ++j) {
        row[j] = static_cast<double>(counts[j]) / static_cast<double>(parts);
      }
      out.push_back(std::move(row));
      return;
    }
    for (long c = 0; c <= left; ++c) {
      counts[i] = c;
      self(self, i + 1, left - c);
    }
  };
  emit(emit, 0, parts);
  return out;
}

struct BruteForceResult {
  PolicySequence policy;
  double value = std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
};

// Number of policy sequences brute_force_minimize would evaluate.
inline double brute_force_size(const ValidatedProblem& vp, double step) {
  const auto grid = simplex_grid(vp.m(), step);
  double total = 1.0;
  for (std::size_t k = 1; k <= vp.horizon(); ++k) {
    for (std::size_t x = 0; x < vp.n(); ++x) {
      const auto ref = vp.ref_policy(k).row(x);
      double count = 0.0;
      for (const auto& g : grid) {
        bool ok = true;
        for (std::size_t u = 0; u < g.size(); ++u) ok = ok && !(g[u] > 0.0 && ref[u] <= 0.0);
        count += ok ? 1.0 : 0.0;
      }
      total *= count;
    }
  }
  return total;
}

// Exhaustive search over grid policy sequences. Rows are restricted to the
// reference support; candidates are visited in lexicographic order (stage 1,
// state 0 most significant) and only a strictly smaller value replaces the
// incumbent, so the first minimizer in that order wins.
inline BruteForceResult brute_force_minimize(const ValidatedProblem& vp, double step) {
  const double total = brute_force_size(vp, step);
  if (total > kBruteForceGuard) {
    throw GuardExceeded("brute-force search would evaluate " + std::to_string(total) +
                        " policy sequences, above the limit of " +
                        std::to_string(kBruteForceGuard));
  }
  detail::check_joint_guard(vp);
  if (total < 1.0) throw DomainError("brute-force grid has no row inside the reference support");

  const std::size_t n = vp.n();
  const std::size_t slots = vp.horizon() * n;
  const auto grid = simplex_grid(vp.m(), step);
  std::vector<std::vector<const std::vector<double>*>> options(slots);
  for (std::size_t s = 0; s < slots; ++s) {
    const auto ref = vp.ref_policy(s / n + 1).row(s % n);
    for (const auto& g : grid) {
      bool ok = true;
      for (std::size_t u = 0; u < g.size(); ++u) ok = ok && !(g[u] > 0.0 && ref[u] <= 0.0);
      if (ok) options[s].push_back(&g);
    }
  }
  const auto count = static_cast<std::size_t>(total);

  auto decode = [&](std::size_t index, PolicySequence& p) {
    for (std::size_t s = slots; s-- > 0;) {
      const auto& row = *options[s][index % options[s].size()];
      index /= options[s].size();
      std::copy(row.begin(), row.end(), p.stage(s / n + 1).mutable_row(s % n).begin());
    }
  };

  // Fixed chunking keeps the reduction independent of the worker count.
  const std::size_t chunks = std::min<std::size_t>(count, 64);
  std::vector<std::pair<double, std::size_t>> best(chunks,
                                                   {std::numeric_limits<double>::infinity(), 0});
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t begin = count * c / chunks;
    const std::size_t end = count * (c + 1) / chunks;
    PolicySequence p = reference_policies(vp);
    detail::ObjectiveStream eval(vp);
    for (std::size_t i = begin; i < end; ++i) {
      decode(i, p);
      const double v = eval(p);
      if (v < best[c].first) best[c] = {v, i};
    }
  });

  BruteForceResult out;
  out.policy = reference_policies(vp);
  std::size_t arg = 0;
  for (const auto& [v, i] : best) {
    if (v < out.value) {
      out.value = v;
      arg = i;
    }
  }
  decode(arg, out.policy);
  out.evaluations = count;
  return out;
}

// Classical FPD at r = 1. With -log gamma_{N+1} = 0 and, per stage k,
//
//   omega_k(x,u) = KL(s_k(.|x,u) || q^x_k(.|x,u)) + E_s[c_k(y) - log gamma_{k+1}(y)],
//
// the optimal policy is p_k(u|x) ∝ q^u_k(u|x) exp(-omega_k(x,u)) and
// gamma_k(x) = sum_u q^u_k(u|x) exp(-omega_k(x,u)).
inline PolicySequence kl_fpd_solve(const ValidatedProblem& vp) {
  const std::size_t n = vp.n();
  const std::size_t m = vp.m();
  PolicySequence out = reference_policies(vp);
  std::vector<double> cost_to_go(n, 0.0);  // -log gamma_{k+1}
  for (std::size_t k = vp.horizon(); k >= 1; --k) {
    std::vector<double> next(n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
      const auto ref = vp.ref_policy(k).row(x);
      std::vector<double> omega(m, 0.0);
      double lowest = std::numeric_limits<double>::infinity();
      for (std::size_t u = 0; u < m; ++u) {
        if (ref[u] <= 0.0) continue;
        const auto s = vp.plant_row(k, x, u);
        double expect = 0.0;
        for (std::size_t y = 0; y < n; ++y) {
          expect += s[y] * (vp.costs(k)[y] + cost_to_go[y]);
        }
        omega[u] = kl_div(s, vp.ref_plant_row(k, x, u)) + expect;
        lowest = std::min(lowest, omega[u]);
      }
      double z = 0.0;
      auto row = out.stage(k).mutable_row(x);
      for (std::size_t u = 0; u < m; ++u) {
        row[u] = ref[u] > 0.0 ? ref[u] * std::exp(-(omega[u] - lowest)) : 0.0;
        z += row[u];
      }
      for (double& v : row) v /= z;
      next[x] = lowest - std::log(z);
    }
    cost_to_go = std::move(next);
  }
  return out;
}

}  // namespace tsallis_fpd
