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

// Single-stage Tsallis-regularized minimization
//
//   min_p  (1/rho) E_p[J] + D_r(p || q)
//
// over pmfs p on a finite action set. The minimizer belongs to the deformed
// Gibbs family p(u) ∝ exp_r(-J(u)/rho_bar) q(u), so the problem reduces to
// choosing the scale rho_bar > 0. resolve_scale() scans log(rho_bar), refines
// the best cell with golden-section search and then polishes the result with
// the stationarity condition of the family,
//
//   rho_bar = r * rho * Z(rho_bar)^{1-r},   Z = sum_u exp_r(-J(u)/rho_bar) q(u),
//
// which pins rho_bar to machine precision where golden-section search alone
// stalls at about sqrt(eps).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "tsallis_fpd/deform.hpp"
#include "tsallis_fpd/divergence.hpp"
#include "tsallis_fpd/errors.hpp"
#include "tsallis_fpd/pmf.hpp"

namespace tsallis_fpd {

struct StageProblem {
  std::vector<double> cost;     // J(u); only entries on the support of ref_row matter
  std::vector<double> ref_row;  // q(u)
  double rho = 1.0;
  DeformParam r{1.0};
};

struct ScaleResolution {
  double rho_bar = 1.0;
  double lo = 0.0;  // search bracket in rho_bar
  double hi = 0.0;
  double surrogate_value = 0.0;
  double cost_shift = 0.0;  // min_u J(u) over the support, subtracted before exp_r
  bool polished = false;    // true when the stationarity root replaced the golden result
};

// Search bracket, relative to the spread of the shifted costs.
inline constexpr double kScaleBracketLo = 1e-6;
inline constexpr double kScaleBracketHi = 1e6;
inline constexpr int kScaleScanPointsPerDecade = 20;
inline constexpr double kScaleRelativeWidth = 1e-10;

// exp_r(-J(u)/rho_bar) q(u), normalized. Throws DegenerateKernel if every
// weight is zero.
inline std::vector<double> deformed_gibbs(std::span<const double> cost,
                                          std::span<const double> ref_row,
                                          double rho_bar, DeformParam r) {
  if (cost.size() != ref_row.size()) throw ShapeMismatch("deformed_gibbs: size mismatch");
  if (!(rho_bar > 0.0)) throw DomainError("deformed_gibbs: rho_bar must be > 0");
  std::vector<double> w(cost.size(), 0.0);
  CompensatedSum z;
  for (std::size_t u = 0; u < cost.size(); ++u) {
    if (ref_row[u] <= 0.0) continue;
    w[u] = exp_r(-cost[u] / rho_bar, r) * ref_row[u];
    z.add(w[u]);
  }
  const double total = z.value();
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw DegenerateKernel("every action weight of the deformed Gibbs kernel is zero");
  }
  for (double& x : w) x /= total;
  return w;
}

// (1/rho) E_p[J] + D_r(p || q).
inline double stage_objective(const StageProblem& sp, std::span<const double> p) {
  CompensatedSum e;
  for (std::size_t u = 0; u < p.size(); ++u) {
    if (p[u] > 0.0) e.add(p[u] * sp.cost[u]);
  }
  return e.value() / sp.rho + tsallis_div(p, sp.ref_row, sp.r);
}

namespace detail {

inline void check_stage_problem(const StageProblem& sp) {
  if (sp.cost.size() != sp.ref_row.size() || sp.cost.empty()) {
    throw ShapeMismatch("stage problem: cost and reference sizes differ");
  }
  if (!(sp.rho > 0.0) || !std::isfinite(sp.rho)) {
    throw DomainError("stage problem: rho must be finite and > 0");
  }
  if (!is_stochastic(sp.ref_row, kRenormalizeTolerance)) {
    throw DomainError("stage problem: reference row is not a pmf");
  }
  for (std::size_t u = 0; u < sp.cost.size(); ++u) {
    if (sp.ref_row[u] > 0.0 && !std::isfinite(sp.cost[u])) {
      throw DomainError("stage problem: cost is not finite on the reference support");
    }
  }
}


// Costs shifted so the minimum over the support is 0; entries off the support
// are set to 0 (they are multiplied by q = 0 anyway).
inline std::pair<std::vector<double>, double> shifted_costs(const StageProblem& sp) {
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t u = 0; u < sp.cost.size(); ++u) {
    if (sp.ref_row[u] > 0.0) lowest = std::min(lowest, sp.cost[u]);
  }
  std::vector<double> shifted(sp.cost.size(), 0.0);
  for (std::size_t u = 0; u < sp.cost.size(); ++u) {
    if (sp.ref_row[u] > 0.0) shifted[u] = sp.cost[u] - lowest;
  }
  return {std::move(shifted), lowest};
}

}  // namespace detail

inline ScaleResolution resolve_scale(const StageProblem& sp) {
  detail::check_stage_problem(sp);
  auto [shifted, shift] = detail::shifted_costs(sp);
  const double spread = *std::max_element(shifted.begin(), shifted.end());

  ScaleResolution res;
  res.cost_shift = shift;
  if (!(spread > 0.0)) {
    // Constant cost: every family member equals q.
    res.lo = kScaleBracketLo;
    res.hi = kScaleBracketHi;
    res.rho_bar = res.hi;
    res.surrogate_value = stage_objective(sp, sp.ref_row);
    return res;
  }
  res.lo = kScaleBracketLo * spread;
  res.hi = kScaleBracketHi * spread;

  auto objective_at = [&](double log_rho_bar) {
    try {
      const auto p = deformed_gibbs(shifted, sp.ref_row, std::exp(log_rho_bar), sp.r);
      return stage_objective(sp, p);
    } catch (const DegenerateKernel&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  const double t_lo = std::log(res.lo);
  const double t_hi = std::log(res.hi);
  const int decades = static_cast<int>(std::lround((t_hi - t_lo) / std::log(10.0)));
  const int points = decades * kScaleScanPointsPerDecade + 1;
  std::vector<double> ts(points);
  std::vector<double> fs(points);
  for (int i = 0; i < points; ++i) {
    ts[i] = t_lo + (t_hi - t_lo) * i / (points - 1);
    fs[i] = objective_at(ts[i]);
  }

  // Best scan point; ties resolve toward larger rho_bar.
  int best = 0;
  for (int i = 1; i < points; ++i) {
    if (fs[i] <= fs[best]) best = i;
  }
  if (!std::isfinite(fs[best])) {
    throw DegenerateKernel("deformed Gibbs kernel degenerate across the whole scale bracket");
  }
  {
    double interior = std::numeric_limits<double>::infinity();
    for (int i = 1; i + 1 < points; ++i) interior = std::min(interior, fs[i]);
    if (fs.front() < interior && fs.back() < interior) {
      std::vector<std::pair<double, double>> profile;
      for (int i = 0; i < points; ++i) profile.emplace_back(std::exp(ts[i]), fs[i]);
      throw ScaleBracketError("stage objective is not unimodal in rho_bar", std::move(profile));
    }
  }

  // Golden-section refinement on the neighbouring cells.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = ts[std::max(best - 1, 0)];
  double b = ts[std::min(best + 1, points - 1)];
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective_at(c);
  double fd = objective_at(d);
  while (b - a > kScaleRelativeWidth) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective_at(d);
    }
  }
  double t_best = 0.5 * (a + b);
  double f_best = objective_at(t_best);
  if (fs[best] < f_best) {
    t_best = ts[best];
    f_best = fs[best];
  }

  // Polish with the stationarity condition
  //   log rho_bar - log(r rho) - (1 - r) log Z(rho_bar) = 0.
  const double r_eff = sp.r.kl_limit() ? 1.0 : sp.r.value();
  auto stationarity = [&](double t) {
    CompensatedSum z;
    for (std::size_t u = 0; u < shifted.size(); ++u) {
      if (sp.ref_row[u] > 0.0) z.add(exp_r(-shifted[u] / std::exp(t), sp.r) * sp.ref_row[u]);
    }
    const double zv = z.value();
    if (!(zv > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return t - std::log(r_eff * sp.rho) - (1.0 - r_eff) * std::log(zv);
  };
  double ra = ts[std::max(best - 2, 0)];
  double rb = ts[std::min(best + 2, points - 1)];
  double ha = stationarity(ra);
  double hb = stationarity(rb);
  if (std::isfinite(ha) && std::isfinite(hb) && ha * hb <= 0.0) {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (ra + rb);
      if (mid <= ra || mid >= rb) break;
      const double hm = stationarity(mid);
      if (!std::isfinite(hm)) break;
      if ((hm <= 0.0) == (ha <= 0.0)) {
        ra = mid;
        ha = hm;
      } else {
        rb = mid;
      }
    }
    const double t_root = 0.5 * (ra + rb);
    const double f_root = objective_at(t_root);
    if (f_root <= f_best + 1e-12 * std::max(1.0, std::abs(f_best))) {
      t_best = t_root;
      f_best = f_root;
      res.polished = true;
    }
  }

  res.rho_bar = std::exp(t_best);
  res.surrogate_value = f_best;
  return res;
}

// Deformed Gibbs member at the resolved scale. The returned pmf is built from
// the same shifted costs the search used.
inline std::vector<double> single_stage_solve(const StageProblem& sp,
                                              ScaleResolution* resolution = nullptr) {
  const auto res = resolve_scale(sp);
  if (resolution) *resolution = res;
  auto [shifted, shift] = detail::shifted_costs(sp);
  return deformed_gibbs(shifted, sp.ref_row, res.rho_bar, sp.r);
}

}  // namespace tsallis_fpd
