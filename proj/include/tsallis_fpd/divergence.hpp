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

// Tsallis divergence D_r(p||q) = sum_v p(v) log_r(p(v)/q(v)) over finite pmfs.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

#include "tsallis_fpd/deform.hpp"
#include "tsallis_fpd/errors.hpp"
#include "tsallis_fpd/pmf.hpp"

namespace tsallis_fpd {

// Terms with p(v) = 0 contribute 0. Throws DivergenceInfinite when p(v) > 0
// and q(v) = 0. Tiny negative roundoff is clamped to 0.
inline double tsallis_div(std::span<const double> p, std::span<const double> q,
                          DeformParam r) {
  if (p.size() != q.size()) throw ShapeMismatch("tsallis_div: size mismatch");
  CompensatedSum s;
  for (std::size_t v = 0; v < p.size(); ++v) {
    if (p[v] <= 0.0) continue;
    if (q[v] <= 0.0) throw DivergenceInfinite(v);
    s.add(p[v] * log_r(p[v] / q[v], r));
  }
  return std::max(0.0, s.value());
}

inline double kl_div(std::span<const double> p, std::span<const double> q) {
  return tsallis_div(p, q, DeformParam(1.0));
}

// sum_z weight(z) D_r(p(.|z) || q). Rows with zero weight are skipped.
inline double total_conditional_tsallis_div(const ConditionalPmf& p_cond,
                                            std::span<const double> weight,
                                            std::span<const double> q,
                                            DeformParam r) {
  if (weight.size() != p_cond.conditions() || q.size() != p_cond.outcomes()) {
    throw ShapeMismatch("total_conditional_tsallis_div: shape mismatch");
  }
  CompensatedSum s;
  for (std::size_t z = 0; z < weight.size(); ++z) {
    if (weight[z] <= 0.0) continue;
    try {
      s.add(weight[z] * tsallis_div(p_cond.row(z), q, r));
    } catch (const DivergenceInfinite& e) {
      throw DivergenceInfinite(e.outcome(), z);
    }
  }
  return s.value();
}

// Pieces of the two-factor expansion of D_r(p(v,z) || q_v(v) q_z(z)) with
// p(v,z) = p(v|z) p(z):
//
//   joint = conditional + marginal + (r-1) * cross
//
// conditional = E_{p(z)}[D_r(p(.|z)||q_v)], marginal = D_r(p_z||q_z) and
// cross = E_{p(z)}[log_r(p(z)/q_z(z)) D_r(p(.|z)||q_v)]. When the conditional
// divergence does not depend on z (e.g. p(v|z) = p(v)) the cross term equals
// conditional * marginal, reported as cross_product_form.
struct NonAdditivityTerms {
  double joint = 0.0;
  double conditional = 0.0;
  double marginal = 0.0;
  double cross = 0.0;
  double cross_product_form = 0.0;
  double shift = 0.0;  // r - 1 (0 in the KL limit)

  double expansion() const { return conditional + marginal + shift * cross; }
  double residual() const { return joint - expansion(); }
};

inline NonAdditivityTerms non_additivity_terms(const ConditionalPmf& p_cond,
                                               std::span<const double> p_z,
                                               std::span<const double> q_v,
                                               std::span<const double> q_z,
                                               DeformParam r) {
  if (p_cond.conditions() != p_z.size() || p_z.size() != q_z.size() ||
      p_cond.outcomes() != q_v.size()) {
    throw ShapeMismatch("non_additivity_terms: shape mismatch");
  }
  NonAdditivityTerms t;
  t.shift = r.shift();

  CompensatedSum joint;
  CompensatedSum cross;
  for (std::size_t z = 0; z < p_z.size(); ++z) {
    if (p_z[z] <= 0.0) continue;
    if (q_z[z] <= 0.0) throw DivergenceInfinite(z);
    for (std::size_t v = 0; v < q_v.size(); ++v) {
      const double p = p_z[z] * p_cond(z, v);
      if (p <= 0.0) continue;
      const double q = q_z[z] * q_v[v];
      if (q <= 0.0) throw DivergenceInfinite(v, z);
      joint.add(p * log_r(p / q, r));
    }
    const double dz = tsallis_div(p_cond.row(z), q_v, r);
    cross.add(p_z[z] * log_r(p_z[z] / q_z[z], r) * dz);
  }
  t.joint = joint.value();
  t.conditional = total_conditional_tsallis_div(p_cond, p_z, q_v, r);
  t.marginal = tsallis_div(p_z, q_z, r);
  t.cross = cross.value();
  t.cross_product_form = t.conditional * t.marginal;
  return t;
}

// LHS minus RHS of the expansion; zero up to roundoff for every valid input.
inline double non_additivity_residual(const ConditionalPmf& p_cond,
                                      std::span<const double> p_z,
                                      std::span<const double> q_v,
                                      std::span<const double> q_z, DeformParam r) {
  return non_additivity_terms(p_cond, p_z, q_v, q_z, r).residual();
}

}  // namespace tsallis_fpd
