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

// Relaxed operator T_omega = omega T + (1 - omega) I, the outer fixed-point
// loop and its convergence diagnostics.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tsallis_fpd/errors.hpp"
#include "tsallis_fpd/induction.hpp"
#include "tsallis_fpd/oracle.hpp"
#include "tsallis_fpd/pmf.hpp"
#include "tsallis_fpd/problem.hpp"

namespace tsallis_fpd {

enum class Termination { kConverged, kMaxIter, kError };

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::kConverged: return "converged";
    case Termination::kMaxIter: return "max_iter";
    case Termination::kError: return "error";
  }
  return "error";
}

struct IterationReport {
  int iterations = 0;
  std::vector<double> deltas;      // sup-L1 distance between consecutive iterates
  std::vector<double> objectives;  // exact objective after each iteration
  // deltas[l] / deltas[l-1]; NaN for the first iteration or a zero denominator.
  std::vector<double> contraction_ratios;
  std::vector<double> wallclock_ms;  // cumulative, per iteration
  Termination termination = Termination::kError;
  std::string error_message;
  double final_residual = std::numeric_limits<double>::quiet_NaN();
};

struct IterationResult {
  PolicySequence policy;
  IterationReport report;
};

// max over (k, x) of the row L1 distance. At most 2.
inline double policy_distance(const PolicySequence& a, const PolicySequence& b) {
  if (a.horizon() != b.horizon()) throw ShapeMismatch("policy_distance: horizons differ");
  double d = 0.0;
  for (std::size_t k = 1; k <= a.horizon(); ++k) {
    const auto& ta = a.stage(k);
    const auto& tb = b.stage(k);
    if (ta.conditions() != tb.conditions() || ta.outcomes() != tb.outcomes()) {
      throw ShapeMismatch("policy_distance: stage " + std::to_string(k) + " shapes differ");
    }
    for (std::size_t x = 0; x < ta.conditions(); ++x) {
      d = std::max(d, l1_distance(ta.row(x), tb.row(x)));
    }
  }
  return d;
}

// omega * T(p) + (1 - omega) * p rowwise; omega = 1 returns T(p) unchanged.
inline PolicySequence relax(const PolicySequence& image, const PolicySequence& p,
                            double omega) {
  if (omega == 1.0) return image;
  PolicySequence out = p;
  for (std::size_t k = 1; k <= p.horizon(); ++k) {
    auto& t = out.stage(k);
    const auto& img = image.stage(k);
    for (std::size_t x = 0; x < t.conditions(); ++x) {
      auto row = t.mutable_row(x);
      const auto src = img.row(x);
      for (std::size_t u = 0; u < row.size(); ++u) {
        row[u] = omega * src[u] + (1.0 - omega) * row[u];
      }
    }
  }
  return out;
}

inline PolicySequence apply_T_relaxed(const ValidatedProblem& vp, const PolicySequence& p,
                                      double omega) {
  if (!(omega > 0.0 && omega <= 1.0)) throw DomainError("omega must lie in (0, 1]");
  return relax(apply_T(vp, p), p, omega);
}

// Runs p^{l+1} = T_omega(p^l) from `start` (or init_policies) until the step
// is at most cfg.tol or cfg.max_outer iterations have run. Solver errors end
// the loop with Termination::kError and keep the history gathered so far.
inline IterationResult iterate(const ValidatedProblem& vp, const IterationConfig& cfg,
                               std::optional<PolicySequence> start = {}) {
  cfg.check();
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  IterationResult res;
  IterationReport& rep = res.report;
  try {
    res.policy = start ? std::move(*start) : init_policies(vp, cfg);
    auto issues = policy_issues(vp, res.policy);
    if (!issues.empty()) throw ValidationError(std::move(issues));
  } catch (const Error& e) {
    rep.termination = Termination::kError;
    rep.error_message = e.what();
    return res;
  }

  rep.termination = Termination::kMaxIter;
  try {
    for (int l = 0; l < cfg.max_outer; ++l) {
      PolicySequence next = apply_T_relaxed(vp, res.policy, cfg.omega);
      const double delta = policy_distance(next, res.policy);
      res.policy = std::move(next);
      rep.iterations = l + 1;
      rep.contraction_ratios.push_back(
          rep.deltas.empty() || rep.deltas.back() == 0.0
              ? std::numeric_limits<double>::quiet_NaN()
              : delta / rep.deltas.back());
      rep.deltas.push_back(delta);
      rep.objectives.push_back(objective_auto(vp, res.policy));
      rep.wallclock_ms.push_back(
          std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
      if (delta <= cfg.tol) {
        rep.termination = Termination::kConverged;
        break;
      }
    }
    if (rep.termination == Termination::kConverged) {
      rep.final_residual = policy_distance(apply_T(vp, res.policy), res.policy);
    }
  } catch (const Error& e) {
    rep.termination = Termination::kError;
    rep.error_message = e.what();
  }
  return res;
}

inline constexpr int kContractionBurnIn = 5;

// Largest deltas[l] / deltas[l-1] over l >= kContractionBurnIn (0-based), so
// the first five iterations are ignored. Zero denominators are skipped.
inline double contraction_estimate(const IterationReport& report) {
  const auto& d = report.deltas;
  if (d.size() < static_cast<std::size_t>(kContractionBurnIn) + 1) {
    throw InsufficientHistory("contraction estimate needs at least " +
                              std::to_string(kContractionBurnIn + 1) + " deltas, got " +
                              std::to_string(d.size()));
  }
  double worst = 0.0;
  for (std::size_t l = kContractionBurnIn; l < d.size(); ++l) {
    if (d[l - 1] == 0.0) continue;
    worst = std::max(worst, d[l] / d[l - 1]);
  }
  return worst;
}

}  // namespace tsallis_fpd
