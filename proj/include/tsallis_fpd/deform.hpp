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

// Deformed (Tsallis) logarithm and exponential.
//
//   log_r(v) = (v^{r-1} - 1) / (r - 1)
//   exp_r(v) = [1 + (r-1) v]_+^{1/(r-1)}
//
// Both are evaluated through expm1/log1p so that r close to 1 does not lose
// digits, and dispatch to ln/exp once |r - 1| < kKlThreshold.

#pragma once

#include <cmath>
#include <string>

#include "tsallis_fpd/errors.hpp"

namespace tsallis_fpd {

class DeformParam {
 public:
  static constexpr double kKlThreshold = 1e-9;

  explicit DeformParam(double r) : r_(r) {
    if (!std::isfinite(r) || r <= 0.0) {
      throw DomainError("deformation parameter r must be finite and > 0, got " +
                        std::to_string(r));
    }
    kl_limit_ = std::abs(r - 1.0) < kKlThreshold;
  }

  double value() const { return r_; }
  bool kl_limit() const { return kl_limit_; }

  // r - 1, or exactly 0 in the KL limit.
  double shift() const { return kl_limit_ ? 0.0 : r_ - 1.0; }

  friend bool operator==(const DeformParam& a, const DeformParam& b) {
    return a.r_ == b.r_;
  }

 private:
  double r_;
  bool kl_limit_ = false;
};

inline double log_r(double v, DeformParam r) {
  if (!std::isfinite(v) || v <= 0.0) {
    throw DomainError("log_r requires a finite positive argument, got " +
                      std::to_string(v));
  }
  if (r.kl_limit()) return std::log(v);
  const double c = r.shift();
  return std::expm1(c * std::log(v)) / c;
}

inline double exp_r(double v, DeformParam r) {
  if (!std::isfinite(v)) {
    throw DomainError("exp_r requires a finite argument, got " + std::to_string(v));
  }
  if (r.kl_limit()) return std::exp(v);
  const double c = r.shift();
  const double base = 1.0 + c * v;
  if (base <= 0.0) return 0.0;
  return std::exp(std::log1p(c * v) / c);
}

// v^{r-1}, i.e. 1 + (r-1) log_r(v). Used by the multiplicative form of the
// divergence. In the KL limit this degenerates to 1 and callers work with
// log_r directly.
inline double deformed_power(double v, DeformParam r) {
  if (r.kl_limit()) return 1.0;
  return std::pow(v, r.shift());
}

// Neumaier-compensated running sum. Summation order is whatever order add()
// is called in; callers iterate outcomes by index so results are reproducible.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace tsallis_fpd
