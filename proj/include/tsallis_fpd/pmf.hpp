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

// Finite probability mass functions and row-stochastic conditional tables.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tsallis_fpd/deform.hpp"
#include "tsallis_fpd/errors.hpp"

namespace tsallis_fpd {

inline constexpr double kPmfTolerance = 1e-12;

// Rows within this distance of 1 are renormalized on input; rows further away
// are rejected.
inline constexpr double kRenormalizeTolerance = 1e-9;

// True when every entry is finite and >= 0 and the entries sum to 1 within tol.
inline bool is_stochastic(std::span<const double> w, double tol = kPmfTolerance) {
  CompensatedSum s;
  for (double x : w) {
    if (!std::isfinite(x) || x < 0.0) return false;
    s.add(x);
  }
  return !w.empty() && std::abs(s.value() - 1.0) <= tol;
}

class Pmf {
 public:
  Pmf() = default;
  explicit Pmf(std::vector<double> weights) : w_(std::move(weights)) {}
  Pmf(std::initializer_list<double> weights) : w_(weights) {}

  // Throws DomainError unless the weights form a pmf within tol.
  static Pmf checked(std::vector<double> weights, double tol = kPmfTolerance) {
    if (!is_stochastic(weights, tol)) {
      throw DomainError("weights do not form a probability mass function");
    }
    return Pmf(std::move(weights));
  }

  static Pmf uniform(std::size_t n) {
    return Pmf(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  }

  static Pmf point_mass(std::size_t n, std::size_t at) {
    std::vector<double> w(n, 0.0);
    w.at(at) = 1.0;
    return Pmf(std::move(w));
  }

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  std::span<const double> weights() const { return w_; }
  std::vector<double>& mutable_weights() { return w_; }

  bool is_valid(double tol = kPmfTolerance) const { return is_stochastic(w_, tol); }

  operator std::span<const double>() const { return w_; }  // NOLINT

  friend bool operator==(const Pmf&, const Pmf&) = default;

 private:
  std::vector<double> w_;
};

// p(outcome | condition), stored row-major with one row per condition.
class ConditionalPmf {
 public:
  ConditionalPmf() = default;
  ConditionalPmf(std::size_t conditions, std::size_t outcomes)
      : rows_(conditions), cols_(outcomes), data_(conditions * outcomes, 0.0) {}
  ConditionalPmf(std::size_t conditions, std::size_t outcomes,
                 std::vector<double> data)
      : rows_(conditions), cols_(outcomes), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeMismatch("conditional table has " + std::to_string(data_.size()) +
                          " entries, expected " + std::to_string(rows_ * cols_));
    }
  }

  static ConditionalPmf from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    ConditionalPmf t(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != cols) throw ShapeMismatch("ragged conditional table");
      std::copy(rows[i].begin(), rows[i].end(), t.mutable_row(i).begin());
    }
    return t;
  }

  // Every row equal to `row`.
  static ConditionalPmf repeat(std::size_t conditions, std::span<const double> row) {
    ConditionalPmf t(conditions, row.size());
    for (std::size_t i = 0; i < conditions; ++i) {
      std::copy(row.begin(), row.end(), t.mutable_row(i).begin());
    }
    return t;
  }

  std::size_t conditions() const { return rows_; }
  std::size_t outcomes() const { return cols_; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> mutable_row(std::size_t i) {
    return {data_.data() + i * cols_, cols_};
  }
  double operator()(std::size_t condition, std::size_t outcome) const {
    return data_[condition * cols_ + outcome];
  }
  double& operator()(std::size_t condition, std::size_t outcome) {
    return data_[condition * cols_ + outcome];
  }

  std::span<const double> data() const { return data_; }

  // Index of the first row that is not a pmf within tol, or conditions().
  std::size_t first_bad_row(double tol = kPmfTolerance) const {
    for (std::size_t i = 0; i < rows_; ++i) {
      if (!is_stochastic(row(i), tol)) return i;
    }
    return rows_;
  }
  bool is_row_stochastic(double tol = kPmfTolerance) const {
    return first_bad_row(tol) == rows_;
  }

  friend bool operator==(const ConditionalPmf&, const ConditionalPmf&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Sum of |a_i - b_i|.
inline double l1_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeMismatch("l1_distance: size mismatch");
  CompensatedSum s;
  for (std::size_t i = 0; i < a.size(); ++i) s.add(std::abs(a[i] - b[i]));
  return s.value();
}

}  // namespace tsallis_fpd
