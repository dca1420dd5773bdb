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

// Exception hierarchy shared by every module of the library.

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tsallis_fpd {

// Base class. Context strings ("stage 3", "row 1") can be prepended while the
// exception propagates, so callers see where in the sweep a failure occurred.
class Error : public std::exception {
 public:
  explicit Error(std::string message) : message_(std::move(message)) {
    rebuild();
  }

  const char* what() const noexcept override { return full_.c_str(); }
  const std::string& message() const { return message_; }
  const std::vector<std::string>& context() const { return context_; }

  void add_context(std::string ctx) {
    context_.insert(context_.begin(), std::move(ctx));
    rebuild();
  }

 private:
  void rebuild() {
    full_.clear();
    for (const auto& c : context_) {
      full_ += c;
      full_ += ": ";
    }
    full_ += message_;
  }

  std::string message_;
  std::vector<std::string> context_;
  std::string full_;
};

// Invalid argument to a deformed operation (non-positive or non-finite input).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Absolute continuity violated: p puts mass where q has none.
class DivergenceInfinite : public Error {
 public:
  explicit DivergenceInfinite(std::size_t outcome,
                              std::optional<std::size_t> condition = {})
      : Error(describe(outcome, condition)),
        outcome_(outcome),
        condition_(condition) {}

  std::size_t outcome() const { return outcome_; }
  std::optional<std::size_t> condition() const { return condition_; }

 private:
  static std::string describe(std::size_t outcome,
                              std::optional<std::size_t> condition) {
    std::string s = "divergence is infinite: p(" + std::to_string(outcome) +
                    ") > 0 where q is 0";
    if (condition) s += " (conditioning outcome " + std::to_string(*condition) + ")";
    return s;
  }

  std::size_t outcome_;
  std::optional<std::size_t> condition_;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

// One entry of the machine-readable validation report.
struct ValidationIssue {
  std::string code;     // e.g. "non_stochastic_row", "absolute_continuity"
  std::string field;    // e.g. "plant"
  int stage = 0;        // 1-based stage, 0 when not stage-specific
  int row = -1;         // conditioning row, -1 when not row-specific
  std::string message;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<ValidationIssue> issues)
      : Error(summarize(issues)), issues_(std::move(issues)) {}

  const std::vector<ValidationIssue>& issues() const { return issues_; }

 private:
  static std::string summarize(const std::vector<ValidationIssue>& issues) {
    std::string s = "validation failed with " + std::to_string(issues.size()) +
                    " issue(s)";
    if (!issues.empty()) s += "; first: " + issues.front().message;
    return s;
  }

  std::vector<ValidationIssue> issues_;
};

class ParseError : public Error {
 public:
  ParseError(std::string message, std::size_t line = 0, std::string field = {})
      : Error(describe(message, line, field)), line_(line), field_(std::move(field)) {}

  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  static std::string describe(const std::string& message, std::size_t line,
                              const std::string& field) {
    std::string s = "parse error";
    if (line > 0) s += " at line " + std::to_string(line);
    if (!field.empty()) s += " in field '" + field + "'";
    return s + ": " + message;
  }

  std::size_t line_;
  std::string field_;
};

// Every weight of the deformed Gibbs kernel clamped to zero.
class DegenerateKernel : public Error {
 public:
  using Error::Error;
};

// Scale search found no interior minimum (profile minimal at both ends).
class ScaleBracketError : public Error {
 public:
  ScaleBracketError(std::string message,
                    std::vector<std::pair<double, double>> profile)
      : Error(std::move(message)), profile_(std::move(profile)) {}

  // (rho_bar, stage objective) pairs of the coarse scan.
  const std::vector<std::pair<double, double>>& profile() const { return profile_; }

 private:
  std::vector<std::pair<double, double>> profile_;
};

class NonPositiveScale : public Error {
 public:
  NonPositiveScale(double rho, double r, double prefix_divergence)
      : Error("non-positive stage scale rho=" + std::to_string(rho) +
              " (r=" + std::to_string(r) +
              ", prefix divergence=" + std::to_string(prefix_divergence) +
              "); reduce |r-1| or move the references closer to the plant"),
        rho_(rho),
        r_(r),
        prefix_divergence_(prefix_divergence) {}

  double rho() const { return rho_; }
  double r() const { return r_; }
  double prefix_divergence() const { return prefix_divergence_; }

 private:
  double rho_;
  double r_;
  double prefix_divergence_;
};

// Enumeration or brute-force search would exceed its size guard.
class GuardExceeded : public Error {
 public:
  using Error::Error;
};

class InsufficientHistory : public Error {
 public:
  using Error::Error;
};

// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace tsallis_fpd
