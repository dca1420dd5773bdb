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

// Command-line front end: validate, solve, compare and sweep.
//
// Exit codes: 0 ok, 1 usage, 2 parse or validation failure, 3 I/O failure,
// 4 iteration limit reached, 5 solver error, 6 size guard exceeded.

#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "tsallis_fpd/errors.hpp"
#include "tsallis_fpd/fixed_point.hpp"
#include "tsallis_fpd/oracle.hpp"
#include "tsallis_fpd/problem.hpp"
#include "tsallis_fpd/problem_io.hpp"

namespace tsallis_fpd::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kInvalid = 2,
  kIo = 3,
  kMaxIter = 4,
  kSolverError = 5,
  kGuard = 6,
};

inline constexpr const char* kPolicyFile = "policy.json";
inline constexpr const char* kDiagnosticsFile = "diagnostics.csv";
inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kSweepSummaryFile = "sweep_summary.csv";

// Flags that override the solver block of the problem file.
struct SolverFlags {
  std::optional<double> omega;
  std::optional<double> tol;
  std::optional<int> max_iter;
  std::optional<std::string> init;
  std::optional<std::string> init_file;
  std::optional<std::uint64_t> seed;
};

struct RunManifest {
  std::string input;
  IterationConfig config;
  std::vector<std::pair<std::string, std::string>> outputs;  // role, file name
  int exit_status = kOk;
  double wallclock_ms = 0.0;
};

struct SolveSummary {
  int exit_status = kOk;
  IterationResult result;
};

namespace detail {

inline void print_issues(std::ostream& err, const ValidationError& e) {
  err << "validation failed:\n";
  for (const auto& i : e.issues()) {
    err << "  [" << i.code << "] " << i.message << "\n";
  }
}

// Maps library exceptions to exit codes and prints them.
template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    print_issues(err, e);
    return kInvalid;
  } catch (const ParseError& e) {
    err << e.what() << "\n";
    return kInvalid;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const GuardExceeded& e) {
    err << "guard exceeded: " << e.what() << "\n";
    return kGuard;
  } catch (const Error& e) {
    err << "solver error: " << e.what() << "\n";
    return kSolverError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIo;
  }
}

inline IterationConfig resolve_config(const ProblemSpec& spec, const SolverFlags& f) {
  IterationConfig cfg = spec.solver.value_or(IterationConfig{});
  if (f.omega) cfg.omega = *f.omega;
  if (f.tol) cfg.tol = *f.tol;
  if (f.max_iter) cfg.max_outer = *f.max_iter;
  if (f.seed) cfg.rng_seed = *f.seed;
  if (f.init) {
    const auto mode = parse_init_mode(*f.init);
    if (!mode) {
      throw ValidationError({{"invalid_init", "init", 0, -1,
                              "--init must be reference, uniform or custom"}});
    }
    cfg.init_mode = *mode;
  }
  if (f.init_file && !f.init) cfg.init_mode = InitMode::kCustom;
  try {
    cfg.check();
  } catch (const DomainError& e) {
    throw ValidationError({{"invalid_solver", "solver", 0, -1, e.message()}});
  }
  return cfg;
}

// Initial iterate, with custom sequences checked against the problem.
inline PolicySequence resolve_start(const ValidatedProblem& vp, const IterationConfig& cfg,
                                    const SolverFlags& f) {
  std::optional<PolicySequence> custom;
  if (f.init_file) custom = load_policy(*f.init_file, vp.spec());
  if (custom) {
    auto issues = policy_issues(vp, *custom);
    if (!issues.empty()) throw ValidationError(std::move(issues));
  }
  return init_policies(vp, cfg, custom);
}

inline int exit_for(Termination t) {
  switch (t) {
    case Termination::kConverged: return kOk;
    case Termination::kMaxIter: return kMaxIter;
    case Termination::kError: return kSolverError;
  }
  return kSolverError;
}

inline Json manifest_json(const RunManifest& m, const IterationReport& rep) {
  Json j = Json::object();
  j["input"] = m.input;
  Json cfg = Json::object();
  cfg["omega"] = m.config.omega;
  cfg["tol"] = m.config.tol;
  cfg["max_outer"] = m.config.max_outer;
  cfg["init_mode"] = to_string(m.config.init_mode);
  cfg["seed"] = m.config.rng_seed;
  j["config"] = std::move(cfg);
  Json outs = Json::object();
  for (const auto& [role, file] : m.outputs) outs[role] = file;
  j["outputs"] = std::move(outs);
  j["termination"] = to_string(rep.termination);
  j["iterations"] = rep.iterations;
  j["final_residual"] = rep.final_residual;
  j["objective"] = rep.objectives.empty() ? std::numeric_limits<double>::quiet_NaN()
                                          : rep.objectives.back();
  if (!rep.error_message.empty()) j["error"] = rep.error_message;
  j["exit_status"] = m.exit_status;
  j["wallclock_ms"] = m.wallclock_ms;
  return j;
}

inline std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    item = item.substr(b, e - b + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw CLI::ValidationError(flag, "'" + item + "' is not a number");
    out.push_back(v);
  }
  return out;
}

}  // namespace detail

// Solves one validated problem and writes policy, diagnostics and manifest
// into out_dir. Returns the exit status together with the result.
inline SolveSummary run_solve(const ValidatedProblem& vp, const IterationConfig& cfg,
                              const PolicySequence& start, const std::string& input,
                              const std::filesystem::path& out_dir, bool timing) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveSummary s;
  s.result = iterate(vp, cfg, start);
  s.exit_status = detail::exit_for(s.result.report.termination);

  std::filesystem::create_directories(out_dir);
  save_policy(out_dir / kPolicyFile, vp.spec(), s.result.policy, s.result.report);
  tsallis_fpd::detail::write_file(out_dir / kDiagnosticsFile,
                                  diagnostics_csv(s.result.report, timing));
  RunManifest m;
  m.input = input;
  m.config = cfg;
  m.outputs = {{"policy", kPolicyFile}, {"diagnostics", kDiagnosticsFile}};
  m.exit_status = s.exit_status;
  if (timing) {
    m.wallclock_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
  }
  tsallis_fpd::detail::write_file(out_dir / kManifestFile,
                                  to_json_text(detail::manifest_json(m, s.result.report)));
  return s;
}

inline int cmd_validate(const std::string& path, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const ValidatedProblem vp = validate(load_problem(path));
    out << "ok: " << vp.n() << " states, " << vp.m() << " actions, horizon " << vp.horizon()
        << ", r = " << format_double(vp.r().value()) << "\n";
    return static_cast<int>(kOk);
  });
}

inline int cmd_solve(const std::string& path, const SolverFlags& flags,
                     const std::string& out_dir, bool timing, std::ostream& out,
                     std::ostream& err) {
  return detail::guarded(err, [&] {
    const ProblemSpec spec = load_problem(path);
    const IterationConfig cfg = detail::resolve_config(spec, flags);
    const ValidatedProblem vp = validate(spec);
    const PolicySequence start = detail::resolve_start(vp, cfg, flags);
    const SolveSummary s = run_solve(vp, cfg, start, path, out_dir, timing);
    const IterationReport& rep = s.result.report;
    out << "termination: " << to_string(rep.termination) << "\n";
    out << "iterations: " << rep.iterations << "\n";
    if (!rep.deltas.empty()) out << "last_delta: " << format_double(rep.deltas.back()) << "\n";
    if (!rep.objectives.empty()) {
      out << "objective: " << format_double(rep.objectives.back()) << "\n";
    }
    if (std::isfinite(rep.final_residual)) {
      out << "final_residual: " << format_double(rep.final_residual) << "\n";
    }
    out << "output: " << out_dir << "\n";
    if (!rep.error_message.empty()) err << "solver error: " << rep.error_message << "\n";
    return s.exit_status;
  });
}

// Reports solver-versus-oracle gaps without judging them. Brute force runs
// unless only --kl was requested.
inline int cmd_compare(const std::string& path, const SolverFlags& flags,
                       std::optional<double> grid_step, bool kl, std::ostream& out,
                       std::ostream& err) {
  return detail::guarded(err, [&] {
    const ProblemSpec spec = load_problem(path);
    const IterationConfig cfg = detail::resolve_config(spec, flags);
    const ValidatedProblem vp = validate(spec);
    const bool brute = grid_step.has_value() || !kl;
    const double step = grid_step.value_or(0.05);
    if (brute) {
      const double size = brute_force_size(vp, step);
      if (size > kBruteForceGuard) {
        throw GuardExceeded("brute-force search would evaluate " + format_double(size) +
                            " policy sequences (limit " + format_double(kBruteForceGuard) +
                            ")");
      }
    }
    const auto res = iterate(vp, cfg, detail::resolve_start(vp, cfg, flags));
    if (res.report.termination == Termination::kError) {
      err << "solver error: " << res.report.error_message << "\n";
      return static_cast<int>(kSolverError);
    }
    const double solver_value = objective_auto(vp, res.policy);
    out << "termination: " << to_string(res.report.termination) << "\n";
    out << "iterations: " << res.report.iterations << "\n";
    out << "solver_objective: " << format_double(solver_value) << "\n";
    if (brute) {
      const auto bf = brute_force_minimize(vp, step);
      out << "grid_step: " << format_double(step) << "\n";
      out << "brute_force_evaluations: " << bf.evaluations << "\n";
      out << "brute_force_objective: " << format_double(bf.value) << "\n";
      out << "gap: " << format_double(solver_value - bf.value) << "\n";
    }
    if (kl) {
      const PolicySequence klp = kl_fpd_solve(vp);
      out << "kl_objective: " << format_double(objective_auto(vp, klp)) << "\n";
      out << "kl_distance: " << format_double(policy_distance(res.policy, klp)) << "\n";
    }
    return static_cast<int>(kOk);
  });
}

inline int cmd_sweep(const std::string& path, const SolverFlags& flags,
                     const std::optional<std::string>& omega_list,
                     const std::optional<std::string>& r_list, const std::string& out_dir,
                     bool timing, std::ostream& out, std::ostream& err) {
  std::vector<double> omegas;
  std::vector<double> rs;
  try {
    if (omega_list) omegas = detail::parse_list(*omega_list, "--omega-list");
    if (r_list) rs = detail::parse_list(*r_list, "--r-list");
  } catch (const CLI::Error& e) {
    err << e.what() << "\n";
    return kUsage;
  }
  if ((!omega_list && !r_list) || (omega_list && omegas.empty()) || (r_list && rs.empty())) {
    err << "sweep needs a non-empty --omega-list and/or --r-list\n";
    return kUsage;
  }
  return detail::guarded(err, [&] {
    const ProblemSpec base = load_problem(path);
    const IterationConfig base_cfg = base.solver.value_or(IterationConfig{});
    if (omegas.empty()) omegas.push_back(flags.omega.value_or(base_cfg.omega));
    if (rs.empty()) rs.push_back(base.r);
    std::filesystem::create_directories(out_dir);

    std::string summary = "r,omega,iterations,converged,final_residual,objective\n";
    int status = kOk;
    for (double r : rs) {
      for (double omega : omegas) {
        const std::string name = "r_" + format_double(r) + "_omega_" + format_double(omega);
        SolverFlags f = flags;
        f.omega = omega;
        std::ostringstream sink;
        bool row_written = false;
        const int code = detail::guarded(sink, [&] {
          ProblemSpec spec = base;
          spec.r = r;
          const IterationConfig cfg = detail::resolve_config(spec, f);
          const ValidatedProblem vp = validate(spec);
          const PolicySequence start = detail::resolve_start(vp, cfg, f);
          const SolveSummary s =
              run_solve(vp, cfg, start, path, std::filesystem::path(out_dir) / name, timing);
          const IterationReport& rep = s.result.report;
          summary += format_double(r) + "," + format_double(omega) + "," +
                     std::to_string(rep.iterations) + ",";
          if (rep.termination == Termination::kError) {
            summary += "error,,\n";
          } else {
            summary += std::string(rep.termination == Termination::kConverged ? "true" : "false") +
                       "," +
                       (std::isfinite(rep.final_residual) ? format_double(rep.final_residual)
                                                          : std::string()) +
                       "," + (rep.objectives.empty() ? std::string()
                                                     : format_double(rep.objectives.back())) +
                       "\n";
          }
          row_written = true;
          return s.exit_status;
        });
        if (!row_written) {
          summary += format_double(r) + "," + format_double(omega) + ",,error,,\n";
        }
        if (code != kOk) {
          err << name << ": exit " << code;
          const std::string msg = sink.str();
          if (!msg.empty()) err << ": " << msg;
          if (msg.empty() || msg.back() != '\n') err << "\n";
          if (status == kOk) status = code;
        }
        out << name << ": exit " << code << "\n";
      }
    }
    tsallis_fpd::detail::write_file(std::filesystem::path(out_dir) / kSweepSummaryFile, summary);
    out << "summary: " << (std::filesystem::path(out_dir) / kSweepSummaryFile).string() << "\n";
    return status;
  });
}

// Parses argv and dispatches. Never throws.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Finite-horizon fully probabilistic design with Tsallis divergence"};
  app.require_subcommand(1);

  std::string problem;
  SolverFlags flags;
  std::string out_dir = "tsallis_fpd_out";
  bool timing = false;
  std::optional<double> grid_step;
  bool kl = false;
  std::optional<std::string> omega_list;
  std::optional<std::string> r_list;

  auto add_solver_flags = [&](CLI::App* c) {
    c->add_option("--omega", flags.omega, "relaxation weight in (0, 1]");
    c->add_option("--tol", flags.tol, "sup-L1 stopping threshold");
    c->add_option("--max-iter", flags.max_iter, "outer iteration limit");
    c->add_option("--init", flags.init, "initial iterate: reference, uniform or custom");
    c->add_option("--init-file", flags.init_file, "policy JSON used as the initial iterate");
    c->add_option("--seed", flags.seed, "seed recorded in the run configuration");
  };

  auto* validate_cmd = app.add_subcommand("validate", "check a problem file");
  validate_cmd->add_option("problem", problem, "problem JSON")->required();

  auto* solve_cmd = app.add_subcommand("solve", "run the fixed-point iteration");
  solve_cmd->add_option("problem", problem, "problem JSON")->required();
  add_solver_flags(solve_cmd);
  solve_cmd->add_option("--out-dir", out_dir, "output directory");
  solve_cmd->add_flag("--timing", timing, "record wall-clock times in the outputs");

  auto* compare_cmd = app.add_subcommand("compare", "compare against the oracles");
  compare_cmd->add_option("problem", problem, "problem JSON")->required();
  add_solver_flags(compare_cmd);
  compare_cmd->add_option("--grid-step", grid_step, "brute-force simplex grid step");
  compare_cmd->add_flag("--kl", kl, "report the distance to the KL-FPD policy");

  auto* sweep_cmd = app.add_subcommand("sweep", "solve over lists of r and omega");
  sweep_cmd->add_option("problem", problem, "problem JSON")->required();
  add_solver_flags(sweep_cmd);
  sweep_cmd->add_option("--omega-list", omega_list, "comma-separated omega values");
  sweep_cmd->add_option("--r-list", r_list, "comma-separated r values");
  sweep_cmd->add_option("--out-dir", out_dir, "output directory");
  sweep_cmd->add_flag("--timing", timing, "record wall-clock times in the outputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return kUsage;
  }

  if (*validate_cmd) return cmd_validate(problem, out, err);
  if (*solve_cmd) return cmd_solve(problem, flags, out_dir, timing, out, err);
  if (*compare_cmd) return cmd_compare(problem, flags, grid_step, kl, out, err);
  if (*sweep_cmd) {
    return cmd_sweep(problem, flags, omega_list, r_list, out_dir, timing, out, err);
  }
  return kUsage;
}

}  // namespace tsallis_fpd::cli
