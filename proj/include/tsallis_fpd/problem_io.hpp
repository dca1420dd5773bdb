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

// JSON problem and policy files, CSV diagnostics.
//
// Problem layout (stage keys are 1-based strings, inner keys are labels):
//
//   {
//     "r": 2.0, "horizon": 2,
//     "states": ["lo", "hi"], "actions": ["wait", "act"],
//     "prior": [0.5, 0.5], "ref_prior": [0.5, 0.5],
//     "plant":      {"1": {"lo": {"wait": [0.9, 0.1], "act": [...]}, ...}, ...},
//     "ref_plant":  same shape as plant,
//     "ref_policy": {"1": {"lo": [0.5, 0.5], "hi": [...]}, ...},
//     "costs":      {"1": {"lo": 0.0, "hi": 1.0}, ...},
//     "solver": {"omega": 0.4, "tol": 1e-10, "max_outer": 10000,
//                "init_mode": "reference", "seed": 0, "init_policy": {...}}
//   }
//
// Every floating-point number is written with 17 significant digits, which
// makes load(save(x)) == x exact.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tsallis_fpd/errors.hpp"
#include "tsallis_fpd/fixed_point.hpp"
#include "tsallis_fpd/pmf.hpp"
#include "tsallis_fpd/problem.hpp"

namespace tsallis_fpd {

using Json = nlohmann::ordered_json;

// Shortest locale-independent decimal that reads back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline bool is_flat(const Json& j) {
  for (const auto& e : j) {
    if (e.is_array() || e.is_object()) return false;
  }
  return true;
}

inline void write_scalar(std::ostream& os, const Json& j) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::isfinite(v)) {
      os << format_double(v);
    } else {
      os << "null";
    }
  } else {
    os << j.dump();
  }
}

// Indented output with flat arrays kept on one line.
inline void write_json(std::ostream& os, const Json& j, int indent = 0) {
  const std::string pad(static_cast<std::size_t>(indent) + 2, ' ');
  const std::string close(static_cast<std::size_t>(indent), ' ');
  if (j.is_object()) {
    if (j.empty()) {
      os << "{}";
      return;
    }
    os << "{\n";
    bool first = true;
    for (const auto& [key, value] : j.items()) {
      if (!first) os << ",\n";
      first = false;
      os << pad << Json(key).dump() << ": ";
      write_json(os, value, indent + 2);
    }
    os << "\n" << close << "}";
  } else if (j.is_array()) {
    if (is_flat(j)) {
      os << "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ", ";
        write_scalar(os, j[i]);
      }
      os << "]";
      return;
    }
    os << "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) os << ",\n";
      os << pad;
      write_json(os, j[i], indent + 2);
    }
    os << "\n" << close << "]";
  } else {
    write_scalar(os, j);
  }
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
  return text;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline Json parse_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    std::size_t line = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    for (std::size_t i = 0; i + 1 < upto; ++i) {
      if (text[i] == '\n') ++line;
    }
    std::string msg = e.what();
    // Drop nlohmann's "[json.exception.parse_error.101] " prefix.
    if (const auto p = msg.find("] "); p != std::string::npos) msg = msg.substr(p + 2);
    throw ParseError(msg, line);
  }
}

// Typed field access with the JSON path in every error.
class Reader {
 public:
  static const Json& member(const Json& j, const std::string& key, const std::string& path) {
    if (!j.is_object()) throw ParseError("expected an object", 0, path);
    const auto it = j.find(key);
    if (it == j.end()) throw ParseError("missing field '" + key + "'", 0, path);
    return *it;
  }

  static double number(const Json& j, const std::string& path) {
    if (!j.is_number()) throw ParseError("expected a number", 0, path);
    return j.get<double>();
  }

  static std::int64_t integer(const Json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ParseError("expected an integer", 0, path);
    return j.get<std::int64_t>();
  }

  static std::string string(const Json& j, const std::string& path) {
    if (!j.is_string()) throw ParseError("expected a string", 0, path);
    return j.get<std::string>();
  }

  static std::vector<double> row(const Json& j, const std::string& path) {
    if (!j.is_array()) throw ParseError("expected an array of numbers", 0, path);
    std::vector<double> out;
    out.reserve(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
      out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

  static std::vector<std::string> labels(const Json& j, const std::string& path) {
    if (!j.is_array()) throw ParseError("expected an array of labels", 0, path);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
      out.push_back(string(j[i], path + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

  // Stage map {"1": ..., "N": ...}; every key 1..N required, no others.
  static std::vector<const Json*> stages(const Json& j, std::size_t horizon,
                                         const std::string& path) {
    if (!j.is_object()) throw ParseError("expected an object keyed by stage", 0, path);
    std::vector<const Json*> out;
    for (std::size_t k = 1; k <= horizon; ++k) {
      out.push_back(&member(j, std::to_string(k), path));
    }
    if (j.size() != horizon) {
      throw ParseError("stage keys must be exactly 1.." + std::to_string(horizon), 0, path);
    }
    return out;
  }

  static void exact_keys(const Json& j, const std::vector<std::string>& labels,
                         const std::string& path) {
    if (!j.is_object()) throw ParseError("expected an object keyed by label", 0, path);
    for (const auto& l : labels) member(j, l, path);
    if (j.size() != labels.size()) throw ParseError("unknown label key", 0, path);
  }
};

// ref_policy-shaped table: {state: row over actions}.
inline ConditionalPmf policy_table(const Json& j, const std::vector<std::string>& states,
                                   const std::vector<std::string>& actions,
                                   const std::string& path) {
  Reader::exact_keys(j, states, path);
  std::vector<std::vector<double>> rows;
  for (const auto& s : states) rows.push_back(Reader::row(j.at(s), path + "." + s));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != actions.size()) {
      throw ParseError("row has " + std::to_string(rows[i].size()) + " entries, expected " +
                           std::to_string(actions.size()),
                       0, path + "." + states[i]);
    }
  }
  return ConditionalPmf::from_rows(rows);
}

// plant-shaped table: {state: {action: row over states}}, rows ordered x*m+u.
inline ConditionalPmf plant_table(const Json& j, const std::vector<std::string>& states,
                                  const std::vector<std::string>& actions,
                                  const std::string& path) {
  Reader::exact_keys(j, states, path);
  std::vector<std::vector<double>> rows;
  for (const auto& s : states) {
    const Json& by_action = j.at(s);
    Reader::exact_keys(by_action, actions, path + "." + s);
    for (const auto& a : actions) {
      const std::string p = path + "." + s + "." + a;
      rows.push_back(Reader::row(by_action.at(a), p));
      if (rows.back().size() != states.size()) {
        throw ParseError("row has " + std::to_string(rows.back().size()) +
                             " entries, expected " + std::to_string(states.size()),
                         0, p);
      }
    }
  }
  return ConditionalPmf::from_rows(rows);
}

inline PolicySequence policy_stages(const Json& j, std::size_t horizon,
                                    const std::vector<std::string>& states,
                                    const std::vector<std::string>& actions,
                                    const std::string& path) {
  PolicySequence p;
  const auto st = Reader::stages(j, horizon, path);
  for (std::size_t k = 0; k < st.size(); ++k) {
    p.stages.push_back(policy_table(*st[k], states, actions, path + "." + std::to_string(k + 1)));
  }
  return p;
}

inline Json policy_json(const PolicySequence& p, const std::vector<std::string>& states) {
  Json out = Json::object();
  for (std::size_t k = 1; k <= p.horizon(); ++k) {
    Json stage = Json::object();
    for (std::size_t x = 0; x < states.size(); ++x) {
      const auto row = p.stage(k).row(x);
      stage[states[x]] = std::vector<double>(row.begin(), row.end());
    }
    out[std::to_string(k)] = std::move(stage);
  }
  return out;
}

inline Json plant_json(const std::vector<ConditionalPmf>& tables,
                       const std::vector<std::string>& states,
                       const std::vector<std::string>& actions) {
  Json out = Json::object();
  for (std::size_t k = 0; k < tables.size(); ++k) {
    Json stage = Json::object();
    for (std::size_t x = 0; x < states.size(); ++x) {
      Json by_action = Json::object();
      for (std::size_t u = 0; u < actions.size(); ++u) {
        const auto row = tables[k].row(x * actions.size() + u);
        by_action[actions[u]] = std::vector<double>(row.begin(), row.end());
      }
      stage[states[x]] = std::move(by_action);
    }
    out[std::to_string(k + 1)] = std::move(stage);
  }
  return out;
}

}  // namespace detail

inline std::string to_json_text(const Json& j) {
  std::ostringstream os;
  detail::write_json(os, j);
  os << "\n";
  return os.str();
}

inline ProblemSpec problem_from_json(const Json& j) {
  using detail::Reader;
  ProblemSpec s;
  s.r = Reader::number(Reader::member(j, "r", "$"), "r");
  const auto horizon = Reader::integer(Reader::member(j, "horizon", "$"), "horizon");
  if (horizon < 1) throw ParseError("horizon must be a positive integer", 0, "horizon");
  s.horizon = static_cast<int>(horizon);
  s.states = Reader::labels(Reader::member(j, "states", "$"), "states");
  s.actions = Reader::labels(Reader::member(j, "actions", "$"), "actions");
  s.prior = Pmf(Reader::row(Reader::member(j, "prior", "$"), "prior"));
  s.ref_prior = Pmf(Reader::row(Reader::member(j, "ref_prior", "$"), "ref_prior"));
  const auto n_stages = static_cast<std::size_t>(horizon);

  for (const char* field : {"plant", "ref_plant"}) {
    auto& dst = std::string(field) == "plant" ? s.plant : s.ref_plant;
    const auto st = Reader::stages(Reader::member(j, field, "$"), n_stages, field);
    for (std::size_t k = 0; k < st.size(); ++k) {
      dst.push_back(detail::plant_table(*st[k], s.states, s.actions,
                                        std::string(field) + "." + std::to_string(k + 1)));
    }
  }
  {
    const auto st = Reader::stages(Reader::member(j, "ref_policy", "$"), n_stages, "ref_policy");
    for (std::size_t k = 0; k < st.size(); ++k) {
      s.ref_policy.push_back(detail::policy_table(*st[k], s.states, s.actions,
                                                  "ref_policy." + std::to_string(k + 1)));
    }
  }
  {
    const auto st = Reader::stages(Reader::member(j, "costs", "$"), n_stages, "costs");
    for (std::size_t k = 0; k < st.size(); ++k) {
      const std::string path = "costs." + std::to_string(k + 1);
      Reader::exact_keys(*st[k], s.states, path);
      std::vector<double> c;
      for (const auto& label : s.states) {
        const Json& v = st[k]->at(label);
        if (v.is_array() || v.is_object()) {
          throw ParseError("costs depend on the state only; action-dependent costs are not "
                           "supported",
                           0, path + "." + label);
        }
        c.push_back(Reader::number(v, path + "." + label));
      }
      s.costs.push_back(std::move(c));
    }
  }

  if (const auto it = j.find("solver"); it != j.end()) {
    const Json& sv = *it;
    if (!sv.is_object()) throw ParseError("expected an object", 0, "solver");
    IterationConfig cfg;
    if (sv.contains("omega")) cfg.omega = Reader::number(sv.at("omega"), "solver.omega");
    if (sv.contains("tol")) cfg.tol = Reader::number(sv.at("tol"), "solver.tol");
    if (sv.contains("max_outer")) {
      cfg.max_outer = static_cast<int>(Reader::integer(sv.at("max_outer"), "solver.max_outer"));
    }
    if (sv.contains("init_mode")) {
      const auto mode = parse_init_mode(Reader::string(sv.at("init_mode"), "solver.init_mode"));
      if (!mode) {
        throw ParseError("init_mode must be reference, uniform or custom", 0, "solver.init_mode");
      }
      cfg.init_mode = *mode;
    }
    if (sv.contains("seed")) {
      const auto seed = Reader::integer(sv.at("seed"), "solver.seed");
      if (seed < 0) throw ParseError("seed must be nonnegative", 0, "solver.seed");
      cfg.rng_seed = static_cast<std::uint64_t>(seed);
    }
    if (sv.contains("init_policy")) {
      s.init_policy = detail::policy_stages(sv.at("init_policy"), n_stages, s.states,
                                            s.actions, "solver.init_policy");
    }
    s.solver = cfg;
  }
  return s;
}

inline Json problem_to_json(const ProblemSpec& s) {
  Json j = Json::object();
  j["r"] = s.r;
  j["horizon"] = s.horizon;
  j["states"] = s.states;
  j["actions"] = s.actions;
  j["prior"] = std::vector<double>(s.prior.weights().begin(), s.prior.weights().end());
  j["ref_prior"] =
      std::vector<double>(s.ref_prior.weights().begin(), s.ref_prior.weights().end());
  j["plant"] = detail::plant_json(s.plant, s.states, s.actions);
  j["ref_plant"] = detail::plant_json(s.ref_plant, s.states, s.actions);
  j["ref_policy"] = detail::policy_json(PolicySequence{s.ref_policy}, s.states);
  Json costs = Json::object();
  for (std::size_t k = 0; k < s.costs.size(); ++k) {
    Json stage = Json::object();
    for (std::size_t x = 0; x < s.states.size() && x < s.costs[k].size(); ++x) {
      stage[s.states[x]] = s.costs[k][x];
    }
    costs[std::to_string(k + 1)] = std::move(stage);
  }
  j["costs"] = std::move(costs);
  if (s.solver) {
    Json sv = Json::object();
    sv["omega"] = s.solver->omega;
    sv["tol"] = s.solver->tol;
    sv["max_outer"] = s.solver->max_outer;
    sv["init_mode"] = to_string(s.solver->init_mode);
    sv["seed"] = s.solver->rng_seed;
    if (s.init_policy) sv["init_policy"] = detail::policy_json(*s.init_policy, s.states);
    j["solver"] = std::move(sv);
  }
  return j;
}

inline ProblemSpec load_problem(const std::filesystem::path& path) {
  return problem_from_json(detail::parse_text(detail::read_file(path)));
}

inline void save_problem(const std::filesystem::path& path, const ProblemSpec& spec) {
  detail::write_file(path, to_json_text(problem_to_json(spec)));
}

// Policy document: labels, the stage tables and a summary of the run.
inline Json policy_document(const ProblemSpec& spec, const PolicySequence& policy,
                            const IterationReport& report) {
  Json j = Json::object();
  j["horizon"] = spec.horizon;
  j["states"] = spec.states;
  j["actions"] = spec.actions;
  j["policy"] = detail::policy_json(policy, spec.states);
  Json rep = Json::object();
  rep["iterations"] = report.iterations;
  rep["termination"] = to_string(report.termination);
  rep["last_delta"] = report.deltas.empty() ? std::numeric_limits<double>::quiet_NaN()
                                            : report.deltas.back();
  rep["objective"] = report.objectives.empty() ? std::numeric_limits<double>::quiet_NaN()
                                               : report.objectives.back();
  rep["final_residual"] = report.final_residual;
  if (!report.error_message.empty()) rep["error"] = report.error_message;
  j["report"] = std::move(rep);
  return j;
}

inline void save_policy(const std::filesystem::path& path, const ProblemSpec& spec,
                        const PolicySequence& policy, const IterationReport& report) {
  detail::write_file(path, to_json_text(policy_document(spec, policy, report)));
}

// Reads the "policy" member of a policy document written by save_policy.
inline PolicySequence load_policy(const std::filesystem::path& path, const ProblemSpec& spec) {
  const Json j = detail::parse_text(detail::read_file(path));
  const Json& tables = detail::Reader::member(j, "policy", "$");
  return detail::policy_stages(tables, static_cast<std::size_t>(spec.horizon), spec.states,
                               spec.actions, "policy");
}

inline constexpr const char* kDiagnosticsHeader =
    "iter,sup_l1_delta,objective,contraction_ratio,wallclock_ms";

// One row per outer iteration. Undefined ratios are left empty. Wall-clock
// times are written as 0 unless include_timing is set, which keeps repeated
// runs byte-identical.
inline std::string diagnostics_csv(const IterationReport& report, bool include_timing) {
  std::string out = std::string(kDiagnosticsHeader) + "\n";
  for (std::size_t i = 0; i < report.deltas.size(); ++i) {
    out += std::to_string(i + 1);
    out += ',';
    out += format_double(report.deltas[i]);
    out += ',';
    if (i < report.objectives.size()) out += format_double(report.objectives[i]);
    out += ',';
    if (i < report.contraction_ratios.size() && std::isfinite(report.contraction_ratios[i])) {
      out += format_double(report.contraction_ratios[i]);
    }
    out += ',';
    out += include_timing && i < report.wallclock_ms.size()
               ? format_double(report.wallclock_ms[i])
               : std::string("0");
    out += '\n';
  }
  return out;
}

}  // namespace tsallis_fpd
