// Copyright 2026 The drgne Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DRGNE_IO_HPP_
#define DRGNE_IO_HPP_

// JSON and CSV serialization. Problem files look like
//
//   {"agents": [{"Q": [[2]], "p0": [0], "P": [[0.5]], "rho": [0], "r0": 0,
//                "H": [[1]], "g": [1], "lower": [-1], "upper": [1]}, ...],
//    "drcc": {"A": [[1, 1]], "beta": [[-1]], "b": [3], "epsilon": 0.1,
//             "theta": 0.05, "norm": "l2", "samples": [[0.1], [-0.2]]}}
//
// with matrices as arrays of rows. Reports print floats with 9 significant
// digits.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "drgne/equilibrium_solver.hpp"
#include "drgne/ev_case_study.hpp"
#include "drgne/game_model.hpp"
#include "drgne/types.hpp"
#include "drgne/wasserstein_drcc.hpp"

namespace drgne {

using Json = nlohmann::json;

// Malformed input file. The message names the line or the offending field.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace io_detail {

inline double read_number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where + ": expected a number");
  return j.get<double>();
}

inline Vector read_vector(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k)
    v(static_cast<Eigen::Index>(k)) =
        read_number(j[k], where + "[" + std::to_string(k) + "]");
  return v;
}

// Rows of a matrix; `cols` fixes the width used when there are no rows.
inline Matrix read_matrix(const Json& j, const std::string& where,
                          Eigen::Index cols = -1) {
  if (!j.is_array()) throw ParseError(where + ": expected an array of rows");
  if (j.empty()) return Matrix(0, cols < 0 ? 0 : cols);
  const Eigen::Index r = static_cast<Eigen::Index>(j.size());
  Eigen::Index c = -1;
  Matrix m;
  for (Eigen::Index row = 0; row < r; ++row) {
    const std::string at = where + "[" + std::to_string(row) + "]";
    const Vector v = read_vector(j[static_cast<std::size_t>(row)], at);
    if (c < 0) {
      c = v.size();
      m.resize(r, c);
    } else if (v.size() != c) {
      throw ParseError(at + ": row has " + std::to_string(v.size()) +
                       " entries, expected " + std::to_string(c));
    }
    m.row(row) = v.transpose();
  }
  return m;
}

inline const Json& field(const Json& obj, const char* key,
                         const std::string& where) {
  if (!obj.is_object()) throw ParseError(where + ": expected an object");
  const auto it = obj.find(key);
  if (it == obj.end())
    throw ParseError(where + ": missing field '" + std::string(key) + "'");
  return *it;
}

inline Json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

inline Json vec(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(num(v(k)));
  return a;
}

inline Json mat(const Matrix& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec(m.row(r).transpose()));
  return a;
}

inline std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace io_detail

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  std::string s = buf;
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s;
}

namespace io_detail {

inline void write_json(std::string& out, const Json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case Json::value_t::number_float:
      out += std::isfinite(j.get<double>()) ? format_number(j.get<double>())
                                            : std::string("null");
      return;
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t k = 0; k < j.size(); ++k) {
        out += pad;
        write_json(out, j[k], indent, depth + 1);
        out += k + 1 < j.size() ? ",\n" : "\n";
      }
      out += close + "]";
      return;
    }
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      std::size_t k = 0;
      for (auto it = j.begin(); it != j.end(); ++it, ++k) {
        out += pad + Json(it.key()).dump() + ": ";
        write_json(out, it.value(), indent, depth + 1);
        out += k + 1 < j.size() ? ",\n" : "\n";
      }
      out += close + "}";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace io_detail

// Pretty-printed JSON with every float at 9 significant digits.
inline std::string to_text(const Json& j, int indent = 2) {
  std::string out;
  io_detail::write_json(out, j, indent, 0);
  return out + "\n";
}

inline Json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(source + ": " + io_detail::line_column(text, e.byte) +
                     ": invalid JSON");
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Builds a problem from parsed JSON. The samples field may be omitted when
// samples are supplied separately; validation is left to the caller.
inline GnepProblem problem_from_json(const Json& root, bool samples_required = true) {
  using namespace io_detail;
  GnepProblem g;
  const Json& agents = field(root, "agents", "problem");
  if (!agents.is_array() || agents.empty())
    throw ParseError("agents: expected a non-empty array");
  std::vector<Eigen::Index> dims;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const std::string at = "agents[" + std::to_string(i) + "]";
    const Json& a = agents[i];
    AgentSpec s;
    s.Q = read_matrix(field(a, "Q", at), at + ".Q");
    s.p0 = read_vector(field(a, "p0", at), at + ".p0");
    s.lower = read_vector(field(a, "lower", at), at + ".lower");
    s.upper = read_vector(field(a, "upper", at), at + ".upper");
    const Eigen::Index d = s.p0.size();
    s.H = a.contains("H") ? read_matrix(a["H"], at + ".H", d) : Matrix(0, d);
    s.g = a.contains("g") ? read_vector(a["g"], at + ".g") : Vector(0);
    s.r0 = a.contains("r0") ? read_number(a["r0"], at + ".r0") : 0.0;
    if (a.contains("P")) s.P = read_matrix(a["P"], at + ".P");
    if (a.contains("rho")) s.rho = read_vector(a["rho"], at + ".rho");
    dims.push_back(d);
    g.agents.push_back(std::move(s));
  }
  Eigen::Index n = 0;
  for (Eigen::Index d : dims) n += d;
  for (std::size_t i = 0; i < g.agents.size(); ++i) {
    AgentSpec& s = g.agents[i];
    const Eigen::Index r = n - dims[i];
    if (s.P.size() == 0) s.P = Matrix::Zero(dims[i], r);
    if (s.rho.size() == 0) s.rho = Vector::Zero(r);
  }
  const Json& d = field(root, "drcc", "problem");
  DrccSpec& c = g.drcc;
  c.A = read_matrix(field(d, "A", "drcc"), "drcc.A");
  c.beta = read_matrix(field(d, "beta", "drcc"), "drcc.beta");
  c.b = read_vector(field(d, "b", "drcc"), "drcc.b");
  c.epsilon = read_number(field(d, "epsilon", "drcc"), "drcc.epsilon");
  c.theta = read_number(field(d, "theta", "drcc"), "drcc.theta");
  if (d.contains("norm")) {
    if (!d["norm"].is_string()) throw ParseError("drcc.norm: expected a string");
    try {
      c.norm = parse_norm(d["norm"].get<std::string>());
    } catch (const InvalidProblem& e) {
      throw ParseError(std::string("drcc.norm: ") + e.what());
    }
  }
  if (d.contains("samples")) {
    c.samples.xi = read_matrix(d["samples"], "drcc.samples");
  } else if (samples_required) {
    throw ParseError("drcc: missing field 'samples'");
  }
  return g;
}

inline Json problem_to_json(const GnepProblem& g) {
  using namespace io_detail;
  Json agents = Json::array();
  for (const AgentSpec& a : g.agents) {
    agents.push_back({{"Q", mat(a.Q)},
                      {"p0", vec(a.p0)},
                      {"P", mat(a.P)},
                      {"rho", vec(a.rho)},
                      {"r0", num(a.r0)},
                      {"H", mat(a.H)},
                      {"g", vec(a.g)},
                      {"lower", vec(a.lower)},
                      {"upper", vec(a.upper)}});
  }
  const DrccSpec& c = g.drcc;
  return {{"agents", agents},
          {"drcc",
           {{"A", mat(c.A)},
            {"beta", mat(c.beta)},
            {"b", vec(c.b)},
            {"epsilon", num(c.epsilon)},
            {"theta", num(c.theta)},
            {"norm", norm_name(c.norm)},
            {"samples", mat(c.samples.xi)}}}};
}

inline GnepProblem load_problem(const std::string& path, bool samples_required = true) {
  const std::string text = read_file(path);
  const Json root = parse_json_text(text, path);
  try {
    return problem_from_json(root, samples_required);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline SampleSet load_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  try {
    return parse_samples(in);
  } catch (const std::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

// Profile stored under "x" (solve reports qualify).
inline Vector load_point(const std::string& path) {
  const std::string text = read_file(path);
  const Json root = parse_json_text(text, path);
  try {
    return io_detail::read_vector(io_detail::field(root, "x", "point"), "x");
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline Json aux_to_json(const AuxiliaryVars& aux) {
  using namespace io_detail;
  return {{"tau_prime", num(aux.tau_prime)},
          {"s_prime", vec(aux.s_prime)},
          {"q", vec(aux.q)}};
}

inline Json result_to_json(const EquilibriumResult& r) {
  using namespace io_detail;
  Json nodes = Json::array();
  for (const NodeLog& n : r.nodes)
    nodes.push_back({{"q", vec(n.q)},
                     {"feasible", n.feasible},
                     {"best_value", num(n.best_value)},
                     {"starts_used", n.starts_used}});
  return {{"status", status_name(r.status)},
          {"residual", num(r.residual)},
          {"x", vec(r.x_star)},
          {"aux", aux_to_json(r.aux_star)},
          {"gaps", r.gaps.empty() ? Json::array()
                                  : vec(Eigen::Map<const Vector>(
                                        r.gaps.data(),
                                        static_cast<Eigen::Index>(r.gaps.size())))},
          {"closed", r.closed},
          {"message", r.message},
          {"per_node", nodes},
          {"wall_ms", num(r.wall_ms)}};
}

inline Json certify_to_json(const CertifyReport& c) {
  using namespace io_detail;
  Json local = Json::array();
  for (const FeasibilityReport& f : c.local) {
    Json v = Json::array();
    for (const Violation& w : f.violations)
      v.push_back({{"kind", w.kind}, {"index", w.index}, {"magnitude", num(w.magnitude)}});
    local.push_back({{"feasible", f.feasible}, {"violations", v}});
  }
  Json gaps = Json::array();
  for (double gap : c.residual.gaps) gaps.push_back(num(gap));
  return {{"certified", c.certified},
          {"local_ok", c.local_ok},
          {"local", local},
          {"drcc_ok", c.drcc_ok},
          {"distance_mass", num(c.mass)},
          {"required_mass", num(c.required)},
          {"residual", c.residual_evaluated ? num(c.residual.value) : Json(nullptr)},
          {"gaps", gaps},
          {"reason", c.reason}};
}

inline Json table1_to_json(const Table1Report& t) {
  using namespace io_detail;
  Json rows = Json::array();
  for (const Table1Row& r : t.rows) {
    rows.push_back({{"parameter", r.parameter},
                    {"value", num(r.value)},
                    {"theta", num(r.theta)},
                    {"theta_tuned", r.theta_tuned},
                    {"status", status_name(r.result.status)},
                    {"residual", num(r.result.residual)},
                    {"prices", vec(r.result.x_star)},
                    {"closed_form", r.closed_form ? vec(*r.closed_form) : Json(nullptr)},
                    {"wall_ms", num(r.result.wall_ms)}});
  }
  return {{"rows", rows}};
}

inline Json validation_to_json(const std::vector<ValidationRow>& v) {
  using namespace io_detail;
  Json rows = Json::array();
  for (const ValidationRow& r : v) {
    Json row = {{"parameter", r.parameter},
                {"value", num(r.value)},
                {"epsilon", num(r.epsilon)},
                {"theta", num(r.theta)},
                {"status", status_name(r.status)},
                {"prices", vec(r.prices)},
                {"within_bound", r.within_bound}};
    if (r.violation) {
      row["violation"] = {{"estimate", num(r.violation->estimate)},
                          {"ci_lower", num(r.violation->ci_lower)},
                          {"ci_upper", num(r.violation->ci_upper)},
                          {"standard_error", num(r.violation->standard_error)},
                          {"draws", r.violation->draws}};
    } else {
      row["violation"] = nullptr;
    }
    rows.push_back(row);
  }
  return {{"rows", rows}};
}

inline std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::string out = "I,price,residual,status,wall_ms\n";
  for (const SweepRow& r : rows)
    out += std::to_string(r.I) + "," + format_number(r.price) + "," +
           format_number(r.residual) + "," + status_name(r.status) + "," +
           format_number(r.wall_ms) + "\n";
  return out;
}

}  // namespace drgne

#endif  // DRGNE_IO_HPP_
