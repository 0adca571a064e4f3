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

#ifndef DRGNE_GAME_MODEL_HPP_
#define DRGNE_GAME_MODEL_HPP_

// Quadratic games with polyhedral local strategy sets and one shared
// distributionally robust chance constraint.
//
// Agent i minimizes
//   J_i(x_i, x_-i) = 1/2 x_i' Q x_i + (p0 + P x_-i)' x_i + r0 + rho' x_-i
// over {y : H y <= g, lower <= y <= upper}, where x_-i is the profile with
// block i removed (remaining blocks in increasing agent order).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "drgne/qp.hpp"
#include "drgne/types.hpp"
#include "drgne/wasserstein_drcc.hpp"

namespace drgne {

struct AgentSpec {
  Matrix Q;
  Vector p0;
  Matrix P;  // n_i x n_-i
  Vector rho;
  double r0 = 0.0;
  Matrix H;  // m_i x n_i, possibly zero rows
  Vector g;
  Vector lower;
  Vector upper;

  Eigen::Index dim() const { return p0.size(); }
};

struct Box {
  Vector lower;
  Vector upper;
};

class GnepProblem {
 public:
  std::vector<AgentSpec> agents;
  DrccSpec drcc;

  std::size_t num_agents() const { return agents.size(); }
  Eigen::Index dim(std::size_t i) const { return agents.at(i).dim(); }

  Eigen::Index total_dim() const {
    Eigen::Index n = 0;
    for (const auto& a : agents) n += a.dim();
    return n;
  }

  // First global column of agent i's block.
  Eigen::Index offset(std::size_t i) const {
    require(i < agents.size(), "agent index out of range");
    Eigen::Index off = 0;
    for (std::size_t j = 0; j < i; ++j) off += agents[j].dim();
    return off;
  }

  Vector block(const Vector& x, std::size_t i) const {
    check_profile(x);
    return x.segment(offset(i), dim(i));
  }

  Vector rivals(const Vector& x, std::size_t i) const {
    check_profile(x);
    const Eigen::Index off = offset(i), ni = dim(i);
    Vector out(x.size() - ni);
    out.head(off) = x.head(off);
    out.tail(x.size() - off - ni) = x.tail(x.size() - off - ni);
    return out;
  }

  // Profile x with block i replaced by y.
  Vector with_block(const Vector& x, std::size_t i, const Vector& y) const {
    check_profile(x);
    require(y.size() == dim(i), "block size mismatch");
    Vector out = x;
    out.segment(offset(i), dim(i)) = y;
    return out;
  }

  // Columns of the shared constraint matrix belonging to agent i.
  Matrix drcc_block(std::size_t i) const {
    return drcc.A.middleCols(offset(i), dim(i));
  }

  void check_profile(const Vector& x) const {
    require(x.size() == total_dim(),
            "profile has " + std::to_string(x.size()) + " entries, expected " +
                std::to_string(total_dim()));
  }

  // Throws DimensionError / InvalidProblem / NotPositiveDefinite.
  void validate() const {
    if (agents.empty()) throw InvalidProblem("problem has no agents");
    const Eigen::Index n = total_dim();
    for (std::size_t i = 0; i < agents.size(); ++i) {
      const AgentSpec& a = agents[i];
      const std::string who = "agent " + std::to_string(i) + ": ";
      const Eigen::Index ni = a.dim();
      require(ni >= 1, who + "strategy dimension must be positive");
      require(a.Q.rows() == ni && a.Q.cols() == ni, who + "Q must be n_i x n_i");
      require(a.P.rows() == ni && a.P.cols() == n - ni,
              who + "P must be n_i x n_-i");
      require(a.rho.size() == n - ni, who + "rho must have n_-i entries");
      require(a.H.cols() == ni || a.H.rows() == 0, who + "H must have n_i columns");
      require(a.g.size() == a.H.rows(), who + "g must have one entry per H row");
      require(a.lower.size() == ni && a.upper.size() == ni,
              who + "box bounds must have n_i entries");
      if (!a.Q.allFinite() || !a.p0.allFinite() || !a.P.allFinite() ||
          !a.rho.allFinite() || !std::isfinite(a.r0) || !a.H.allFinite() ||
          !a.g.allFinite())
        throw InvalidProblem(who + "non-finite data");
      if (!a.lower.allFinite() || !a.upper.allFinite())
        throw InvalidProblem(who + "box bounds must be finite");
      if ((a.lower.array() > a.upper.array()).any())
        throw InvalidProblem(who + "lower bound exceeds upper bound");
      const double scale = 1.0 + a.Q.cwiseAbs().maxCoeff();
      if ((a.Q - a.Q.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw NotPositiveDefinite(who + "Q is not symmetric");
      Eigen::LLT<Matrix> llt(a.Q);
      if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite(who + "Q is not positive definite");
      if (a.H.rows() > 0) {
        QpProblem probe{Matrix::Identity(ni, ni), Vector::Zero(ni), a.H, a.g,
                        a.lower, a.upper};
        if (!qp_solve(probe).ok())
          throw InvalidProblem(who + "local strategy set is empty");
      }
    }
    drcc.validate(n);
  }
};

inline double eval_objective(const GnepProblem& problem, std::size_t i,
                             const Vector& x) {
  const AgentSpec& a = problem.agents.at(i);
  const Vector xi = problem.block(x, i);
  const Vector xr = problem.rivals(x, i);
  return 0.5 * xi.dot(a.Q * xi) + (a.p0 + a.P * xr).dot(xi) + a.r0 +
         a.rho.dot(xr);
}

// Gradient of J_i with respect to the agent's own block.
inline Vector grad_objective(const GnepProblem& problem, std::size_t i,
                             const Vector& x) {
  const AgentSpec& a = problem.agents.at(i);
  return a.Q * problem.block(x, i) + a.p0 + a.P * problem.rivals(x, i);
}

// Gradient of J_i with respect to the full profile.
inline Vector full_grad_objective(const GnepProblem& problem, std::size_t i,
                                  const Vector& x) {
  const AgentSpec& a = problem.agents.at(i);
  const Vector xi = problem.block(x, i);
  const Vector rival_grad = a.P.transpose() * xi + a.rho;
  const Eigen::Index off = problem.offset(i), ni = a.dim();
  Vector g(x.size());
  g.head(off) = rival_grad.head(off);
  g.segment(off, ni) = grad_objective(problem, i, x);
  g.tail(x.size() - off - ni) = rival_grad.tail(x.size() - off - ni);
  return g;
}

struct Violation {
  std::string kind;  // "row", "lower" or "upper"
  Eigen::Index index = 0;
  double magnitude = 0.0;
};

struct FeasibilityReport {
  bool feasible = true;
  std::vector<Violation> violations;

  double worst() const {
    double w = 0.0;
    for (const auto& v : violations) w = std::max(w, v.magnitude);
    return w;
  }
};

inline FeasibilityReport local_feasible(const AgentSpec& a, const Vector& y,
                                        double tol = kTolFeas) {
  require(y.size() == a.dim(), "local_feasible: block size mismatch");
  FeasibilityReport report;
  for (Eigen::Index r = 0; r < a.H.rows(); ++r) {
    const double excess = a.H.row(r).dot(y) - a.g(r);
    if (excess > tol) report.violations.push_back({"row", r, excess});
  }
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    if (a.lower(j) - y(j) > tol)
      report.violations.push_back({"lower", j, a.lower(j) - y(j)});
    if (y(j) - a.upper(j) > tol)
      report.violations.push_back({"upper", j, y(j) - a.upper(j)});
  }
  report.feasible = report.violations.empty();
  return report;
}

inline FeasibilityReport local_feasible(const GnepProblem& problem,
                                        std::size_t i, const Vector& y,
                                        double tol = kTolFeas) {
  return local_feasible(problem.agents.at(i), y, tol);
}

inline Box box_hull(const GnepProblem& problem) {
  const Eigen::Index n = problem.total_dim();
  Box box{Vector(n), Vector(n)};
  for (std::size_t i = 0; i < problem.num_agents(); ++i) {
    const AgentSpec& a = problem.agents[i];
    require(a.lower.size() == a.dim() && a.upper.size() == a.dim(),
            "box_hull: agent " + std::to_string(i) + " box size mismatch");
    if (!a.lower.allFinite() || !a.upper.allFinite())
      throw InvalidProblem("box_hull: agent " + std::to_string(i) +
                           " has an infinite bound");
    box.lower.segment(problem.offset(i), a.dim()) = a.lower;
    box.upper.segment(problem.offset(i), a.dim()) = a.upper;
  }
  return box;
}

}  // namespace drgne

#endif  // DRGNE_GAME_MODEL_HPP_
