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

#ifndef DRGNE_NI_RESIDUAL_HPP_
#define DRGNE_NI_RESIDUAL_HPP_

// Nikaido-Isoda residual over the canonical relaxation of the shared
// constraint, the per-agent Lagrangian dual and the single-level objective
// that combines them.
//
// For agent i the best response minimizes J_i(y, x_-i) over y in the local set
// and the shared rows A_bar_i y <= g^s_i(x_-i, aux), where
//
//   g^s_i = beta_bar xi + b_bar - sum_{j != i} A_bar_j x_j + M_bar q
//           - tau' e + E_bar s'.
//
// Two readings of the auxiliary block (tau', s', q) are available:
//   kRelaxedFollower  the agent chooses (tau', s', q in [0,1]^K) together with
//                     y, i.e. y ranges over the projection of the relaxed set;
//   kFixedAux         (tau', s', q) is held at a given value.
// The residual is V(x) = sum_i [J_i(x) - J_i(y*_i, x_-i)] >= 0.

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "drgne/game_model.hpp"
#include "drgne/qp.hpp"
#include "drgne/reformulation.hpp"
#include "drgne/types.hpp"

namespace drgne {

enum class InnerProblem { kRelaxedFollower, kFixedAux };

// Multipliers of agent i's stacked constraints. lambda_a covers the local
// rows followed by the upper and the lower box bounds.
struct DualVars {
  Vector lambda_a;
  Vector lambda_s;

  Vector stacked() const {
    Vector out(lambda_a.size() + lambda_s.size());
    out << lambda_a, lambda_s;
    return out;
  }
};

struct StackedAgentSystem {
  Matrix H_star;  // [H; I; -I; A_bar_i]
  Vector g_star;  // [g; upper; -lower; g^s]
};

inline Vector shared_rhs(const GnepProblem& problem, const BigMSystem& sys,
                         std::size_t i, const Vector& x,
                         const AuxiliaryVars& aux) {
  require(aux.s_prime.size() == sys.K && aux.q.size() == sys.K,
          "shared_rhs: auxiliary variable size mismatch");
  // Rival part of A_bar x: full product minus agent i's own contribution.
  const Vector own = sys.A.middleCols(problem.offset(i), problem.dim(i)) *
                     problem.block(x, i);
  const Vector rival_ax = sys.A * x - own;
  Vector g = sys.stacked_rhs;
  for (Eigen::Index k = 0; k < sys.K; ++k) {
    g.segment(k * sys.m, sys.m) -= rival_ax;
    g.segment(k * sys.m, sys.m).array() +=
        sys.M * aux.q(k) - aux.tau_prime + aux.s_prime(k);
  }
  return g;
}

inline StackedAgentSystem stacked_system(const GnepProblem& problem,
                                         const BigMSystem& sys, std::size_t i,
                                         const Vector& x,
                                         const AuxiliaryVars& aux) {
  const AgentSpec& a = problem.agents.at(i);
  const Eigen::Index ni = a.dim(), mi = a.H.rows(), mk = sys.stacked_rows();
  StackedAgentSystem out;
  out.H_star.resize(mi + 2 * ni + mk, ni);
  out.H_star << a.H, Matrix::Identity(ni, ni), -Matrix::Identity(ni, ni),
      sys.A_bar_blocks.at(i);
  out.g_star.resize(out.H_star.rows());
  out.g_star << a.g, a.upper, -a.lower, shared_rhs(problem, sys, i, x, aux);
  return out;
}

struct BestResponse {
  Vector y;
  DualVars lambda;
  double value = 0.0;  // J_i(y, x_-i)
  AuxiliaryVars follower;
  bool shared_rows_active = false;
  double kkt_residual = 0.0;
};

namespace ni_detail {

inline DualVars local_duals(const AgentSpec& a, const QpResult& r,
                            Eigen::Index row_offset, Eigen::Index mk,
                            Eigen::Index shared_offset) {
  DualVars d;
  const Eigen::Index mi = a.H.rows(), ni = a.dim();
  d.lambda_a.resize(mi + 2 * ni);
  d.lambda_a << r.row_multipliers.segment(row_offset, mi),
      r.upper_multipliers.head(ni), r.lower_multipliers.head(ni);
  d.lambda_s = shared_offset >= 0 ? Vector(r.row_multipliers.segment(
                                        shared_offset, mk))
                                  : Vector::Zero(mk);
  return d;
}

[[noreturn]] inline void infeasible(std::size_t i, const QpResult& r,
                                    const std::string& what) {
  throw InfeasibleSubproblem(
      i, r.max_violation,
      "agent " + std::to_string(i) + ": " + what +
          " (max violation " + std::to_string(r.max_violation) + ")");
}

}  // namespace ni_detail

// Best response with the auxiliary block held fixed.
inline BestResponse best_response(const GnepProblem& problem,
                                  const BigMSystem& sys, std::size_t i,
                                  const Vector& x, const AuxiliaryVars& aux) {
  const AgentSpec& a = problem.agents.at(i);
  const Eigen::Index mi = a.H.rows(), mk = sys.stacked_rows();
  QpProblem qp;
  qp.Q = a.Q;
  qp.c = a.p0 + a.P * problem.rivals(x, i);
  qp.rows.resize(mi + mk, a.dim());
  qp.rows << a.H, sys.A_bar_blocks.at(i);
  qp.rhs.resize(mi + mk);
  qp.rhs << a.g, shared_rhs(problem, sys, i, x, aux);
  qp.lower = a.lower;
  qp.upper = a.upper;
  const QpResult r = qp_solve(qp);
  if (!r.ok()) ni_detail::infeasible(i, r, "constrained strategy set is empty");
  BestResponse br;
  br.y = r.x;
  br.lambda = ni_detail::local_duals(a, r, 0, mk, mi);
  br.value = eval_objective(problem, i, problem.with_block(x, i, br.y));
  br.follower = aux;
  br.shared_rows_active = br.lambda.lambda_s.cwiseAbs().maxCoeff() > 0.0;
  br.kkt_residual = r.kkt_residual;
  return br;
}

// System over [y_i | tau' | s' | q] for agent i with rivals fixed at x.
inline LinearSystem agent_joint_system(const GnepProblem& problem,
                                       const BigMSystem& sys, std::size_t i,
                                       const Vector& x) {
  const AgentSpec& a = problem.agents.at(i);
  LinearSystem full = relax_canonical(sys);
  const Eigen::Index off = problem.offset(i), ni = a.dim();
  full.lower.segment(off, ni) = a.lower;
  full.upper.segment(off, ni) = a.upper;
  Vector fixed = Vector::Constant(full.cols(),
                                  std::numeric_limits<double>::quiet_NaN());
  fixed.head(sys.n) = x;
  fixed.segment(off, ni).setConstant(std::numeric_limits<double>::quiet_NaN());
  LinearSystem ls = restrict(full, fixed);
  const Eigen::Index base = ls.rows.rows();
  ls.rows.conservativeResize(base + a.H.rows(), Eigen::NoChange);
  ls.rhs.conservativeResize(base + a.H.rows());
  ls.rows.bottomRows(a.H.rows()).setZero();
  if (a.H.rows() > 0) {
    ls.rows.block(base, 0, a.H.rows(), ni) = a.H;
    ls.rhs.tail(a.H.rows()) = a.g;
  }
  return ls;
}

// Best response when the agent also chooses the relaxed auxiliary block.
inline BestResponse relaxed_best_response(const GnepProblem& problem,
                                          const BigMSystem& sys,
                                          std::size_t i, const Vector& x) {
  const AgentSpec& a = problem.agents.at(i);
  const Eigen::Index ni = a.dim(), mk = sys.stacked_rows();
  const Vector c = a.p0 + a.P * problem.rivals(x, i);

  // Local problem first: if its optimum already admits a relaxed auxiliary
  // block it solves the joint problem with inactive shared rows.
  const QpResult local =
      qp_solve(QpProblem{a.Q, c, a.H, a.g, a.lower, a.upper});
  if (!local.ok()) ni_detail::infeasible(i, local, "local strategy set is empty");
  const Vector at_local = problem.with_block(x, i, local.x);
  const Vector sigma = sys.sample_slack(at_local);
  const Vector caps = relaxed_caps(sigma, sys.M);
  if (caps_feasible(sys, caps)) {
    BestResponse br;
    br.y = local.x;
    br.lambda = ni_detail::local_duals(a, local, 0, mk, -1);
    br.value = eval_objective(problem, i, at_local);
    br.follower =
        witness_from_caps(caps, relaxed_q(sigma, sys.M), sys.epsilon_k(), true);
    br.kkt_residual = local.kkt_residual;
    return br;
  }

  const LinearSystem ls = agent_joint_system(problem, sys, i, x);
  const Eigen::Index cols = ls.cols();
  QpProblem qp;
  qp.Q = Matrix::Zero(cols, cols);
  qp.Q.topLeftCorner(ni, ni) = a.Q;
  qp.c = Vector::Zero(cols);
  qp.c.head(ni) = c;
  qp.rows = ls.rows;
  qp.rhs = ls.rhs;
  qp.lower = ls.lower;
  qp.upper = ls.upper;
  QpOptions opts;
  opts.allow_semidefinite = true;
  const QpResult r = qp_solve(qp, opts);
  if (!r.ok())
    ni_detail::infeasible(i, r, "relaxed coupled strategy set is empty");
  BestResponse br;
  br.y = r.x.head(ni);
  // Row layout of agent_joint_system: h1, h2 (mK rows), h3 (K rows), local.
  const Eigen::Index local_offset = 1 + mk + sys.K;
  br.lambda = ni_detail::local_duals(a, r, local_offset, mk, 1);
  br.follower.tau_prime = r.x(ni);
  br.follower.s_prime = r.x.segment(ni + 1, sys.K);
  br.follower.q = r.x.segment(ni + 1 + sys.K, sys.K);
  br.follower.relaxed = true;
  br.value = eval_objective(problem, i, problem.with_block(x, i, br.y));
  br.shared_rows_active = true;
  br.kkt_residual = r.kkt_residual;
  return br;
}

struct ResidualReport {
  double value = 0.0;
  std::vector<double> gaps;
  std::vector<Vector> responses;
  std::vector<double> response_values;
  std::vector<DualVars> lambdas;
  std::vector<AuxiliaryVars> followers;
  double max_kkt_residual = 0.0;
};

inline ResidualReport residual(const GnepProblem& problem,
                               const BigMSystem& sys, const Vector& x,
                               InnerProblem mode = InnerProblem::kRelaxedFollower,
                               const AuxiliaryVars* aux = nullptr) {
  problem.check_profile(x);
  if (mode == InnerProblem::kFixedAux && aux == nullptr)
    throw InvalidProblem("residual: fixed auxiliary mode needs aux values");
  ResidualReport rep;
  for (std::size_t i = 0; i < problem.num_agents(); ++i) {
    const BestResponse br = mode == InnerProblem::kRelaxedFollower
                                ? relaxed_best_response(problem, sys, i, x)
                                : best_response(problem, sys, i, x, *aux);
    const double gap = eval_objective(problem, i, x) - br.value;
    rep.gaps.push_back(gap);
    rep.value += gap;
    rep.responses.push_back(br.y);
    rep.response_values.push_back(br.value);
    rep.lambdas.push_back(br.lambda);
    rep.followers.push_back(br.follower);
    rep.max_kkt_residual = std::max(rep.max_kkt_residual, br.kkt_residual);
  }
  return rep;
}

namespace ni_detail {

inline void check_duals(const GnepProblem& problem, const BigMSystem& sys,
                        std::size_t i, const DualVars& lambda) {
  const AgentSpec& a = problem.agents.at(i);
  require(lambda.lambda_a.size() == a.H.rows() + 2 * a.dim(),
          "dual variables: lambda_a size mismatch");
  require(lambda.lambda_s.size() == sys.stacked_rows(),
          "dual variables: lambda_s size mismatch");
}

// P* = p(x_-i) + H*' lambda and the pieces needed by value and gradient.
struct DualPieces {
  StackedAgentSystem st;
  Vector p_star;
  Vector w;  // Q^-1 P*
  double r = 0.0;
};

inline DualPieces dual_pieces(const GnepProblem& problem, const BigMSystem& sys,
                              std::size_t i, const DualVars& lambda,
                              const Vector& x, const AuxiliaryVars& aux) {
  check_duals(problem, sys, i, lambda);
  const AgentSpec& a = problem.agents.at(i);
  DualPieces d;
  d.st = stacked_system(problem, sys, i, x, aux);
  const Vector xr = problem.rivals(x, i);
  d.p_star = a.p0 + a.P * xr + d.st.H_star.transpose() * lambda.stacked();
  Eigen::LLT<Matrix> llt(a.Q);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("agent " + std::to_string(i) +
                              ": Q is not positive definite");
  d.w = llt.solve(d.p_star);
  d.r = a.r0 + a.rho.dot(xr);
  return d;
}

}  // namespace ni_detail

// Lagrangian dual of agent i's fixed-aux best response:
// -1/2 P*' Q^-1 P* - lambda' g* + r(x_-i). Only x_-i of x is used.
inline double dual_objective(const GnepProblem& problem, const BigMSystem& sys,
                             std::size_t i, const DualVars& lambda,
                             const Vector& x, const AuxiliaryVars& aux) {
  const auto d = ni_detail::dual_pieces(problem, sys, i, lambda, x, aux);
  return -0.5 * d.p_star.dot(d.w) - lambda.stacked().dot(d.st.g_star) + d.r;
}

// sum_i [J_i(x) + 1/2 P*' Q^-1 P* + lambda_i' g* - r(x_-i)], i.e.
// sum_i [J_i(x) - dual_i(lambda_i)].
inline double minlp_objective(const GnepProblem& problem, const BigMSystem& sys,
                              const Vector& x,
                              const std::vector<DualVars>& lambdas,
                              const std::vector<AuxiliaryVars>& auxes) {
  require(lambdas.size() == problem.num_agents() &&
              auxes.size() == problem.num_agents(),
          "minlp_objective: one multiplier set and aux block per agent");
  double total = 0.0;
  for (std::size_t i = 0; i < problem.num_agents(); ++i)
    total += eval_objective(problem, i, x) -
             dual_objective(problem, sys, i, lambdas[i], x, auxes[i]);
  return total;
}

struct MinlpGradient {
  Vector x;
  std::vector<Vector> lambda;  // stacked [lambda_a; lambda_s] order
};

// Gradient of minlp_objective with respect to x and every lambda_i at fixed
// auxiliary blocks.
inline MinlpGradient minlp_gradient(const GnepProblem& problem,
                                    const BigMSystem& sys, const Vector& x,
                                    const std::vector<DualVars>& lambdas,
                                    const std::vector<AuxiliaryVars>& auxes) {
  require(lambdas.size() == problem.num_agents() &&
              auxes.size() == problem.num_agents(),
          "minlp_gradient: one multiplier set and aux block per agent");
  MinlpGradient g;
  g.x = Vector::Zero(x.size());
  const Matrix At = sys.A.transpose();
  for (std::size_t i = 0; i < problem.num_agents(); ++i) {
    const AgentSpec& a = problem.agents[i];
    const auto d = ni_detail::dual_pieces(problem, sys, i, lambdas[i], x, auxes[i]);
    g.lambda.push_back(d.st.H_star * d.w + d.st.g_star);
    const Eigen::Index off = problem.offset(i), ni = a.dim();
    const Vector xi = problem.block(x, i);
    // Own block: Q x_i + p(x_-i).
    g.x.segment(off, ni) += grad_objective(problem, i, x);
    // Rival blocks: P'(x_i + w) from J_i and the dual term (rho cancels),
    // minus A_j' sum_k lambda_s,k from lambda' g^s.
    const Vector rival = a.P.transpose() * (xi + d.w);
    Vector lam_sum = Vector::Zero(sys.m);
    for (Eigen::Index k = 0; k < sys.K; ++k)
      lam_sum += lambdas[i].lambda_s.segment(k * sys.m, sys.m);
    Vector shared = -At * lam_sum;
    shared.segment(off, ni).setZero();
    g.x.head(off) += rival.head(off);
    g.x.tail(x.size() - off - ni) += rival.tail(x.size() - off - ni);
    g.x += shared;
  }
  return g;
}

// Gradient of the residual V(x) by the envelope theorem, using the optimal
// best responses and multipliers recorded in `rep`. Valid where the inner
// active sets are locally stable.
inline Vector residual_gradient(const GnepProblem& problem,
                                const BigMSystem& sys, const Vector& x,
                                const ResidualReport& rep) {
  Vector g = Vector::Zero(x.size());
  const Matrix At = sys.A.transpose();
  for (std::size_t i = 0; i < problem.num_agents(); ++i) {
    const AgentSpec& a = problem.agents[i];
    g += full_grad_objective(problem, i, x);
    const Eigen::Index off = problem.offset(i), ni = a.dim();
    const Vector rival = a.P.transpose() * rep.responses[i] + a.rho;
    Vector lam_sum = Vector::Zero(sys.m);
    for (Eigen::Index k = 0; k < sys.K; ++k)
      lam_sum += rep.lambdas[i].lambda_s.segment(k * sys.m, sys.m);
    Vector dphi = At * lam_sum;
    dphi.head(off) += rival.head(off);
    dphi.tail(x.size() - off - ni) += rival.tail(x.size() - off - ni);
    dphi.segment(off, ni).setZero();
    g -= dphi;
  }
  return g;
}

}  // namespace drgne

#endif  // DRGNE_NI_RESIDUAL_HPP_
