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

#ifndef DRGNE_EQUILIBRIUM_SOLVER_HPP_
#define DRGNE_EQUILIBRIUM_SOLVER_HPP_

// Residual minimization over the coupled strategy set.
//
// The coupled set is the union over binary q of the polyhedra
// {x, tau', s' : local rows, h1-h4 with q fixed}. Each q is a node. Nodes are
// visited in ascending popcount (then lexicographic) order, exhaustively when
// K is small and by best-first branch-and-bound over partial assignments
// otherwise. Inside a node the residual V(x) is minimized by projected
// gradient descent (Barzilai-Borwein trial steps, Armijo backtracking) from a
// best-response-iteration candidate and Latin-hypercube starts; projections
// onto the node polyhedron are QPs.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "drgne/game_model.hpp"
#include "drgne/ni_residual.hpp"
#include "drgne/qp.hpp"
#include "drgne/reformulation.hpp"
#include "drgne/rng.hpp"
#include "drgne/types.hpp"

namespace drgne {

struct SolverOptions {
  double tol_eq = kTolEq;
  int multistart = 16;
  int max_outer = 500;
  Eigen::Index enum_threshold = 12;
  std::uint64_t seed = 42;
  int threads = 1;
  // Budget on solved leaves (binary q assignments).
  std::size_t max_nodes = 4096;
  // A start stops once its residual falls below this value.
  double stop_value = 1e-14;
  // Projected-gradient stationarity threshold.
  double pg_tol = 1e-8;
  bool best_response_start = true;

  void validate() const {
    if (!(tol_eq > 0.0)) throw InvalidProblem("solver: tol_eq must be positive");
    if (multistart < 1) throw InvalidProblem("solver: multistart must be >= 1");
    if (max_outer < 1) throw InvalidProblem("solver: max_outer must be >= 1");
    if (threads < 1) throw InvalidProblem("solver: threads must be >= 1");
    if (max_nodes < 1) throw InvalidProblem("solver: max_nodes must be >= 1");
  }
};

enum class Status { kGne, kNonExistence, kInconclusive };

inline std::string status_name(Status s) {
  switch (s) {
    case Status::kGne:
      return "GNE";
    case Status::kNonExistence:
      return "NonExistence";
    case Status::kInconclusive:
      return "Inconclusive";
  }
  return "Inconclusive";
}

struct NodeLog {
  Vector q;
  bool feasible = false;
  double best_value = std::numeric_limits<double>::infinity();
  int starts_used = 0;
};

struct CertifyReport {
  bool local_ok = true;
  std::vector<FeasibilityReport> local;
  double mass = 0.0;
  double required = 0.0;  // theta K
  bool drcc_ok = false;
  bool residual_evaluated = false;
  ResidualReport residual;
  bool certified = false;
  std::string reason;
};

struct EquilibriumResult {
  Vector x_star;
  AuxiliaryVars aux_star;
  double residual = std::numeric_limits<double>::infinity();
  std::vector<double> gaps;
  Status status = Status::kInconclusive;
  std::vector<NodeLog> nodes;
  bool closed = false;  // every node was decided within the budget
  double wall_ms = 0.0;
  std::string message;
};

struct BestResponseTrace {
  Vector x;
  std::vector<double> changes;  // max block change per sweep
  std::vector<AuxiliaryVars> aux;  // certificate aux after each sweep
  bool converged = false;
};

// Gauss-Seidel sweeps of relaxed best responses. The auxiliary block of each
// sweep is refreshed from the dual certificate at the current profile.
inline BestResponseTrace best_response_iteration(const GnepProblem& problem,
                                                 const BigMSystem& sys,
                                                 const Vector& x0,
                                                 const SolverOptions& options) {
  problem.check_profile(x0);
  BestResponseTrace trace;
  trace.x = x0;
  for (int sweep = 0; sweep < options.max_outer; ++sweep) {
    double change = 0.0;
    for (std::size_t i = 0; i < problem.num_agents(); ++i) {
      const BestResponse br = relaxed_best_response(problem, sys, i, trace.x);
      change = std::max(
          change, (br.y - problem.block(trace.x, i)).cwiseAbs().maxCoeff());
      trace.x = problem.with_block(trace.x, i, br.y);
    }
    trace.changes.push_back(change);
    trace.aux.push_back(mi_feasible(trace.x, sys, MiMode::kCertificate).witness);
    if (change <= 1e-9) {
      trace.converged = true;
      break;
    }
  }
  return trace;
}

// Independent check of a claimed equilibrium: direct sorted-distance test,
// local feasibility, then the residual from fresh subproblem solves.
inline CertifyReport certify(const GnepProblem& problem, const BigMSystem& sys,
                             const Vector& x, double tol_eq = kTolEq) {
  problem.check_profile(x);
  CertifyReport rep;
  for (std::size_t i = 0; i < problem.num_agents(); ++i) {
    rep.local.push_back(local_feasible(problem, i, problem.block(x, i)));
    rep.local_ok &= rep.local.back().feasible;
  }
  rep.mass = distance_mass(x, problem.drcc);
  rep.required =
      problem.drcc.theta * static_cast<double>(problem.drcc.samples.size());
  rep.drcc_ok = rep.mass >= rep.required - kTolFeas;
  if (!rep.local_ok) {
    rep.reason = "local constraints violated";
    return rep;
  }
  if (!rep.drcc_ok) {
    rep.reason = "shared chance constraint violated";
    return rep;
  }
  try {
    rep.residual = residual(problem, sys, x);
    rep.residual_evaluated = true;
  } catch (const InfeasibleSubproblem& e) {
    rep.reason = e.what();
    return rep;
  }
  rep.certified = rep.residual.value <= tol_eq;
  if (!rep.certified) rep.reason = "residual above tolerance";
  return rep;
}

namespace solver_detail {

// Node polyhedron over [x | tau' | s' | free q] with some q entries fixed.
struct NodeSet {
  Vector q_fixed;  // NaN where free
  LinearSystem ls;
  Eigen::Index n = 0;
  bool binary = true;  // every q entry fixed
};

inline NodeSet make_node(const GnepProblem& problem, const BigMSystem& sys,
                         const Vector& q_fixed) {
  LinearSystem full = relax_canonical(sys);
  append_local(full, problem);
  const CanonicalLayout lay{sys.n, sys.K};
  Vector fixed = Vector::Constant(lay.total(),
                                  std::numeric_limits<double>::quiet_NaN());
  fixed.tail(sys.K) = q_fixed;
  NodeSet node;
  node.q_fixed = q_fixed;
  node.ls = restrict(full, fixed);
  node.n = sys.n;
  node.binary = !q_fixed.hasNaN();
  return node;
}

struct Projection {
  Vector x;
  AuxiliaryVars aux;
};

inline AuxiliaryVars aux_from_columns(const NodeSet& node, const BigMSystem& sys,
                                      const Vector& z) {
  AuxiliaryVars aux;
  aux.tau_prime = z(node.n);
  aux.s_prime = z.segment(node.n + 1, sys.K);
  aux.q = node.q_fixed;
  Eigen::Index free = node.n + 1 + sys.K;
  for (Eigen::Index k = 0; k < sys.K; ++k)
    if (std::isnan(aux.q(k))) aux.q(k) = z(free++);
  aux.relaxed = !node.binary;
  return aux;
}

// Euclidean projection of v onto the node set (in x), or nullopt when empty.
inline std::optional<Projection> project(const GnepProblem& problem,
                                         const BigMSystem& sys,
                                         const NodeSet& node, const Vector& v) {
  if (node.ls.infeasible) return std::nullopt;
  if (node.binary) {
    bool inside = true;
    for (std::size_t i = 0; inside && i < problem.num_agents(); ++i)
      inside = local_feasible(problem, i, problem.block(v, i), 0.0).feasible;
    if (inside) {
      const Vector caps = binary_caps(sys.sample_slack(v), node.q_fixed, sys.M);
      if (smallest_mass(caps, sys.epsilon_k()) >= sys.h1_bound())
        return Projection{v, witness_from_caps(caps, node.q_fixed,
                                               sys.epsilon_k(), false)};
    }
  }
  const Eigen::Index cols = node.ls.cols();
  QpProblem qp;
  qp.Q = Matrix::Zero(cols, cols);
  qp.Q.topLeftCorner(node.n, node.n).setIdentity();
  qp.c = Vector::Zero(cols);
  qp.c.head(node.n) = -v;
  qp.rows = node.ls.rows;
  qp.rhs = node.ls.rhs;
  qp.lower = node.ls.lower;
  qp.upper = node.ls.upper;
  QpOptions opts;
  opts.allow_semidefinite = true;
  const QpResult r = qp_solve(qp, opts);
  if (!r.ok()) return std::nullopt;
  Vector x = r.x.head(node.n);
  x = x.cwiseMax(node.ls.lower.head(node.n)).cwiseMin(node.ls.upper.head(node.n));
  return Projection{x, aux_from_columns(node, sys, r.x)};
}

// Fixed Latin-hypercube design over the box; row j is start j.
inline Matrix latin_hypercube(const Box& box, int rows, std::uint64_t seed,
                              std::uint64_t stream) {
  const Eigen::Index n = box.lower.size();
  const CounterRng rng(seed, stream);
  Matrix design(rows, n);
  std::uint64_t counter = 0;
  std::vector<int> perm(static_cast<std::size_t>(rows));
  for (Eigen::Index c = 0; c < n; ++c) {
    for (int r = 0; r < rows; ++r) perm[static_cast<std::size_t>(r)] = r;
    for (int r = rows - 1; r > 0; --r) {
      const auto j = static_cast<int>(rng.bits(counter++) %
                                      static_cast<std::uint64_t>(r + 1));
      std::swap(perm[static_cast<std::size_t>(r)], perm[static_cast<std::size_t>(j)]);
    }
    for (int r = 0; r < rows; ++r) {
      const double cell =
          (perm[static_cast<std::size_t>(r)] + rng.uniform(counter++)) / rows;
      design(r, c) = box.lower(c) + cell * (box.upper(c) - box.lower(c));
    }
  }
  return design;
}

struct StartResult {
  bool ok = false;
  Vector x;
  AuxiliaryVars aux;
  double value = std::numeric_limits<double>::infinity();
  std::vector<double> gaps;
};

inline bool better(const StartResult& a, const StartResult& b) {
  if (a.ok != b.ok) return a.ok;
  if (a.value != b.value) return a.value < b.value;
  for (Eigen::Index j = 0; j < a.x.size(); ++j)
    if (a.x(j) != b.x(j)) return a.x(j) < b.x(j);
  return false;
}

struct Evaluation {
  bool ok = false;
  double value = std::numeric_limits<double>::infinity();
  Vector grad;
  std::vector<double> gaps;
};

inline Evaluation evaluate(const GnepProblem& problem, const BigMSystem& sys,
                           const Vector& x) {
  Evaluation e;
  try {
    const ResidualReport rep = residual(problem, sys, x);
    e.ok = true;
    e.value = std::max(rep.value, 0.0);
    e.gaps = rep.gaps;
    e.grad = residual_gradient(problem, sys, x, rep);
  } catch (const InfeasibleSubproblem&) {
    e.ok = false;
  }
  return e;
}

inline StartResult descend(const GnepProblem& problem, const BigMSystem& sys,
                           const NodeSet& node, const Vector& start,
                           const SolverOptions& options) {
  StartResult out;
  auto proj = project(problem, sys, node, start);
  if (!proj) return out;
  Vector x = proj->x;
  AuxiliaryVars aux = proj->aux;
  Evaluation cur = evaluate(problem, sys, x);
  if (!cur.ok) return out;
  const Box box = box_hull(problem);
  const double width = std::max(1e-12, (box.upper - box.lower).mean());
  double alpha = 0.1 * width / std::max(1e-300, cur.grad.cwiseAbs().maxCoeff());
  for (int it = 0; it < options.max_outer && cur.value > options.stop_value;
       ++it) {
    bool accepted = false;
    Vector x_new;
    AuxiliaryVars aux_new;
    Evaluation next;
    double step = alpha;
    for (int bt = 0; bt < 50; ++bt, step *= 0.5) {
      const auto p = project(problem, sys, node, x - step * cur.grad);
      if (!p) break;
      const Vector d = p->x - x;
      if (d.cwiseAbs().maxCoeff() <= 1e-15 * (1.0 + x.cwiseAbs().maxCoeff()))
        break;
      const Evaluation e = evaluate(problem, sys, p->x);
      if (e.ok && e.value <= cur.value + 1e-4 * cur.grad.dot(d)) {
        x_new = p->x;
        aux_new = p->aux;
        next = e;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    const Vector s = x_new - x;
    const Vector yv = next.grad - cur.grad;
    const double sy = s.dot(yv);
    const double pg = s.cwiseAbs().maxCoeff() / step;
    alpha = sy > 0.0 ? s.squaredNorm() / sy : 2.0 * step;
    alpha = std::clamp(alpha, 1e-14 * width, 1e6 * width);
    x = x_new;
    aux = aux_new;
    cur = next;
    if (pg <= options.pg_tol) break;
  }
  out.ok = true;
  out.x = x;
  out.aux = aux;
  out.value = cur.value;
  out.gaps = cur.gaps;
  return out;
}

// Runs the starts of one node in index order (in parallel waves when
// threads > 1) and stops at the first start reaching stop_value.
inline StartResult solve_node(const GnepProblem& problem, const BigMSystem& sys,
                              const NodeSet& node,
                              const std::vector<Vector>& starts,
                              const SolverOptions& options, int& used) {
  StartResult best;
  used = 0;
  const auto total = static_cast<int>(starts.size());
  const int wave = std::max(1, options.threads);
  for (int begin = 0; begin < total; begin += wave) {
    const int end = std::min(total, begin + wave);
    std::vector<StartResult> results(static_cast<std::size_t>(end - begin));
    auto run = [&](int j) {
      results[static_cast<std::size_t>(j - begin)] =
          descend(problem, sys, node, starts[static_cast<std::size_t>(j)], options);
    };
    if (end - begin == 1) {
      run(begin);
    } else {
      std::vector<std::thread> pool;
      for (int j = begin; j < end; ++j) pool.emplace_back(run, j);
      for (auto& t : pool) t.join();
    }
    for (int j = begin; j < end; ++j) {
      const StartResult& r = results[static_cast<std::size_t>(j - begin)];
      ++used;
      if (better(r, best)) best = r;
      if (r.ok && r.value <= options.stop_value) return best;
    }
  }
  return best;
}

inline bool q_less(const Vector& a, const Vector& b) {
  const double pa = a.sum(), pb = b.sum();
  if (pa != pb) return pa < pb;
  for (Eigen::Index k = 0; k < a.size(); ++k)
    if (a(k) != b(k)) return a(k) < b(k);
  return false;
}

}  // namespace solver_detail

inline EquilibriumResult solve(const GnepProblem& problem,
                               const SolverOptions& options = {}) {
  using namespace solver_detail;
  const auto t0 = std::chrono::steady_clock::now();
  options.validate();
  problem.validate();
  const BigMSystem sys = assemble(problem);
  const Box box = box_hull(problem);
  const Eigen::Index K = sys.K;
  const double epsk = sys.epsilon_k();

  // Best-response candidate shared by every node.
  std::optional<Vector> br_start;
  if (options.best_response_start) {
    try {
      br_start = best_response_iteration(problem, sys,
                                         0.5 * (box.lower + box.upper), options)
                     .x;
    } catch (const InfeasibleSubproblem&) {
      br_start.reset();
    }
  }
  const int design_rows = std::max(64, options.multistart);

  EquilibriumResult result;
  StartResult best;
  bool any_feasible = false;
  bool budget_hit = false;
  std::size_t leaves = 0;
  std::uint64_t node_index = 0;

  auto solve_leaf = [&](const Vector& q) -> bool {
    NodeSet node = make_node(problem, sys, q);
    NodeLog log;
    log.q = q;
    const auto probe = project(problem, sys, node, 0.5 * (box.lower + box.upper));
    ++leaves;
    if (!probe) {
      result.nodes.push_back(log);
      ++node_index;
      return false;
    }
    any_feasible = true;
    log.feasible = true;
    const Matrix design = latin_hypercube(box, design_rows, options.seed, node_index);
    std::vector<Vector> starts;
    if (br_start) starts.push_back(*br_start);
    for (int j = 0; static_cast<int>(starts.size()) < options.multistart; ++j)
      starts.push_back(design.row(j).transpose());
    int used = 0;
    const StartResult r = solve_node(problem, sys, node, starts, options, used);
    log.best_value = r.value;
    log.starts_used = used;
    result.nodes.push_back(log);
    ++node_index;
    if (better(r, best)) best = r;
    return best.ok && best.value <= options.stop_value;
  };

  bool stopped = false;
  if (K <= options.enum_threshold && K <= 62) {
    std::vector<Vector> order;
    const std::uint64_t count = std::uint64_t{1} << K;
    for (std::uint64_t mask = 0; mask < count; ++mask) {
      if (static_cast<double>(std::popcount(mask)) >= epsk) continue;
      order.push_back(q_from_mask(mask, K));
    }
    std::sort(order.begin(), order.end(), q_less);
    for (const Vector& q : order) {
      if (leaves >= options.max_nodes) {
        budget_hit = true;
        break;
      }
      if (solve_leaf(q)) {
        stopped = true;
        break;
      }
    }
  } else {
    // Best-first over partial assignments; a partial node is pruned when its
    // relaxation is empty.
    struct Partial {
      Vector q;  // NaN for undecided
      Eigen::Index depth;
    };
    auto cmp = [](const Partial& a, const Partial& b) {
      const double pa = a.q.head(a.depth).sum(), pb = b.q.head(b.depth).sum();
      if (pa != pb) return pa > pb;
      if (a.depth != b.depth) return a.depth < b.depth;
      for (Eigen::Index k = 0; k < a.depth; ++k)
        if (a.q(k) != b.q(k)) return a.q(k) > b.q(k);
      return false;
    };
    std::priority_queue<Partial, std::vector<Partial>, decltype(cmp)> open(cmp);
    open.push({Vector::Constant(K, std::numeric_limits<double>::quiet_NaN()), 0});
    while (!open.empty()) {
      const Partial p = open.top();
      open.pop();
      if (p.depth == K) {
        if (leaves >= options.max_nodes) {
          budget_hit = true;
          break;
        }
        if (solve_leaf(p.q)) {
          stopped = true;
          break;
        }
        continue;
      }
      for (double bit : {0.0, 1.0}) {
        Partial c = p;
        c.q(c.depth) = bit;
        ++c.depth;
        if (c.q.head(c.depth).sum() >= epsk) continue;
        if (c.depth < K && !project(problem, sys, make_node(problem, sys, c.q),
                                    0.5 * (box.lower + box.upper)))
          continue;
        open.push(c);
      }
    }
  }
  if (!any_feasible && !budget_hit)
    throw InfeasibleProblem("no binary assignment yields a feasible profile");

  result.closed = !budget_hit;
  result.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
  if (!best.ok) {
    result.status = Status::kInconclusive;
    result.message = "no start produced a feasible profile";
    return result;
  }
  result.x_star = best.x;
  result.aux_star = best.aux;
  result.residual = best.value;
  result.gaps = best.gaps;
  if (best.value <= options.tol_eq) {
    const CertifyReport cert = certify(problem, sys, best.x, options.tol_eq);
    if (cert.certified) {
      result.status = Status::kGne;
      result.residual = cert.residual.value;
      result.gaps = cert.residual.gaps;
    } else {
      result.status = Status::kInconclusive;
      result.message = "candidate failed certification: " + cert.reason;
    }
  } else if (result.closed && !stopped) {
    result.status = Status::kNonExistence;
    result.message = "every node stays above tolerance at the full budget";
  } else {
    result.status = Status::kInconclusive;
    result.message = "node budget exhausted";
  }
  return result;
}

}  // namespace drgne

#endif  // DRGNE_EQUILIBRIUM_SOLVER_HPP_
