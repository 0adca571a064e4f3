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

#ifndef DRGNE_REFORMULATION_HPP_
#define DRGNE_REFORMULATION_HPP_

// Deterministic big-M form of the shared chance constraint.
//
// With a common dual norm ||beta||_* over the rows, sample k contributes
// tau' - s'_k <= (min_j slack_jk)^+, where the row slack is
// slack_jk = beta_j xi_k + b_j - A_j x. The (.)^+ kink is modelled with a
// binary q_k and a constant M:
//
//   h1  eps K tau' - sum_k s'_k >= theta K ||beta||_*
//   h2  slack_jk + M q_k - tau' + s'_k >= 0          for all j, k
//   h3  M (1 - q_k) - tau' + s'_k >= 0               for all k
//   h4  s' >= 0
//   h5  q in {0, 1}^K
//
// Rows are stacked sample-major: entry k*m + j is row j of sample k.
//
// When the rows of beta have different dual norms, each row j (A_j, beta_j,
// b_j) is multiplied by ||beta||_ref / ||beta_j||_* with ref the largest norm.
// This leaves the constraint set unchanged and makes every row share the norm
// used in h1, so the equivalence with the sorted-distance test stays exact.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "drgne/game_model.hpp"
#include "drgne/types.hpp"
#include "drgne/wasserstein_drcc.hpp"

namespace drgne {

struct BigMSystem {
  Eigen::Index m = 0;  // rows of the chance constraint
  Eigen::Index K = 0;  // samples
  Eigen::Index l = 0;  // uncertainty dimension
  Eigen::Index n = 0;  // strategy dimension
  double epsilon = 0.0;
  double theta = 0.0;

  Vector row_scale;  // per-row factor applied to (A, beta, b)
  bool rescaled = false;
  Matrix A;     // scaled, m x n
  Matrix beta;  // scaled, m x l
  Vector b;     // scaled, m

  Matrix beta_bar;  // e_K (x) beta, mK x l; block k multiplies sample k
  Vector b_bar;     // e_K (x) b
  std::vector<Matrix> A_bar_blocks;  // e_K (x) A_{n_i}
  std::vector<Eigen::Index> block_offsets;
  Matrix E_bar;  // I_K (x) e_m, mK x K
  double M = std::numeric_limits<double>::quiet_NaN();
  Vector M_bar;
  double beta_dual_norm = 0.0;
  Vector stacked_rhs;  // beta_bar xi + b_bar, mK

  Eigen::Index stacked_rows() const { return m * K; }
  Eigen::Index index(Eigen::Index k, Eigen::Index j) const { return k * m + j; }
  double epsilon_k() const { return epsilon * static_cast<double>(K); }
  // Right-hand side of h1.
  double h1_bound() const {
    return theta * static_cast<double>(K) * beta_dual_norm;
  }
  // Bounds on tau' and s'_k implied by h1, h3 and h4 for any q in [0,1]^K.
  double tau_bound() const { return M / (1.0 - epsilon); }
  double s_bound() const { return epsilon_k() * M / (1.0 - epsilon); }

  void set_big_m(double value) {
    if (!(value > 0.0) || !std::isfinite(value))
      throw InvalidProblem("big-M constant must be positive and finite");
    M = value;
    M_bar = Vector::Constant(stacked_rows(), value);
  }

  // e_K (x) A.
  Matrix A_bar() const {
    Matrix out(stacked_rows(), n);
    for (Eigen::Index k = 0; k < K; ++k) out.middleRows(k * m, m) = A;
    return out;
  }

  // beta_bar xi + b_bar - A_bar x.
  Vector row_slack(const Vector& x) const {
    require(x.size() == n, "row_slack: profile size mismatch");
    const Vector ax = A * x;
    Vector out = stacked_rhs;
    for (Eigen::Index k = 0; k < K; ++k) out.segment(k * m, m) -= ax;
    return out;
  }

  // sigma_k = min_j slack_jk.
  Vector sample_slack(const Vector& x) const {
    return sample_slack_from_rows(row_slack(x));
  }

  Vector sample_slack_from_rows(const Vector& rows) const {
    Vector out(K);
    for (Eigen::Index k = 0; k < K; ++k)
      out(k) = rows.segment(k * m, m).minCoeff();
    return out;
  }
};

// Stacks the Kronecker blocks for strategy blocks of the given sizes. M is
// left unset; see compute_big_m.
inline BigMSystem assemble(const DrccSpec& spec,
                           const std::vector<Eigen::Index>& block_dims) {
  Eigen::Index n = 0;
  for (Eigen::Index d : block_dims) n += d;
  spec.validate(n);
  BigMSystem sys;
  sys.m = spec.A.rows();
  sys.K = static_cast<Eigen::Index>(spec.samples.size());
  sys.l = spec.beta.cols();
  sys.n = n;
  if (static_cast<double>(sys.m) * static_cast<double>(sys.K) > 1e6)
    throw InvalidProblem("big-M system would have more than 1e6 rows");
  sys.epsilon = spec.epsilon;
  sys.theta = spec.theta;

  const Vector norms = row_dual_norms(spec);
  const double ref = norms.maxCoeff();
  sys.row_scale = (Vector::Constant(sys.m, ref).array() / norms.array()).matrix();
  sys.rescaled = (norms.array() != ref).any();
  sys.beta_dual_norm = ref;
  sys.A = sys.row_scale.asDiagonal() * spec.A;
  sys.beta = sys.row_scale.asDiagonal() * spec.beta;
  sys.b = sys.row_scale.cwiseProduct(spec.b);

  const Eigen::Index mk = sys.stacked_rows();
  sys.beta_bar.resize(mk, sys.l);
  sys.b_bar.resize(mk);
  sys.stacked_rhs.resize(mk);
  sys.E_bar = Matrix::Zero(mk, sys.K);
  for (Eigen::Index k = 0; k < sys.K; ++k) {
    sys.beta_bar.middleRows(k * sys.m, sys.m) = sys.beta;
    sys.b_bar.segment(k * sys.m, sys.m) = sys.b;
    sys.E_bar.block(k * sys.m, k, sys.m, 1).setOnes();
    sys.stacked_rhs.segment(k * sys.m, sys.m) =
        sys.beta * spec.samples.xi.row(k).transpose() + sys.b;
  }
  Eigen::Index off = 0;
  for (Eigen::Index d : block_dims) {
    Matrix blk(mk, d);
    for (Eigen::Index k = 0; k < sys.K; ++k)
      blk.middleRows(k * sys.m, sys.m) = sys.A.middleCols(off, d);
    sys.A_bar_blocks.push_back(std::move(blk));
    sys.block_offsets.push_back(off);
    off += d;
  }
  return sys;
}

// Sufficient M over a box of profiles, by interval arithmetic on every row:
// M >= tau'_max (largest scaled distance) and M >= tau'_max - min slack,
// times a 1.1 safety factor.
inline double compute_big_m(const BigMSystem& sys, const Box& box) {
  require(box.lower.size() == sys.n && box.upper.size() == sys.n,
          "compute_big_m: box size mismatch");
  if (!box.lower.allFinite() || !box.upper.allFinite())
    throw InvalidProblem("compute_big_m: box must be finite");
  if ((box.lower.array() > box.upper.array()).any())
    throw InvalidProblem("compute_big_m: empty box");
  // Range of A_j x over the box.
  Vector ax_min(sys.m), ax_max(sys.m);
  for (Eigen::Index j = 0; j < sys.m; ++j) {
    double lo = 0.0, hi = 0.0;
    for (Eigen::Index c = 0; c < sys.n; ++c) {
      const double a = sys.A(j, c);
      lo += std::min(a * box.lower(c), a * box.upper(c));
      hi += std::max(a * box.lower(c), a * box.upper(c));
    }
    ax_min(j) = lo;
    ax_max(j) = hi;
  }
  double tau_max = 0.0;
  double min_slack = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < sys.K; ++k) {
    double best_hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < sys.m; ++j) {
      const double rhs = sys.stacked_rhs(sys.index(k, j));
      best_hi = std::min(best_hi, rhs - ax_min(j));
      min_slack = std::min(min_slack, rhs - ax_max(j));
    }
    tau_max = std::max(tau_max, best_hi);
  }
  const double value = 1.1 * std::max(tau_max, tau_max - min_slack);
  return value > 0.0 ? value : 1.0;
}

// Assembles the system of a game and sets M from its box hull.
inline BigMSystem assemble(const GnepProblem& problem) {
  std::vector<Eigen::Index> dims;
  for (std::size_t i = 0; i < problem.num_agents(); ++i)
    dims.push_back(problem.dim(i));
  BigMSystem sys = assemble(problem.drcc, dims);
  sys.set_big_m(compute_big_m(sys, box_hull(problem)));
  return sys;
}

struct AuxiliaryVars {
  double tau_prime = 0.0;
  Vector s_prime;
  Vector q;
  bool relaxed = false;  // q may be fractional
};

struct ConstraintCheck {
  double h1 = 0.0;  // violation amounts, 0 when satisfied
  double h2 = 0.0;
  double h3 = 0.0;
  double h4 = 0.0;
  double h5 = 0.0;
  double worst() const { return std::max({h1, h2, h3, h4, h5}); }
  bool ok(double tol) const { return worst() <= tol; }
};

inline ConstraintCheck check_constraints(const BigMSystem& sys,
                                         const Vector& x,
                                         const AuxiliaryVars& aux) {
  require(aux.s_prime.size() == sys.K && aux.q.size() == sys.K,
          "check_constraints: auxiliary variable size mismatch");
  ConstraintCheck c;
  c.h1 = std::max(0.0, sys.h1_bound() - (sys.epsilon_k() * aux.tau_prime -
                                         aux.s_prime.sum()));
  const Vector slack = sys.row_slack(x);
  for (Eigen::Index k = 0; k < sys.K; ++k) {
    const double shift = sys.M * aux.q(k) - aux.tau_prime + aux.s_prime(k);
    for (Eigen::Index j = 0; j < sys.m; ++j)
      c.h2 = std::max(c.h2, -(slack(sys.index(k, j)) + shift));
    c.h3 = std::max(c.h3, -(sys.M * (1.0 - aux.q(k)) - aux.tau_prime +
                            aux.s_prime(k)));
    c.h4 = std::max(c.h4, -aux.s_prime(k));
    const double qk = aux.q(k);
    const double off_binary =
        aux.relaxed ? std::max({0.0, -qk, qk - 1.0})
                    : std::min(std::abs(qk), std::abs(qk - 1.0));
    c.h5 = std::max(c.h5, off_binary);
  }
  return c;
}

// Per-sample caps on tau' - s'_k for a binary q.
inline Vector binary_caps(const Vector& sigma, const Vector& q, double M) {
  Vector caps(sigma.size());
  for (Eigen::Index k = 0; k < sigma.size(); ++k)
    caps(k) = q(k) > 0.5 ? std::min(0.0, sigma(k) + M) : std::min(sigma(k), M);
  return caps;
}

// Per-sample caps when q_k ranges over [0, 1]: max_q min(sigma + M q,
// M (1 - q)).
inline Vector relaxed_caps(const Vector& sigma, double M) {
  Vector caps(sigma.size());
  for (Eigen::Index k = 0; k < sigma.size(); ++k)
    caps(k) = std::min({M, 0.5 * (M + sigma(k)), M + sigma(k)});
  return caps;
}

// Transport value of the caps against the h1 bound, with the same absolute
// tolerance as the sorted-distance test (in scaled units).
inline bool caps_feasible(const BigMSystem& sys, const Vector& caps) {
  return smallest_mass(caps, sys.epsilon_k()) >=
         sys.h1_bound() - kTolFeas * sys.beta_dual_norm;
}

// Optimal (tau', s') for given caps: tau' = c_(floor(eps K)+1), s' = (tau' -
// c)^+.
inline AuxiliaryVars witness_from_caps(const Vector& caps, const Vector& q,
                                       double epsilon_k, bool relaxed) {
  const DualCertificate cert = certificate_from_values(caps, epsilon_k);
  return AuxiliaryVars{cert.tau, cert.s, q, relaxed};
}

// Relaxed q maximizing each sample's cap.
inline Vector relaxed_q(const Vector& sigma, double M) {
  Vector q(sigma.size());
  for (Eigen::Index k = 0; k < sigma.size(); ++k)
    q(k) = std::clamp((M - sigma(k)) / (2.0 * M), 0.0, 1.0);
  return q;
}

inline bool relaxed_feasible(const BigMSystem& sys, const Vector& x) {
  return caps_feasible(sys, relaxed_caps(sys.sample_slack(x), sys.M));
}

enum class MiMode { kEnumerate, kCertificate };

struct MiResult {
  bool feasible = false;
  AuxiliaryVars witness;
  std::size_t assignments_checked = 0;
  ConstraintCheck check;
};

inline Vector q_from_mask(std::uint64_t mask, Eigen::Index K) {
  Vector q(K);
  for (Eigen::Index k = 0; k < K; ++k) q(k) = (mask >> k) & 1U ? 1.0 : 0.0;
  return q;
}

// Is there a binary (tau', s', q) satisfying h1-h5 at x?
inline MiResult mi_feasible(const Vector& x, const BigMSystem& sys,
                            MiMode mode, Eigen::Index enum_threshold = 12) {
  require(std::isfinite(sys.M), "mi_feasible: big-M constant not set");
  const Vector sigma = sys.sample_slack(x);
  MiResult out;
  if (mode == MiMode::kEnumerate) {
    if (sys.K > enum_threshold || sys.K > 62)
      throw InvalidProblem("mi_feasible: K = " + std::to_string(sys.K) +
                           " is too large for enumeration");
    int best_pop = std::numeric_limits<int>::max();
    const std::uint64_t count = std::uint64_t{1} << sys.K;
    for (std::uint64_t mask = 0; mask < count; ++mask) {
      ++out.assignments_checked;
      const Vector q = q_from_mask(mask, sys.K);
      const Vector caps = binary_caps(sigma, q, sys.M);
      if (!caps_feasible(sys, caps)) continue;
      const int pop = std::popcount(mask);
      if (pop < best_pop) {
        best_pop = pop;
        out.feasible = true;
        out.witness = witness_from_caps(caps, q, sys.epsilon_k(), false);
      }
    }
    if (out.feasible) out.check = check_constraints(sys, x, out.witness);
    return out;
  }
  // Certificate mode: scaled dual certificate of the distances, q_k = 1 for
  // samples whose row slack cannot host tau' - s'_k (samples already inside
  // the unsafe set), then an explicit check of h1-h5.
  const Vector dist = sigma.cwiseMax(0.0);
  const DualCertificate cert = certificate_from_values(dist, sys.epsilon_k());
  AuxiliaryVars aux{cert.tau, cert.s, Vector::Zero(sys.K), false};
  // With s'_k = (tau' - sigma_k^+)^+, sigma_k < tau' - s'_k holds exactly
  // when sigma_k < 0; testing the sign avoids rounding in the difference.
  for (Eigen::Index k = 0; k < sys.K; ++k)
    if (sigma(k) < 0.0) aux.q(k) = 1.0;
  out.assignments_checked = 1;
  out.witness = aux;
  out.check = check_constraints(sys, x, aux);
  const double tol = kTolFeas * std::max(1.0, sys.beta_dual_norm);
  out.feasible = out.check.ok(tol);
  return out;
}

// Linear constraints over the canonical columns [x | tau' | s' | q].
struct CanonicalLayout {
  Eigen::Index n = 0;
  Eigen::Index K = 0;
  Eigen::Index tau() const { return n; }
  Eigen::Index s(Eigen::Index k) const { return n + 1 + k; }
  Eigen::Index q(Eigen::Index k) const { return n + 1 + K + k; }
  Eigen::Index total() const { return n + 1 + 2 * K; }
};

struct LinearSystem {
  Matrix rows;
  Vector rhs;
  Vector lower;
  Vector upper;
  bool relaxed = true;
  // Set by restrict() when a fixed value already violates a bound or a row.
  bool infeasible = false;
  // Original column index of every kept column.
  std::vector<Eigen::Index> columns;

  Eigen::Index cols() const { return lower.size(); }

  double max_violation(const Vector& z) const {
    double v = 0.0;
    if (rows.rows() > 0) v = std::max(v, (rows * z - rhs).maxCoeff());
    v = std::max(v, (lower - z).maxCoeff());
    v = std::max(v, (z - upper).maxCoeff());
    return v;
  }
};

// h1-h4 with q in [0, 1]^K (the canonical relaxation) plus the implied bounds
// on tau' and s'. Strategy columns are unbounded here.
inline LinearSystem relax_canonical(const BigMSystem& sys) {
  require(std::isfinite(sys.M), "relax_canonical: big-M constant not set");
  const CanonicalLayout lay{sys.n, sys.K};
  const Eigen::Index mk = sys.stacked_rows();
  LinearSystem ls;
  ls.rows = Matrix::Zero(1 + mk + sys.K, lay.total());
  ls.rhs = Vector::Zero(ls.rows.rows());
  // h1: -eps K tau' + sum s' <= -theta K ||beta||
  ls.rows(0, lay.tau()) = -sys.epsilon_k();
  for (Eigen::Index k = 0; k < sys.K; ++k) ls.rows(0, lay.s(k)) = 1.0;
  ls.rhs(0) = -sys.h1_bound();
  // h2: A_j x + tau' - s'_k - M q_k <= beta_j xi_k + b_j
  for (Eigen::Index k = 0; k < sys.K; ++k) {
    for (Eigen::Index j = 0; j < sys.m; ++j) {
      const Eigen::Index r = 1 + sys.index(k, j);
      ls.rows.block(r, 0, 1, sys.n) = sys.A.row(j);
      ls.rows(r, lay.tau()) = 1.0;
      ls.rows(r, lay.s(k)) = -1.0;
      ls.rows(r, lay.q(k)) = -sys.M;
      ls.rhs(r) = sys.stacked_rhs(sys.index(k, j));
    }
    // h3: tau' - s'_k + M q_k <= M
    const Eigen::Index r = 1 + mk + k;
    ls.rows(r, lay.tau()) = 1.0;
    ls.rows(r, lay.s(k)) = -1.0;
    ls.rows(r, lay.q(k)) = sys.M;
    ls.rhs(r) = sys.M;
  }
  const double inf = std::numeric_limits<double>::infinity();
  ls.lower = Vector::Constant(lay.total(), -inf);
  ls.upper = Vector::Constant(lay.total(), inf);
  ls.lower(lay.tau()) = 0.0;
  ls.upper(lay.tau()) = sys.tau_bound();
  for (Eigen::Index k = 0; k < sys.K; ++k) {
    ls.lower(lay.s(k)) = 0.0;
    ls.upper(lay.s(k)) = sys.s_bound();
    ls.lower(lay.q(k)) = 0.0;
    ls.upper(lay.q(k)) = 1.0;
  }
  ls.relaxed = true;
  ls.columns.resize(static_cast<std::size_t>(lay.total()));
  for (Eigen::Index c = 0; c < lay.total(); ++c)
    ls.columns[static_cast<std::size_t>(c)] = c;
  return ls;
}

// Adds every agent's local rows and box to the strategy columns.
inline void append_local(LinearSystem& ls, const GnepProblem& problem) {
  Eigen::Index extra = 0;
  for (const auto& a : problem.agents) extra += a.H.rows();
  const Eigen::Index old = ls.rows.rows();
  ls.rows.conservativeResize(old + extra, Eigen::NoChange);
  ls.rhs.conservativeResize(old + extra);
  ls.rows.bottomRows(extra).setZero();
  Eigen::Index r = old;
  for (std::size_t i = 0; i < problem.num_agents(); ++i) {
    const AgentSpec& a = problem.agents[i];
    const Eigen::Index off = problem.offset(i);
    for (Eigen::Index h = 0; h < a.H.rows(); ++h, ++r) {
      ls.rows.block(r, off, 1, a.dim()) = a.H.row(h);
      ls.rhs(r) = a.g(h);
    }
    ls.lower.segment(off, a.dim()) = a.lower;
    ls.upper.segment(off, a.dim()) = a.upper;
  }
}

// Substitutes the columns with finite entries in `fixed` (NaN marks a free
// column) and drops rows left without free columns.
inline LinearSystem restrict(const LinearSystem& ls, const Vector& fixed,
                             double tol = kTolFeas) {
  require(fixed.size() == ls.cols(), "restrict: fixed vector size mismatch");
  LinearSystem out;
  out.relaxed = ls.relaxed;
  std::vector<Eigen::Index> keep;
  Vector shift = Vector::Zero(ls.rows.rows());
  for (Eigen::Index c = 0; c < ls.cols(); ++c) {
    if (std::isnan(fixed(c))) {
      keep.push_back(c);
      continue;
    }
    if (fixed(c) < ls.lower(c) - tol || fixed(c) > ls.upper(c) + tol)
      out.infeasible = true;
    if (ls.rows.rows() > 0) shift += ls.rows.col(c) * fixed(c);
  }
  const auto nk = static_cast<Eigen::Index>(keep.size());
  std::vector<Eigen::Index> row_keep;
  for (Eigen::Index r = 0; r < ls.rows.rows(); ++r) {
    bool any = false;
    for (Eigen::Index c : keep) any |= ls.rows(r, c) != 0.0;
    if (any) {
      row_keep.push_back(r);
    } else if (-shift(r) + ls.rhs(r) < -tol * (1.0 + std::abs(ls.rhs(r)))) {
      out.infeasible = true;
    }
  }
  out.rows.resize(static_cast<Eigen::Index>(row_keep.size()), nk);
  out.rhs.resize(static_cast<Eigen::Index>(row_keep.size()));
  for (std::size_t r = 0; r < row_keep.size(); ++r) {
    const auto rr = static_cast<Eigen::Index>(r);
    for (Eigen::Index c = 0; c < nk; ++c)
      out.rows(rr, c) = ls.rows(row_keep[r], keep[static_cast<std::size_t>(c)]);
    out.rhs(rr) = ls.rhs(row_keep[r]) - shift(row_keep[r]);
  }
  out.lower.resize(nk);
  out.upper.resize(nk);
  for (Eigen::Index c = 0; c < nk; ++c) {
    const Eigen::Index src = keep[static_cast<std::size_t>(c)];
    out.lower(c) = ls.lower(src);
    out.upper(c) = ls.upper(src);
    out.columns.push_back(ls.columns.empty()
                              ? src
                              : ls.columns[static_cast<std::size_t>(src)]);
  }
  return out;
}

struct Vertex {
  double tau_prime = 0.0;
  Vector s_prime;
  Vector q;
  bool binary = true;
};

struct VertexReport {
  std::vector<Vertex> vertices;
  bool all_binary = true;
  std::size_t fractional = 0;
};

// Vertices of the relaxed polyhedron in (tau', s', q) at a fixed profile,
// bounded by the implied bounds on tau' and s'. Diagnostic for tiny K.
inline VertexReport vertex_diagnostic(const BigMSystem& sys, const Vector& x) {
  if (sys.K > 3)
    throw InvalidProblem("vertex_diagnostic: supported only for K <= 3");
  require(x.size() == sys.n, "vertex_diagnostic: profile size mismatch");
  const CanonicalLayout lay{sys.n, sys.K};
  Vector fixed = Vector::Constant(lay.total(),
                                  std::numeric_limits<double>::quiet_NaN());
  fixed.head(sys.n) = x;
  const LinearSystem ls = restrict(relax_canonical(sys), fixed);
  VertexReport report;
  if (ls.infeasible) return report;
  const Eigen::Index d = ls.cols();
  // All inequalities as G z <= h, bounds included.
  Matrix G(ls.rows.rows() + 2 * d, d);
  Vector h(G.rows());
  G << ls.rows, Matrix::Identity(d, d), -Matrix::Identity(d, d);
  h << ls.rhs, ls.upper, -ls.lower;
  const Eigen::Index total = G.rows();
  const double scale = 1.0 + h.cwiseAbs().maxCoeff();
  std::vector<Eigen::Index> pick;
  std::vector<Vector> found;
  auto visit = [&](auto&& self, Eigen::Index start) -> void {
    if (static_cast<Eigen::Index>(pick.size()) == d) {
      Matrix S(d, d);
      Vector t(d);
      for (Eigen::Index a = 0; a < d; ++a) {
        S.row(a) = G.row(pick[static_cast<std::size_t>(a)]);
        t(a) = h(pick[static_cast<std::size_t>(a)]);
      }
      Eigen::FullPivLU<Matrix> lu(S);
      if (!lu.isInvertible()) return;
      const Vector z = lu.solve(t);
      if ((G * z - h).maxCoeff() > 1e-9 * scale) return;
      for (const auto& f : found)
        if ((f - z).cwiseAbs().maxCoeff() <= 1e-9 * scale) return;
      found.push_back(z);
      return;
    }
    for (Eigen::Index r = start; r < total; ++r) {
      pick.push_back(r);
      self(self, r + 1);
      pick.pop_back();
    }
  };
  visit(visit, 0);
  for (const auto& z : found) {
    Vertex v;
    v.tau_prime = z(0);
    v.s_prime = z.segment(1, sys.K);
    v.q = z.segment(1 + sys.K, sys.K);
    for (Eigen::Index k = 0; k < sys.K; ++k)
      v.binary &= std::min(std::abs(v.q(k)), std::abs(v.q(k) - 1.0)) <= 1e-9;
    if (!v.binary) ++report.fractional;
    report.vertices.push_back(std::move(v));
  }
  report.all_binary = report.fractional == 0;
  return report;
}

}  // namespace drgne

#endif  // DRGNE_REFORMULATION_HPP_
