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

#ifndef DRGNE_QP_HPP_
#define DRGNE_QP_HPP_

// Dense convex QP engine:
//
//   minimize   1/2 x'Qx + c'x
//   subject to rows * x <= rhs,  lower <= x <= upper.
//
// Primal-dual interior point with Mehrotra predictor-corrector steps on the
// reduced normal equations, followed by an active-set polish that solves the
// equality-constrained KKT system of the identified active rows. Problems here
// are small (tens of variables), so everything is dense.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "drgne/types.hpp"

namespace drgne {

struct QpProblem {
  Matrix Q;
  Vector c;
  Matrix rows;  // m x n; m may be zero
  Vector rhs;
  Vector lower;  // n entries, -inf allowed; empty means unbounded
  Vector upper;
};

enum class QpStatus { kOptimal, kInfeasible };

struct QpResult {
  QpStatus status = QpStatus::kInfeasible;
  Vector x;
  Vector row_multipliers;
  Vector lower_multipliers;
  Vector upper_multipliers;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double kkt_residual = std::numeric_limits<double>::infinity();
  // Largest constraint violation at x (the infeasibility measure when the
  // iteration budget runs out).
  double max_violation = 0.0;
  int iterations = 0;
  bool polished = false;
  // Nonnegative row weights y with sum_i y_i a_i = 0 and y'b < 0 over the
  // stacked system [rows; I; -I] when emptiness was proved; empty otherwise.
  Vector farkas;

  bool ok() const { return status == QpStatus::kOptimal; }
};

struct QpOptions {
  int max_iterations = 200;
  // Relative tolerance on the scaled KKT conditions of the interior point
  // phase; the polish step then solves the active set exactly.
  double tolerance = 1e-10;
  // Accept positive semidefinite Q. The caller must make sure the feasible set
  // is bounded in the directions of zero curvature.
  bool allow_semidefinite = false;
  bool polish = true;
};

struct KktBreakdown {
  double stationarity = 0.0;
  double primal = 0.0;
  double dual = 0.0;
  double complementarity = 0.0;
  double max() const {
    return std::max({stationarity, primal, dual, complementarity});
  }
};

namespace qp_detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline Vector bound_or(const Vector& v, Eigen::Index n, double fill) {
  return v.size() == 0 ? Vector::Constant(n, fill) : v;
}

// Inequality rows after stacking finite bounds below the general rows.
struct Stacked {
  Matrix R;
  Vector d;
  Vector scale;  // multiplier in original units = z_scaled * scale
  // origin[i] >= 0: general row; -(j+1): upper bound j; -(n+j+1): lower j
  std::vector<Eigen::Index> origin;
};

inline Stacked stack_rows(const QpProblem& p, const Vector& lo,
                          const Vector& up) {
  const Eigen::Index n = p.c.size();
  const Eigen::Index m = p.rows.rows();
  std::vector<Eigen::Index> origin;
  for (Eigen::Index i = 0; i < m; ++i) origin.push_back(i);
  for (Eigen::Index j = 0; j < n; ++j)
    if (std::isfinite(up(j))) origin.push_back(-(j + 1));
  for (Eigen::Index j = 0; j < n; ++j)
    if (std::isfinite(lo(j))) origin.push_back(-(n + j + 1));
  Stacked s;
  const auto total = static_cast<Eigen::Index>(origin.size());
  s.R = Matrix::Zero(total, n);
  s.d = Vector::Zero(total);
  s.scale = Vector::Ones(total);
  for (Eigen::Index r = 0; r < total; ++r) {
    const Eigen::Index o = origin[static_cast<std::size_t>(r)];
    if (o >= 0) {
      s.R.row(r) = p.rows.row(o);
      s.d(r) = p.rhs(o);
    } else if (o >= -n) {
      s.R(r, -o - 1) = 1.0;
      s.d(r) = up(-o - 1);
    } else {
      s.R(r, -o - n - 1) = -1.0;
      s.d(r) = -lo(-o - n - 1);
    }
    const double norm = s.R.row(r).cwiseAbs().maxCoeff();
    if (norm > 0.0) {
      s.scale(r) = 1.0 / norm;
      s.R.row(r) *= s.scale(r);
      s.d(r) *= s.scale(r);
    }
  }
  s.origin = std::move(origin);
  return s;
}

inline void unstack(const Stacked& s, const Vector& z, Eigen::Index n,
                    Eigen::Index m, QpResult& out) {
  out.row_multipliers = Vector::Zero(m);
  out.upper_multipliers = Vector::Zero(n);
  out.lower_multipliers = Vector::Zero(n);
  for (std::size_t r = 0; r < s.origin.size(); ++r) {
    const auto ri = static_cast<Eigen::Index>(r);
    const double value = z(ri) * s.scale(ri);
    const Eigen::Index o = s.origin[r];
    if (o >= 0) {
      out.row_multipliers(o) = value;
    } else if (o >= -n) {
      out.upper_multipliers(-o - 1) = value;
    } else {
      out.lower_multipliers(-o - n - 1) = value;
    }
  }
}

inline double max_violation(const Stacked& s, const Vector& x) {
  double v = 0.0;
  for (Eigen::Index r = 0; r < s.R.rows(); ++r)
    v = std::max(v, (s.R.row(r).dot(x) - s.d(r)) / s.scale(r));
  return v;
}

}  // namespace qp_detail

inline KktBreakdown kkt_breakdown(const QpProblem& p, const Vector& x,
                                  const Vector& row_mult,
                                  const Vector& lower_mult,
                                  const Vector& upper_mult) {
  const Eigen::Index n = p.c.size();
  const Vector lo = qp_detail::bound_or(p.lower, n, -qp_detail::kInf);
  const Vector up = qp_detail::bound_or(p.upper, n, qp_detail::kInf);
  KktBreakdown k;
  Vector grad = p.Q * x + p.c + upper_mult - lower_mult;
  if (p.rows.rows() > 0) grad += p.rows.transpose() * row_mult;
  k.stationarity = grad.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < p.rows.rows(); ++i) {
    const double slack = p.rhs(i) - p.rows.row(i).dot(x);
    k.primal = std::max(k.primal, -slack);
    k.dual = std::max(k.dual, -row_mult(i));
    k.complementarity =
        std::max(k.complementarity, std::abs(row_mult(i) * slack));
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    k.dual = std::max({k.dual, -lower_mult(j), -upper_mult(j)});
    if (std::isfinite(up(j))) {
      k.primal = std::max(k.primal, x(j) - up(j));
      k.complementarity =
          std::max(k.complementarity, std::abs(upper_mult(j) * (up(j) - x(j))));
    } else {
      k.dual = std::max(k.dual, std::abs(upper_mult(j)));
    }
    if (std::isfinite(lo(j))) {
      k.primal = std::max(k.primal, lo(j) - x(j));
      k.complementarity =
          std::max(k.complementarity, std::abs(lower_mult(j) * (x(j) - lo(j))));
    } else {
      k.dual = std::max(k.dual, std::abs(lower_mult(j)));
    }
  }
  return k;
}

namespace qp_detail {

inline void finish(const QpProblem& p, QpResult& out) {
  out.objective = 0.5 * out.x.dot(p.Q * out.x) + p.c.dot(out.x);
  out.kkt_residual = kkt_breakdown(p, out.x, out.row_multipliers,
                                   out.lower_multipliers,
                                   out.upper_multipliers)
                         .max();
}

// One-variable problems: the feasible set is an interval.
inline QpResult solve_scalar(const QpProblem& p, const Stacked& s) {
  QpResult out;
  double lb = -kInf, ub = kInf;
  Eigen::Index lb_row = -1, ub_row = -1;
  for (Eigen::Index r = 0; r < s.R.rows(); ++r) {
    const double a = s.R(r, 0);
    if (a > 0.0) {
      const double v = s.d(r) / a;
      if (v < ub) ub = v, ub_row = r;
    } else if (a < 0.0) {
      const double v = s.d(r) / a;
      if (v > lb) lb = v, lb_row = r;
    } else if (s.d(r) < -kTolFeas) {
      Vector f = Vector::Zero(s.R.rows());
      f(r) = 1.0;
      out.farkas = f;
      out.max_violation = -s.d(r) / s.scale(r);
      out.x = Vector::Zero(1);
      return out;
    }
  }
  const double q = p.Q(0, 0), c = p.c(0);
  Vector z = Vector::Zero(s.R.rows());
  out.x = Vector::Zero(1);
  if (lb > ub) {
    // Rows lb_row and ub_row combine to 0 <= ub - lb < 0.
    Vector f = Vector::Zero(s.R.rows());
    f(ub_row) = 1.0 / s.R(ub_row, 0);
    f(lb_row) = -1.0 / s.R(lb_row, 0);
    out.x(0) = 0.5 * (lb + ub);
    out.max_violation = qp_detail::max_violation(s, out.x);
    if (out.max_violation > kTolFeas) {
      out.farkas = f;
      return out;
    }
  } else {
    double y;
    if (q > 0.0) {
      y = -c / q;
    } else if (c > 0.0) {
      y = lb;
    } else if (c < 0.0) {
      y = ub;
    } else {
      y = std::isfinite(lb) ? lb : (std::isfinite(ub) ? ub : 0.0);
    }
    out.x(0) = std::clamp(y, lb, ub);
    if (!std::isfinite(out.x(0))) {
      throw NotPositiveDefinite("qp_solve: unbounded one-dimensional problem");
    }
  }
  const double grad = q * out.x(0) + c;
  if (grad < 0.0 && ub_row >= 0 && out.x(0) >= ub) {
    z(ub_row) = -grad / s.R(ub_row, 0);
  } else if (grad > 0.0 && lb_row >= 0 && out.x(0) <= lb) {
    z(lb_row) = grad / -s.R(lb_row, 0);
  }
  unstack(s, z, 1, p.rows.rows(), out);
  out.status = QpStatus::kOptimal;
  out.max_violation = qp_detail::max_violation(s, out.x);
  finish(p, out);
  return out;
}

// Solves the KKT system of the rows whose slack is below their multiplier.
inline bool polish(const QpProblem& p, const Stacked& s, const Vector& w,
                   const Vector& z, QpResult& out) {
  const Eigen::Index n = p.c.size();
  std::vector<Eigen::Index> active;
  for (Eigen::Index r = 0; r < s.R.rows(); ++r)
    if (w(r) < z(r)) active.push_back(r);
  const auto na = static_cast<Eigen::Index>(active.size());
  Matrix K = Matrix::Zero(n + na, n + na);
  Vector rhs = Vector::Zero(n + na);
  K.topLeftCorner(n, n) = p.Q;
  rhs.head(n) = -p.c;
  for (Eigen::Index a = 0; a < na; ++a) {
    const Eigen::Index r = active[static_cast<std::size_t>(a)];
    K.block(n + a, 0, 1, n) = s.R.row(r);
    K.block(0, n + a, n, 1) = s.R.row(r).transpose();
    rhs(n + a) = s.d(r);
  }
  const Vector sol = K.completeOrthogonalDecomposition().solve(rhs);
  if (!sol.allFinite()) return false;
  Vector zp = Vector::Zero(s.R.rows());
  for (Eigen::Index a = 0; a < na; ++a) {
    const double v = sol(n + a);
    if (v < -1e-10) return false;
    zp(active[static_cast<std::size_t>(a)]) = std::max(v, 0.0);
  }
  QpResult cand;
  cand.x = sol.head(n);
  cand.max_violation = qp_detail::max_violation(s, cand.x);
  if (cand.max_violation > 1e-10 * (1.0 + s.d.cwiseAbs().maxCoeff()))
    return false;
  unstack(s, zp, n, p.rows.rows(), cand);
  finish(p, cand);
  if (!(cand.kkt_residual <= out.kkt_residual)) return false;
  cand.status = QpStatus::kOptimal;
  cand.iterations = out.iterations;
  cand.polished = true;
  out = std::move(cand);
  return true;
}

}  // namespace qp_detail

inline QpResult qp_solve(const QpProblem& p, const QpOptions& options = {}) {
  using namespace qp_detail;
  const Eigen::Index n = p.c.size();
  require(p.Q.rows() == n && p.Q.cols() == n, "qp_solve: Q must be n x n");
  require(p.rows.cols() == n || p.rows.rows() == 0,
          "qp_solve: constraint rows must have n columns");
  require(p.rhs.size() == p.rows.rows(), "qp_solve: rhs size mismatch");
  require(p.lower.size() == 0 || p.lower.size() == n, "qp_solve: lower size");
  require(p.upper.size() == 0 || p.upper.size() == n, "qp_solve: upper size");
  const double qscale = 1.0 + p.Q.cwiseAbs().maxCoeff();
  if ((p.Q - p.Q.transpose()).cwiseAbs().maxCoeff() > 1e-10 * qscale)
    throw NotPositiveDefinite("qp_solve: Q is not symmetric");
  if (!options.allow_semidefinite) {
    Eigen::LLT<Matrix> llt(p.Q);
    if (llt.info() != Eigen::Success ||
        llt.matrixL().toDenseMatrix().diagonal().minCoeff() <=
            1e-12 * std::sqrt(qscale))
      throw NotPositiveDefinite("qp_solve: Q is not positive definite");
  } else if (n > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(p.Q, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10 * qscale)
      throw NotPositiveDefinite("qp_solve: Q is not positive semidefinite");
  }

  const Vector lo = bound_or(p.lower, n, -kInf);
  const Vector up = bound_or(p.upper, n, kInf);
  const Stacked s = stack_rows(p, lo, up);
  const Eigen::Index m = s.R.rows();
  if (n == 1) return solve_scalar(p, s);

  QpResult out;
  if (m == 0) {
    out.x = p.Q.ldlt().solve(-p.c);
    out.status = QpStatus::kOptimal;
    unstack(s, Vector::Zero(0), n, p.rows.rows(), out);
    finish(p, out);
    return out;
  }

  Vector x = Vector::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::isfinite(lo(j)) && std::isfinite(up(j))) {
      x(j) = 0.5 * (lo(j) + up(j));
    } else if (std::isfinite(lo(j))) {
      x(j) = std::max(0.0, lo(j) + 1.0);
    } else if (std::isfinite(up(j))) {
      x(j) = std::min(0.0, up(j) - 1.0);
    }
  }
  Vector w = (s.d - s.R * x).cwiseMax(1.0);
  Vector z = Vector::Ones(m);
  const double cnorm = 1.0 + p.c.cwiseAbs().maxCoeff();
  const double dnorm = 1.0 + s.d.cwiseAbs().maxCoeff();
  const Matrix Rt = s.R.transpose();

  auto solve_newton = [&](const Vector& rd, const Vector& rp, const Vector& rc,
                          const Eigen::LLT<Matrix>& llt, Vector& dx,
                          Vector& dw, Vector& dz) {
    const Vector t = (rc + z.cwiseProduct(rp)).cwiseQuotient(w);
    dx = llt.solve(-rd - Rt * t);
    dw = -rp - s.R * dx;
    dz = (rc - z.cwiseProduct(dw)).cwiseQuotient(w);
  };
  auto max_step = [&](const Vector& dw, const Vector& dz) {
    double a = 1.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      if (dw(i) < 0.0) a = std::min(a, -w(i) / dw(i));
      if (dz(i) < 0.0) a = std::min(a, -z(i) / dz(i));
    }
    return a;
  };

  bool converged = false;
  int it = 0;
  double best_merit = std::numeric_limits<double>::infinity();
  Vector best_x = x, best_w = w, best_z = z;
  for (; it < options.max_iterations; ++it) {
    const Vector rd = p.Q * x + p.c + Rt * z;
    const Vector rp = s.R * x + w - s.d;
    const double mu = w.dot(z) / static_cast<double>(m);
    const double rd_rel = rd.cwiseAbs().maxCoeff() / cnorm;
    const double rp_rel = rp.cwiseAbs().maxCoeff() / dnorm;
    const double merit = std::max({rd_rel, rp_rel, mu});
    if (merit < best_merit) {
      best_merit = merit;
      best_x = x;
      best_w = w;
      best_z = z;
    }
    if (rd_rel <= options.tolerance && rp_rel <= options.tolerance &&
        mu <= 1e-2 * options.tolerance) {
      converged = true;
      break;
    }
    // Past this point roundoff dominates and further steps only degrade.
    if (mu < 1e-18 * (1.0 + std::abs(s.d.dot(z)))) break;
    const double znorm = z.sum();
    if (znorm > 1e8) {
      const Vector zt = z / znorm;
      if ((Rt * zt).cwiseAbs().maxCoeff() <= 1e-9 &&
          s.d.dot(zt) < -1e-9 * dnorm) {
        out.farkas = zt;
        break;
      }
    }
    Matrix N = p.Q;
    N.noalias() += Rt * z.cwiseQuotient(w).asDiagonal() * s.R;
    Eigen::LLT<Matrix> llt(N);
    double reg = 1e-14 * (1.0 + N.diagonal().cwiseAbs().maxCoeff());
    while (llt.info() != Eigen::Success && reg < 1e6) {
      llt.compute(N + reg * Matrix::Identity(n, n));
      reg *= 100.0;
    }
    Vector dx, dw, dz;
    solve_newton(rd, rp, -w.cwiseProduct(z), llt, dx, dw, dz);
    const double a_aff = max_step(dw, dz);
    const double mu_aff =
        (w + a_aff * dw).dot(z + a_aff * dz) / static_cast<double>(m);
    const double sigma = std::pow(mu_aff / mu, 3.0);
    const Vector rc = -w.cwiseProduct(z) - dw.cwiseProduct(dz) +
                      Vector::Constant(m, sigma * mu);
    solve_newton(rd, rp, rc, llt, dx, dw, dz);
    const double a = std::min(1.0, 0.995 * max_step(dw, dz));
    x += a * dx;
    w += a * dw;
    z += a * dz;
    w = w.cwiseMax(1e-300);
    z = z.cwiseMax(1e-300);
  }
  out.iterations = it;
  if (!converged) {
    x = best_x;
    w = best_w;
    z = best_z;
    converged = best_merit <= std::sqrt(options.tolerance);
  }
  out.x = x;
  out.max_violation = qp_detail::max_violation(s, x);
  const bool primal_ok =
      out.farkas.size() == 0 &&
      (s.R * x - s.d).maxCoeff() <= std::max(1e-7 * dnorm, 1e-9);
  if (!converged && !primal_ok) {
    out.status = QpStatus::kInfeasible;
    unstack(s, z, n, p.rows.rows(), out);
    return out;
  }
  out.status = QpStatus::kOptimal;
  unstack(s, z, n, p.rows.rows(), out);
  finish(p, out);
  if (options.polish) polish(p, s, w, z, out);
  return out;
}

}  // namespace drgne

#endif  // DRGNE_QP_HPP_
