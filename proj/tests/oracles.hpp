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

#ifndef DRGNE_TESTS_ORACLES_HPP_
#define DRGNE_TESTS_ORACLES_HPP_

// Independent reference implementations used only by the tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "drgne/qp.hpp"

namespace drgne::testing {

struct OracleSolution {
  bool feasible = false;
  Vector x;
  double objective = std::numeric_limits<double>::infinity();
};

// Brute-force QP: tries every active set of at most n rows of the stacked
// system [rows; I; -I], solves its equality-constrained KKT system and keeps
// the best primal-feasible point. Exact for strictly convex problems.
inline OracleSolution active_set_oracle(const QpProblem& p) {
  const Eigen::Index n = p.c.size();
  Matrix R(p.rows.rows() + 2 * n, n);
  Vector d(p.rows.rows() + 2 * n);
  R << p.rows, Matrix::Identity(n, n), -Matrix::Identity(n, n);
  d << p.rhs, p.upper, -p.lower;
  const Eigen::Index m = R.rows();
  OracleSolution best;
  std::vector<Eigen::Index> subset;
  std::function<void(Eigen::Index)> recurse = [&](Eigen::Index start) {
    const auto na = static_cast<Eigen::Index>(subset.size());
    Matrix K = Matrix::Zero(n + na, n + na);
    Vector rhs = Vector::Zero(n + na);
    K.topLeftCorner(n, n) = p.Q;
    rhs.head(n) = -p.c;
    for (Eigen::Index a = 0; a < na; ++a) {
      K.block(n + a, 0, 1, n) = R.row(subset[a]);
      K.block(0, n + a, n, 1) = R.row(subset[a]).transpose();
      rhs(n + a) = d(subset[a]);
    }
    Eigen::FullPivLU<Matrix> lu(K);
    if (lu.isInvertible()) {
      const Vector sol = lu.solve(rhs);
      const Vector x = sol.head(n);
      if ((R * x - d).maxCoeff() <= 1e-10) {
        const double obj = 0.5 * x.dot(p.Q * x) + p.c.dot(x);
        if (obj < best.objective) {
          best.feasible = true;
          best.objective = obj;
          best.x = x;
        }
      }
    }
    if (na == n) return;
    for (Eigen::Index r = start; r < m; ++r) {
      subset.push_back(r);
      recurse(r + 1);
      subset.pop_back();
    }
  };
  recurse(0);
  return best;
}

// Random strictly convex QP with a known interior point, n variables and
// `rows` general constraints.
inline QpProblem random_qp(std::mt19937_64& rng, Eigen::Index n,
                           Eigen::Index rows) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto rand_matrix = [&](Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng);
    return m;
  };
  QpProblem p;
  const Matrix L = rand_matrix(n, n);
  p.Q = L * L.transpose() + 0.1 * Matrix::Identity(n, n);
  p.c = 3.0 * rand_matrix(n, 1);
  p.lower = -Vector::Ones(n) - 0.5 * (rand_matrix(n, 1).array() + 1.0).matrix();
  p.upper = Vector::Ones(n) + 0.5 * (rand_matrix(n, 1).array() + 1.0).matrix();
  const Vector x0 = 0.5 * rand_matrix(n, 1);
  p.rows = rand_matrix(rows, n);
  p.rhs = Vector(rows);
  for (Eigen::Index r = 0; r < rows; ++r)
    p.rhs(r) = p.rows.row(r).dot(x0) + 0.5 * (u(rng) + 1.0);
  return p;
}

// Central finite-difference gradient.
inline Vector finite_difference(const std::function<double(const Vector&)>& f,
                                const Vector& x, double h = 1e-6) {
  Vector g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vector xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    g(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

// Transport LP value by direct maximization over the breakpoints tau = v_k of
// the concave dual objective eps K tau - sum (tau - v_k)^+.
inline double transport_value_bruteforce(const Vector& v, double epsilon_k) {
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < v.size(); ++t) {
    const double tau = v(t);
    best = std::max(best,
                    epsilon_k * tau -
                        (Vector::Constant(v.size(), tau) - v).cwiseMax(0.0).sum());
  }
  return best;
}

}  // namespace drgne::testing

#endif  // DRGNE_TESTS_ORACLES_HPP_
