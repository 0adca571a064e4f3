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

#ifndef DRGNE_TESTS_FIXTURES_HPP_
#define DRGNE_TESTS_FIXTURES_HPP_

// Random games shared by several suites.

#include <algorithm>
#include <optional>
#include <vector>
#include <random>

#include "drgne/game_model.hpp"
#include "drgne/reformulation.hpp"

namespace drgne::testing {

struct GameShape {
  int agents = 2;
  int dim = 1;
  int samples = 4;
  int shared_rows = 1;
  // Offset added to b. Large values make the shared constraint slack
  // everywhere on the box.
  double b_offset = 0.5;
};

struct DrccInstance {
  DrccSpec spec;
  Box box;
  std::vector<Eigen::Index> dims;
};

// Random data with theta set near the median distance mass over the box, so
// both verdicts occur.
inline DrccInstance random_drcc_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> kd(1, 6), md(1, 3), nd(1, 4), ld(1, 2);
  std::uniform_real_distribution<double> u(-1.0, 1.0), eps(0.05, 0.95);
  DrccInstance inst;
  const int K = kd(rng), m = md(rng), n = nd(rng), l = ld(rng);
  for (int c = 0; c < n; ++c) inst.dims.push_back(1);
  DrccSpec& s = inst.spec;
  s.A = Matrix::NullaryExpr(m, n, [&] { return u(rng); });
  s.beta = Matrix::NullaryExpr(m, l, [&] { return u(rng); });
  s.b = Vector::NullaryExpr(m, [&] { return u(rng); });
  s.samples.xi = Matrix::NullaryExpr(K, l, [&] { return u(rng); });
  s.epsilon = eps(rng);
  s.norm = static_cast<NormOrder>(rng() % 3);
  inst.box.lower = Vector::NullaryExpr(n, [&] { return -1.0 + 0.5 * u(rng); });
  inst.box.upper = inst.box.lower + Vector::NullaryExpr(n, [&] {
                     return 0.1 + (u(rng) + 1.0);
                   });
  std::vector<double> masses;
  s.theta = 1.0;
  for (int t = 0; t < 21; ++t) {
    const Vector x = inst.box.lower + (inst.box.upper - inst.box.lower)
                                          .cwiseProduct(Vector::NullaryExpr(
                                              n, [&] { return 0.5 * (u(rng) + 1.0); }));
    masses.push_back(distance_mass(x, s));
  }
  std::nth_element(masses.begin(), masses.begin() + 10, masses.end());
  const double median = masses[10];
  s.theta = median > 0.0 ? median / K : 0.05;
  return inst;
}

inline Vector random_box_point(std::mt19937_64& rng, const Box& box) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return box.lower + (box.upper - box.lower)
                         .cwiseProduct(Vector::NullaryExpr(
                             box.lower.size(), [&] { return u(rng); }));
}

inline GnepProblem random_game(std::mt19937_64& rng, const GameShape& shape) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int I = shape.agents, d = shape.dim;
  const Eigen::Index n = I * d;
  GnepProblem g;
  for (int i = 0; i < I; ++i) {
    AgentSpec a;
    const Matrix L = Matrix::NullaryExpr(d, d, [&] { return u(rng); });
    a.Q = L * L.transpose() + Matrix::Identity(d, d);
    a.p0 = Vector::NullaryExpr(d, [&] { return u(rng); });
    a.P = 0.3 * Matrix::NullaryExpr(d, n - d, [&] { return u(rng); });
    a.rho = Vector::NullaryExpr(n - d, [&] { return u(rng); });
    a.r0 = u(rng);
    a.H = Matrix::NullaryExpr(1, d, [&] { return u(rng); });
    a.g = Vector::Constant(1, 0.8 + 0.2 * u(rng));
    a.lower = -Vector::Ones(d);
    a.upper = Vector::Ones(d);
    g.agents.push_back(a);
  }
  DrccSpec& s = g.drcc;
  s.A = Matrix::NullaryExpr(shape.shared_rows, n, [&] { return u(rng); });
  s.beta = Matrix::NullaryExpr(shape.shared_rows, 1, [&] {
    const double v = u(rng);
    return v >= 0 ? v + 0.5 : v - 0.5;
  });
  s.b = Vector::NullaryExpr(shape.shared_rows,
                            [&] { return 1.0 + shape.b_offset + 0.2 * u(rng); });
  s.samples.xi = 0.3 * Matrix::NullaryExpr(shape.samples, 1, [&] { return u(rng); });
  s.epsilon = 0.3;
  s.theta = 1.0;
  const double mass0 = distance_mass(Vector::Zero(n), s);
  s.theta = mass0 > 0.0 ? 0.5 * mass0 / shape.samples : 0.01;
  return g;
}

inline Vector random_point(std::mt19937_64& rng, const GnepProblem& g) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Box box = box_hull(g);
  return box.lower + (box.upper - box.lower)
                         .cwiseProduct(Vector::NullaryExpr(
                             box.lower.size(), [&] { return u(rng); }));
}

// A random profile satisfying every local constraint and the shared
// constraint, or nullopt after a bounded number of attempts.
inline std::optional<Vector> random_feasible_point(std::mt19937_64& rng,
                                                   const GnepProblem& g) {
  for (int attempt = 0; attempt < 200; ++attempt) {
    const Vector x = random_point(rng, g);
    bool ok = drcc_feasible(x, g.drcc);
    for (std::size_t i = 0; ok && i < g.num_agents(); ++i)
      ok = local_feasible(g, i, g.block(x, i)).feasible;
    if (ok) return x;
  }
  return std::nullopt;
}

}  // namespace drgne::testing

#endif  // DRGNE_TESTS_FIXTURES_HPP_
