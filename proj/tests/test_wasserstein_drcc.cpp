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

#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "drgne/wasserstein_drcc.hpp"
#include "oracles.hpp"

namespace drgne {
namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

DrccSpec scalar_spec(std::initializer_list<double> samples, double b = 10.0) {
  DrccSpec s;
  s.A = Matrix::Ones(1, 3);
  s.beta = Matrix::Ones(1, 1);
  s.b = Vector::Constant(1, b);
  s.samples.xi = vec(samples);
  return s;
}

TEST(DualNorm, PairsOneWithInfinity) {
  EXPECT_DOUBLE_EQ(dual_norm(vec({3, 4}), NormOrder::kL2), 5.0);
  EXPECT_DOUBLE_EQ(dual_norm(vec({1, -2}), NormOrder::kL1), 2.0);
  EXPECT_DOUBLE_EQ(dual_norm(vec({1, -2}), NormOrder::kLinf), 3.0);
  EXPECT_DOUBLE_EQ(dual_norm(vec({0, 0}), NormOrder::kL2), 0.0);
}

TEST(PointDistance, SingleRowExamples) {
  const Vector x = vec({3, 3, 4});
  EXPECT_DOUBLE_EQ(point_distance(x, 0, scalar_spec({2.0})), 2.0);
  EXPECT_DOUBLE_EQ(point_distance(x, 0, scalar_spec({-1.0})), 0.0);
}

TEST(PointDistance, TwoRowsDividedByTheirNorms) {
  DrccSpec s;
  s.A = Matrix::Zero(2, 1);
  s.beta = Matrix(2, 1);
  s.beta << 1.0, 2.0;
  s.b = vec({0.0, 0.0});
  s.samples.xi = Matrix::Constant(1, 1, 3.0);
  // slacks 3 and 6, norms 1 and 2 -> min(3, 3)
  EXPECT_DOUBLE_EQ(point_distance(Vector::Zero(1), 0, s), 3.0);
  s.b = vec({1.0, 0.0});
  EXPECT_DOUBLE_EQ(point_distance(Vector::Zero(1), 0, s), 3.0);
  s.b = vec({-1.0, 0.0});
  EXPECT_DOUBLE_EQ(point_distance(Vector::Zero(1), 0, s), 2.0);
}

TEST(PointDistance, ZeroBetaRowRejected) {
  DrccSpec s = scalar_spec({1.0});
  s.beta(0, 0) = 0.0;
  EXPECT_THROW(point_distance(vec({0, 0, 0}), 0, s), InvalidProblem);
}

TEST(SmallestMass, IntegerAndFractionalBudgets) {
  EXPECT_NEAR(smallest_mass(vec({3, 1, 2}), 1.0), 1.0, 1e-15);
  EXPECT_NEAR(smallest_mass(vec({3, 1, 2}), 1.5), 2.0, 1e-15);
  EXPECT_EQ(smallest_mass(vec({0, 0, 0}), 1.5), 0.0);
}

TEST(DrccFeasible, ThresholdArithmetic) {
  DrccSpec s = scalar_spec({1.0, 2.0, 3.0}, 0.0);
  s.A = Matrix::Zero(1, 1);
  s.epsilon = 1.0 / 3.0;
  s.theta = 0.3;
  EXPECT_NEAR(distance_mass(Vector::Zero(1), s), 1.0, 1e-15);
  EXPECT_TRUE(drcc_feasible(Vector::Zero(1), s));
  s.theta = 0.4;
  EXPECT_FALSE(drcc_feasible(Vector::Zero(1), s));
  s.theta = 1e-12;
  EXPECT_TRUE(drcc_feasible(Vector::Zero(1), s));
}

TEST(DualCertificate, HandExamples) {
  const Vector d = vec({1, 2, 3});
  const DualCertificate c = certificate_from_values(d, 1.0);
  EXPECT_DOUBLE_EQ(c.tau, 2.0);
  EXPECT_EQ(c.s, vec({1, 0, 0}));
  EXPECT_DOUBLE_EQ(c.objective(1.0), 1.0);
  const DualCertificate f = certificate_from_values(d, 1.5);
  EXPECT_DOUBLE_EQ(f.tau, 2.0);
  EXPECT_DOUBLE_EQ(f.objective(1.5), 2.0);
  const DualCertificate eq = certificate_from_values(Vector::Constant(4, 0.7), 2.5);
  EXPECT_DOUBLE_EQ(eq.tau, 0.7);
  EXPECT_EQ(eq.s.sum(), 0.0);
}

TEST(DualCertificateProperty, MatchesMassAndIsDualFeasible) {
  std::mt19937_64 rng(2026);
  std::uniform_int_distribution<int> kdist(1, 12), mdist(1, 3), ldist(1, 3),
      ndist(1, 4);
  std::uniform_real_distribution<double> u(-1.0, 1.0), eps(0.01, 0.99);
  double worst = 0.0;
  int fractional = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int K = kdist(rng), m = mdist(rng), l = ldist(rng), n = ndist(rng);
    DrccSpec s;
    s.A = Matrix::NullaryExpr(m, n, [&] { return u(rng); });
    s.beta = Matrix::NullaryExpr(m, l, [&] { return u(rng); });
    s.b = Vector::NullaryExpr(m, [&] { return 2.0 * u(rng); });
    s.samples.xi = Matrix::NullaryExpr(K, l, [&] { return u(rng); });
    s.epsilon = trial % 5 == 0 ? 1.0 / K : eps(rng);
    s.norm = static_cast<NormOrder>(trial % 3);
    const Vector x = Vector::NullaryExpr(n, [&] { return u(rng); });
    const Vector d = distances(x, s);
    const DualCertificate c = dual_certificate(x, s);
    const double mass = distance_mass(x, s);
    worst = std::max(worst, std::abs(c.objective(s.epsilon_k()) - mass));
    EXPECT_TRUE((c.s.array() >= 0.0).all());
    EXPECT_TRUE((d.array() >= (c.tau - c.s.array()) - 1e-15).all());
    EXPECT_NEAR(mass, testing::transport_value_bruteforce(d, s.epsilon_k()),
                1e-12);
    if (std::abs(s.epsilon_k() - std::round(s.epsilon_k())) > 1e-9)
      ++fractional;
  }
  EXPECT_LE(worst, 1e-12);
  EXPECT_GT(fractional, 100);
}

TEST(DistanceProperty, NonnegativeAndMonotoneInAx) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    DrccSpec s;
    s.A = Matrix::NullaryExpr(2, 3, [&] { return u(rng); });
    s.beta = Matrix::NullaryExpr(2, 2, [&] { return u(rng); });
    s.b = Vector::NullaryExpr(2, [&] { return u(rng); });
    s.samples.xi = Matrix::NullaryExpr(6, 2, [&] { return u(rng); });
    s.epsilon = 0.4;
    const Vector x = Vector::NullaryExpr(3, [&] { return u(rng); });
    const Vector d0 = distances(x, s);
    EXPECT_TRUE((d0.array() >= 0.0).all());
    for (Eigen::Index k = 0; k < d0.size(); ++k) {
      bool inside = false;
      for (Eigen::Index j = 0; j < 2; ++j)
        inside |= s.A.row(j).dot(x) >=
                  s.beta.row(j).dot(s.samples.xi.row(k)) + s.b(j);
      EXPECT_EQ(d0(k) == 0.0, inside);
    }
    // Shift b down by delta on row 0: equivalent to raising A_0 x.
    DrccSpec t = s;
    t.b(0) -= 0.3;
    const Vector d1 = distances(x, t);
    EXPECT_TRUE((d1.array() <= d0.array() + 1e-15).all());
    EXPECT_LE(distance_mass(x, t), distance_mass(x, s) + 1e-15);
  }
}

TEST(DistanceProperty, MassIsLinearBetweenKinks) {
  DrccSpec s;
  s.A = Matrix::Ones(1, 1);
  s.beta = Matrix::Ones(1, 1);
  s.b = vec({0.0});
  s.samples.xi = vec({1.0, 2.0, 4.0, 8.0});
  s.epsilon = 0.6;  // eps K = 2.4
  // Between x = -1 and x = 0 all slacks are positive and the order is fixed.
  const double a = distance_mass(Vector::Constant(1, -1.0), s);
  const double b = distance_mass(Vector::Constant(1, 0.0), s);
  const double mid = distance_mass(Vector::Constant(1, -0.5), s);
  EXPECT_NEAR(mid, 0.5 * (a + b), 1e-13);
  EXPECT_NEAR(a - b, 2.4, 1e-13);
}

TEST(RadiusHint, FormulaValues) {
  EXPECT_NEAR(radius_hint(std::exp(-1.0), 100, 1.0, 1), 0.1, 1e-15);
  EXPECT_NEAR(radius_hint(std::exp(-1.0), 16, 1.0, 4), 0.5, 1e-15);
  EXPECT_LT(radius_hint(0.05, 1000000, 1.0, 1), 0.002);
  EXPECT_THROW(radius_hint(1.0, 10, 1.0, 1), InvalidProblem);
  EXPECT_THROW(radius_hint(0.0, 10, 1.0, 1), InvalidProblem);
}

TEST(ParseSamples, ReadsRowsAndReportsBadLines) {
  std::istringstream good("# header\n1 2\n\n3 4\n");
  const SampleSet s = parse_samples(good);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.dim(), 2);
  EXPECT_EQ(s.xi(1, 0), 3.0);
  std::istringstream ragged("1 2\n3\n");
  EXPECT_THROW(parse_samples(ragged), InvalidProblem);
  std::istringstream junk("1 x\n");
  EXPECT_THROW(parse_samples(junk), InvalidProblem);
}

TEST(DrccSpecValidate, RejectsBadParameters) {
  DrccSpec s = scalar_spec({1.0});
  EXPECT_NO_THROW(s.validate(3));
  EXPECT_THROW(s.validate(2), DimensionError);
  s.epsilon = 1.0;
  EXPECT_THROW(s.validate(3), InvalidProblem);
  s.epsilon = 0.1;
  s.theta = 0.0;
  EXPECT_THROW(s.validate(3), InvalidProblem);
}

}  // namespace
}  // namespace drgne
