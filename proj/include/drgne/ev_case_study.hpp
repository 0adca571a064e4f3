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

#ifndef DRGNE_EV_CASE_STUDY_HPP_
#define DRGNE_EV_CASE_STUDY_HPP_

// Charging-station pricing game.
//
// Station i sets a price c_i. Arrivals respond linearly,
// u_i = u0_i - alpha_u (c_i - c0), and the wholesale price responds to total
// demand, c^b = c0 + alpha_c sum_j (u_j - u0_j). Station i maximizes
// (c_i - c^b)(N0_i + u_i) E_d subject to 0 <= N0_i + u_i <= N_bar_i and a
// price box. The stations share a chance constraint on total demand,
// sum_i u_i >= u_lower + delta, with delta uncertain and observed through K
// samples.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "drgne/equilibrium_solver.hpp"
#include "drgne/game_model.hpp"
#include "drgne/rng.hpp"
#include "drgne/types.hpp"
#include "drgne/wasserstein_drcc.hpp"

namespace drgne {

// Distribution of the demand perturbation delta.
struct SamplerSpec {
  std::string distribution = "normal";  // "normal" or "uniform"
  double mean = -15.0;
  double sd = 5.0;
  double low = -25.0;  // uniform only
  double high = -5.0;

  void validate() const {
    if (distribution == "normal") {
      if (!(sd > 0.0) || !std::isfinite(mean))
        throw InvalidProblem("sampler: normal needs a finite mean and sd > 0");
    } else if (distribution == "uniform") {
      if (!(low < high)) throw InvalidProblem("sampler: uniform needs low < high");
    } else {
      throw InvalidProblem("sampler: unsupported distribution '" +
                           distribution + "'");
    }
  }

  double draw(const CounterRng& rng, std::uint64_t k) const {
    if (distribution == "normal") return mean + sd * rng.normal(k);
    return low + (high - low) * rng.uniform(k);
  }
};

struct CsMarketParams {
  int I = 3;
  Vector u0 = Vector::Constant(3, 50.0);
  Vector N0 = Vector::Zero(3);
  Vector N_bar = Vector::Constant(3, 50.0);
  double alpha_u = 500.0;
  double alpha_c = 5e-4;
  double c0 = 0.12;
  double u_lower = 80.0;
  double E_d = 1.0;
  double price_lower = 0.0;
  double price_upper = 1.0;
  double epsilon = 0.05;
  double theta = 0.05;
  std::size_t K = 10;
  std::uint64_t seed = 42;
  SamplerSpec sampler;

  // Symmetric market with I stations and default data.
  static CsMarketParams symmetric(int stations) {
    CsMarketParams p;
    p.I = stations;
    p.u0 = Vector::Constant(stations, 50.0);
    p.N0 = Vector::Zero(stations);
    p.N_bar = Vector::Constant(stations, 50.0);
    return p;
  }

  double a() const { return alpha_c * alpha_u; }
  Vector B() const { return N0 + u0; }
  double u_hat() const {
    return -u_lower + u0.sum() + alpha_u * c0 * static_cast<double>(I);
  }

  void validate() const {
    if (I < 1) throw InvalidProblem("market: I must be >= 1");
    if (u0.size() != I || N0.size() != I || N_bar.size() != I)
      throw InvalidProblem("market: u0, N0 and N_bar need one entry per station");
    if (!(alpha_u > 0.0)) throw InvalidProblem("market: alpha_u must be positive");
    if (!(1.0 + a() > 0.0))
      throw NotPositiveDefinite("market: 1 + alpha_c alpha_u must be positive");
    if (!(E_d > 0.0)) throw InvalidProblem("market: E_d must be positive");
    if (!(price_lower <= c0 && c0 <= price_upper))
      throw InvalidProblem("market: the price box must contain c0");
    if (!(epsilon > 0.0 && epsilon < 1.0))
      throw InvalidProblem("market: epsilon must lie in (0, 1)");
    if (!(theta > 0.0)) throw InvalidProblem("market: theta must be positive");
    if (K < 1) throw InvalidProblem("market: K must be >= 1");
    sampler.validate();
  }
};

inline SampleSet gen_samples(const SamplerSpec& spec, std::size_t K,
                             std::uint64_t seed) {
  spec.validate();
  require(K >= 1, "gen_samples: K must be >= 1");
  const CounterRng rng(seed, 0);
  SampleSet s;
  s.xi.resize(static_cast<Eigen::Index>(K), 1);
  for (std::size_t k = 0; k < K; ++k)
    s.xi(static_cast<Eigen::Index>(k), 0) = spec.draw(rng, k);
  return s;
}

inline GnepProblem build_gnep(const CsMarketParams& params,
                              const SampleSet& samples) {
  params.validate();
  const int I = params.I;
  const double a = params.a(), au = params.alpha_u, c0 = params.c0;
  const double Ed = params.E_d;
  const Vector B = params.B();
  GnepProblem g;
  for (int i = 0; i < I; ++i) {
    const Eigen::Index r = I - 1;
    // Deviation coordinates d = c - c0 first, then the shift to prices.
    const double Q = 2.0 * Ed * au * (1.0 + a);
    const double p0d = -Ed * (1.0 + a) * B(i);
    const Matrix Pd = Matrix::Constant(1, r, Ed * a * au);
    const Vector rhod = Vector::Constant(r, -Ed * a * B(i));
    AgentSpec s;
    s.Q = Matrix::Constant(1, 1, Q);
    s.p0 = Vector::Constant(1, p0d - Q * c0 - c0 * Pd.sum());
    s.P = Pd;
    s.rho = rhod - c0 * Pd.row(0).transpose();
    s.r0 = 0.5 * Q * c0 * c0 - c0 * p0d + c0 * c0 * Pd.sum() - c0 * rhod.sum();
    // Capacity 0 <= N0 + u <= N_bar, divided by alpha_u.
    s.H.resize(2, 1);
    s.H << -1.0, 1.0;
    s.g.resize(2);
    s.g << (params.N_bar(i) - B(i)) / au - c0, B(i) / au + c0;
    s.lower = Vector::Constant(1, params.price_lower);
    s.upper = Vector::Constant(1, params.price_upper);
    g.agents.push_back(s);
  }
  DrccSpec& d = g.drcc;
  d.A = Matrix::Constant(1, I, au);
  d.beta = Matrix::Constant(1, 1, -1.0);
  d.b = Vector::Constant(1, params.u_hat());
  d.epsilon = params.epsilon;
  d.theta = params.theta;
  d.norm = NormOrder::kL2;
  d.samples = samples;
  return g;
}

inline GnepProblem build_gnep(const CsMarketParams& params) {
  return build_gnep(params, gen_samples(params.sampler, params.K, params.seed));
}

// Station i's cost evaluated directly from the market model.
inline double station_cost(const CsMarketParams& params, int i,
                           const Vector& c) {
  const Vector d = c.array() - params.c0;
  const Vector u = params.u0 - params.alpha_u * d;
  const double cb = params.c0 + params.alpha_c * (u - params.u0).sum();
  return -(c(i) - cb) * (params.N0(i) + u(i)) * params.E_d;
}

// Interior equilibrium from the linear first-order conditions, or nullopt when
// a local constraint would be active there.
inline std::optional<Vector> closed_form_ne(const CsMarketParams& params) {
  params.validate();
  const int I = params.I;
  const double a = params.a(), au = params.alpha_u;
  Matrix M = Matrix::Constant(I, I, a * au);
  M.diagonal().setConstant(2.0 * (1.0 + a) * au);
  const Eigen::FullPivLU<Matrix> lu(M);
  if (!lu.isInvertible()) throw InvalidProblem("closed_form_ne: singular system");
  const Vector d = lu.solve((1.0 + a) * params.B());
  const Vector c = d.array() + params.c0;
  const Vector occupancy = params.B() - au * d;
  for (int i = 0; i < I; ++i) {
    if (!(occupancy(i) > 0.0 && occupancy(i) < params.N_bar(i))) return std::nullopt;
    if (!(c(i) > params.price_lower && c(i) < params.price_upper)) return std::nullopt;
  }
  return c;
}

// Nash equilibrium of the game without the shared constraint, by
// Gauss-Seidel over the local QPs (the game is strongly monotone).
inline Vector local_nash(const GnepProblem& g, int sweeps = 10000) {
  const Box box = box_hull(g);
  Vector x = 0.5 * (box.lower + box.upper);
  for (int s = 0; s < sweeps; ++s) {
    double change = 0.0;
    for (std::size_t i = 0; i < g.num_agents(); ++i) {
      const AgentSpec& a = g.agents[i];
      const QpProblem qp{a.Q, a.p0 + a.P * g.rivals(x, i), a.H, a.g, a.lower,
                         a.upper};
      const QpResult r = qp_solve(qp);
      if (!r.ok()) throw InfeasibleSubproblem(i, r.max_violation,
                                              "local_nash: empty local set");
      change = std::max(change, (r.x - g.block(x, i)).cwiseAbs().maxCoeff());
      x = g.with_block(x, i, r.x);
    }
    if (change <= 1e-13) break;
  }
  return x;
}

// Radius large enough that the constraint-free equilibrium violates the
// shared constraint: twice its distance mass over K, or the configured theta
// if that is already larger.
inline double binding_theta(const CsMarketParams& params) {
  const GnepProblem g = build_gnep(params);
  const Vector xbar = local_nash(g);
  const double mass = distance_mass(xbar, g.drcc);
  return std::max(params.theta,
                  2.0 * mass / static_cast<double>(g.drcc.samples.size()));
}

struct ViolationEstimate {
  double estimate = 0.0;
  double ci_lower = 0.0;  // 95% Wilson interval
  double ci_upper = 0.0;
  double standard_error = 0.0;
  std::size_t draws = 0;
};

// Fraction of fresh delta draws for which total demand falls below the floor.
// Draws come from stream 1 of the generator, disjoint from the samples.
inline ViolationEstimate monte_carlo_violation(const Vector& c,
                                               const CsMarketParams& params,
                                               const SamplerSpec& truth,
                                               std::size_t N,
                                               std::uint64_t seed) {
  require(N >= 10000, "monte_carlo_violation: N must be at least 1e4");
  require(c.size() == params.I, "monte_carlo_violation: price vector size");
  truth.validate();
  const CounterRng rng(seed, 1);
  const double load = params.alpha_u * c.sum();
  const double u_hat = params.u_hat();
  std::size_t hits = 0;
  for (std::size_t k = 0; k < N; ++k)
    if (load > -truth.draw(rng, k) + u_hat) ++hits;
  ViolationEstimate v;
  const double n = static_cast<double>(N);
  const double p = static_cast<double>(hits) / n;
  const double z = 1.959963984540054;
  const double denom = 1.0 + z * z / n;
  const double centre = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  v.estimate = p;
  v.ci_lower = std::max(0.0, centre - half);
  v.ci_upper = std::min(1.0, centre + half);
  v.standard_error = std::sqrt(p * (1.0 - p) / n);
  v.draws = N;
  return v;
}

// ---------------------------------------------------------------------------
// Experiment runners.

struct CaseStudyConfig {
  CsMarketParams base;
  SolverOptions solver;
};

struct Table1Row {
  std::string parameter;  // "N1_0", "u_lower" or "epsilon"
  double value = 0.0;
  double theta = 0.0;
  bool theta_tuned = false;
  EquilibriumResult result;
  std::optional<Vector> closed_form;
};

struct Table1Report {
  std::vector<Table1Row> rows;
};

// Parameters of one experiment row. The high-floor and tight-epsilon rows get
// a radius at which the shared constraint binds at the constraint-free
// equilibrium; the crowded-station row already binds at the default radius.
inline std::pair<CsMarketParams, bool> table1_params(const CsMarketParams& base,
                                                     const std::string& parameter,
                                                     double value) {
  CsMarketParams p = base;
  bool tune = false;
  if (parameter == "N1_0") {
    p.N0(0) = value;
    tune = value >= 45.0;
  } else if (parameter == "u_lower") {
    p.u_lower = value;
    tune = value >= 90.0;
  } else if (parameter == "epsilon") {
    p.epsilon = value;
    tune = value <= 0.01;
  } else {
    throw InvalidProblem("table1: unknown parameter '" + parameter + "'");
  }
  if (tune) p.theta = binding_theta(p);
  return {p, tune};
}

inline std::vector<std::pair<std::string, double>> table1_grid() {
  return {{"N1_0", 15.0},    {"N1_0", 30.0},    {"N1_0", 45.0},
          {"u_lower", 50.0}, {"u_lower", 70.0}, {"u_lower", 90.0},
          {"epsilon", 0.1},  {"epsilon", 0.05}, {"epsilon", 0.01}};
}

inline Table1Report run_table1(const CaseStudyConfig& config) {
  Table1Report report;
  for (const auto& [parameter, value] : table1_grid()) {
    const auto [params, tuned] = table1_params(config.base, parameter, value);
    Table1Row row;
    row.parameter = parameter;
    row.value = value;
    row.theta = params.theta;
    row.theta_tuned = tuned;
    row.result = solve(build_gnep(params), config.solver);
    row.closed_form = closed_form_ne(params);
    report.rows.push_back(std::move(row));
  }
  return report;
}

struct SweepRow {
  int I = 0;
  double price = 0.0;  // mean equilibrium price
  double residual = 0.0;
  Status status = Status::kInconclusive;
  double wall_ms = 0.0;
};

inline std::vector<SweepRow> run_sweep(const std::vector<int>& stations,
                                       const CaseStudyConfig& config) {
  std::vector<SweepRow> rows;
  for (int I : stations) {
    CsMarketParams p = CsMarketParams::symmetric(I);
    p.alpha_u = config.base.alpha_u;
    p.alpha_c = config.base.alpha_c;
    p.c0 = config.base.c0;
    p.u_lower = config.base.u_lower;
    p.E_d = config.base.E_d;
    p.epsilon = config.base.epsilon;
    p.theta = config.base.theta;
    p.K = config.base.K;
    p.seed = config.base.seed;
    p.sampler = config.base.sampler;
    const EquilibriumResult r = solve(build_gnep(p), config.solver);
    SweepRow row;
    row.I = I;
    row.price = r.x_star.size() > 0 ? r.x_star.mean()
                                    : std::numeric_limits<double>::quiet_NaN();
    row.residual = r.residual;
    row.status = r.status;
    row.wall_ms = r.wall_ms;
    rows.push_back(row);
  }
  return rows;
}

struct ValidationRow {
  std::string parameter;
  double value = 0.0;
  double epsilon = 0.0;
  double theta = 0.0;
  Status status = Status::kInconclusive;
  Vector prices;
  std::optional<ViolationEstimate> violation;  // only at equilibria
  bool within_bound = true;  // estimate <= epsilon + 3 standard errors
};

// Re-solves every Table row with the radius from the concentration bound
// (C = 1) and estimates the out-of-sample violation at each equilibrium.
inline std::vector<ValidationRow> run_validate(const CaseStudyConfig& config,
                                               std::size_t N = 100000) {
  std::vector<ValidationRow> rows;
  for (const auto& [parameter, value] : table1_grid()) {
    CsMarketParams p = table1_params(config.base, parameter, value).first;
    p.theta = radius_hint(p.epsilon, p.K, 1.0, 1);
    const EquilibriumResult r = solve(build_gnep(p), config.solver);
    ValidationRow row;
    row.parameter = parameter;
    row.value = value;
    row.epsilon = p.epsilon;
    row.theta = p.theta;
    row.status = r.status;
    row.prices = r.x_star;
    if (r.status == Status::kGne) {
      row.violation = monte_carlo_violation(r.x_star, p, p.sampler, N, p.seed);
      row.within_bound = row.violation->estimate <=
                         p.epsilon + 3.0 * row.violation->standard_error;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace drgne

#endif  // DRGNE_EV_CASE_STUDY_HPP_
