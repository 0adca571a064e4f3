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

#ifndef DRGNE_WASSERSTEIN_DRCC_HPP_
#define DRGNE_WASSERSTEIN_DRCC_HPP_

// Feasibility of a distributionally robust chance constraint
//
//   inf over P in the Wasserstein ball of radius theta around the empirical
//   distribution of xi_1..xi_K:  P[A x < beta xi + b] >= 1 - epsilon.
//
// The constraint holds iff the cheapest way to move epsilon*K units of sample
// mass into the unsafe set {xi : A x >= beta xi + b} costs at least theta*K.
// Per-sample distances to that set have a closed form, so the whole test is a
// sort.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "drgne/types.hpp"

namespace drgne {

enum class NormOrder { kL1, kL2, kLinf };

inline NormOrder parse_norm(const std::string& name) {
  if (name == "1" || name == "l1" || name == "L1") return NormOrder::kL1;
  if (name == "2" || name == "l2" || name == "L2") return NormOrder::kL2;
  if (name == "inf" || name == "linf" || name == "Linf" || name == "infinity")
    return NormOrder::kLinf;
  throw InvalidProblem("unknown norm order '" + name + "'");
}

inline std::string norm_name(NormOrder order) {
  switch (order) {
    case NormOrder::kL1:
      return "1";
    case NormOrder::kL2:
      return "2";
    case NormOrder::kLinf:
      return "inf";
  }
  return "2";
}

// Samples are stored one per row.
struct SampleSet {
  Matrix xi;

  std::size_t size() const { return static_cast<std::size_t>(xi.rows()); }
  Eigen::Index dim() const { return xi.cols(); }
};

struct DrccSpec {
  Matrix A;     // m x n
  Matrix beta;  // m x l
  Vector b;     // m
  double epsilon = 0.05;
  double theta = 0.05;
  NormOrder norm = NormOrder::kL2;
  SampleSet samples;

  Eigen::Index rows() const { return A.rows(); }
  double epsilon_k() const {
    return epsilon * static_cast<double>(samples.size());
  }

  void validate(Eigen::Index n) const {
    require(A.cols() == n, "drcc: A must have one column per strategy entry");
    require(A.rows() >= 1, "drcc: at least one constraint row is required");
    require(beta.rows() == A.rows(), "drcc: beta must have as many rows as A");
    require(b.size() == A.rows(), "drcc: b must have as many entries as A rows");
    require(samples.size() >= 1, "drcc: at least one sample is required");
    require(samples.dim() == beta.cols(),
            "drcc: sample dimension must match the columns of beta");
    if (!(epsilon > 0.0 && epsilon < 1.0))
      throw InvalidProblem("drcc: epsilon must lie in (0, 1)");
    if (!(theta > 0.0) || !std::isfinite(theta))
      throw InvalidProblem("drcc: theta must be positive");
    for (Eigen::Index j = 0; j < beta.rows(); ++j)
      if (beta.row(j).cwiseAbs().maxCoeff() == 0.0)
        throw InvalidProblem("drcc: row " + std::to_string(j) +
                             " of beta is zero");
    if (!A.allFinite() || !beta.allFinite() || !b.allFinite() ||
        !samples.xi.allFinite())
      throw InvalidProblem("drcc: non-finite data");
  }
};

// Norm dual to `order`: 1 <-> inf, 2 <-> 2.
inline double dual_norm(const Vector& v, NormOrder order) {
  if (v.size() == 0) return 0.0;
  switch (order) {
    case NormOrder::kL1:
      return v.cwiseAbs().maxCoeff();
    case NormOrder::kL2:
      return v.norm();
    case NormOrder::kLinf:
      return v.cwiseAbs().sum();
  }
  return v.norm();
}

inline Vector row_dual_norms(const DrccSpec& spec) {
  Vector out(spec.beta.rows());
  for (Eigen::Index j = 0; j < spec.beta.rows(); ++j) {
    out(j) = dual_norm(spec.beta.row(j).transpose(), spec.norm);
    if (out(j) == 0.0)
      throw InvalidProblem("drcc: row " + std::to_string(j) +
                           " of beta is zero");
  }
  return out;
}

inline double point_distance(const Vector& x, std::size_t k,
                             const DrccSpec& spec) {
  require(x.size() == spec.A.cols(), "point_distance: profile size mismatch");
  require(k < spec.samples.size(), "point_distance: sample index out of range");
  const auto kk = static_cast<Eigen::Index>(k);
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < spec.A.rows(); ++j) {
    const double norm = dual_norm(spec.beta.row(j).transpose(), spec.norm);
    if (norm == 0.0)
      throw InvalidProblem("drcc: row " + std::to_string(j) +
                           " of beta is zero");
    const double slack = spec.beta.row(j).dot(spec.samples.xi.row(kk)) +
                         spec.b(j) - spec.A.row(j).dot(x);
    best = std::min(best, std::max(slack, 0.0) / norm);
  }
  return best;
}

inline Vector distances(const Vector& x, const DrccSpec& spec) {
  require(x.size() == spec.A.cols(), "distances: profile size mismatch");
  const Vector norms = row_dual_norms(spec);
  const Vector ax = spec.A * x;
  const Eigen::Index K = spec.samples.xi.rows();
  Vector d(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < spec.A.rows(); ++j) {
      const double slack =
          spec.beta.row(j).dot(spec.samples.xi.row(k)) + spec.b(j) - ax(j);
      best = std::min(best, std::max(slack, 0.0) / norms(j));
    }
    d(k) = best;
  }
  return d;
}

// Splits eps*K into its integer part and the fractional remainder.
inline std::pair<std::size_t, double> split_budget(double epsilon_k,
                                                   std::size_t K) {
  double whole = std::floor(epsilon_k + 1e-12);
  whole = std::min(whole, static_cast<double>(K));
  const double frac = std::max(0.0, epsilon_k - whole);
  return {static_cast<std::size_t>(whole), frac};
}

// Indices of `values` in ascending order, ties by index.
inline std::vector<std::size_t> ascending_order(const Vector& values) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return values(static_cast<Eigen::Index>(a)) <
           values(static_cast<Eigen::Index>(b));
  });
  return idx;
}

// Sum of the floor(eps K) smallest values plus the fractional share of the
// next one. Equals max over tau of (eps K tau - sum_k (tau - v_k)^+) for any
// real values, which is what the big-M checks rely on.
inline double smallest_mass(const Vector& values, double epsilon_k) {
  const auto K = static_cast<std::size_t>(values.size());
  require(K >= 1, "smallest_mass: empty value list");
  const auto [whole, frac] = split_budget(epsilon_k, K);
  const auto order = ascending_order(values);
  double mass = 0.0;
  for (std::size_t i = 0; i < whole; ++i)
    mass += values(static_cast<Eigen::Index>(order[i]));
  if (whole < K && frac > 0.0)
    mass += frac * values(static_cast<Eigen::Index>(order[whole]));
  return mass;
}

inline double distance_mass(const Vector& x, const DrccSpec& spec) {
  return smallest_mass(distances(x, spec), spec.epsilon_k());
}

inline bool drcc_feasible(const Vector& x, const DrccSpec& spec) {
  const double K = static_cast<double>(spec.samples.size());
  return distance_mass(x, spec) >= spec.theta * K - kTolFeas;
}

struct DualCertificate {
  double tau = 0.0;
  Vector s;

  double objective(double epsilon_k) const {
    return epsilon_k * tau - s.sum();
  }
};

// Optimal dual pair of the transport LP for arbitrary per-sample values.
inline DualCertificate certificate_from_values(const Vector& values,
                                               double epsilon_k) {
  const auto K = static_cast<std::size_t>(values.size());
  require(K >= 1, "dual_certificate: empty value list");
  const auto order = ascending_order(values);
  const auto whole = split_budget(epsilon_k, K).first;
  DualCertificate cert;
  cert.tau = values(static_cast<Eigen::Index>(order[std::min(whole, K - 1)]));
  cert.s = (Vector::Constant(values.size(), cert.tau) - values).cwiseMax(0.0);
  return cert;
}

inline DualCertificate dual_certificate(const Vector& x, const DrccSpec& spec) {
  return certificate_from_values(distances(x, spec), spec.epsilon_k());
}

// Concentration-bound radius C (log(1/eps) / K)^(1 / max(dim, 2)), where dim
// is the dimension of the uncertainty.
inline double radius_hint(double epsilon, std::size_t K, double C,
                          Eigen::Index dim) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw InvalidProblem("radius_hint: epsilon must lie in (0, 1)");
  if (!(C > 0.0)) throw InvalidProblem("radius_hint: C must be positive");
  require(K >= 1, "radius_hint: K must be positive");
  const double power = 1.0 / static_cast<double>(std::max<Eigen::Index>(dim, 2));
  return C * std::pow(std::log(1.0 / epsilon) / static_cast<double>(K), power);
}

// Reads one sample per non-empty line, whitespace separated. Lines starting
// with '#' are comments.
inline SampleSet parse_samples(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    std::vector<double> row;
    std::string token;
    while (ss >> token) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size() || !std::isfinite(v))
        throw InvalidProblem("samples line " + std::to_string(line_no) +
                             ": cannot parse '" + token + "'");
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw InvalidProblem("samples line " + std::to_string(line_no) +
                           ": expected " + std::to_string(rows.front().size()) +
                           " values, found " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidProblem("samples: no samples found");
  SampleSet set;
  set.xi.resize(static_cast<Eigen::Index>(rows.size()),
                static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t c = 0; c < rows[k].size(); ++c)
      set.xi(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) =
          rows[k][c];
  return set;
}

}  // namespace drgne

#endif  // DRGNE_WASSERSTEIN_DRCC_HPP_
