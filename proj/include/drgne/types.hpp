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

#ifndef DRGNE_TYPES_HPP_
#define DRGNE_TYPES_HPP_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace drgne {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Absolute tolerance for every linear feasibility check.
inline constexpr double kTolFeas = 1e-9;
// "Residual is zero" threshold for equilibrium verdicts.
inline constexpr double kTolEq = 1e-6;

// Thrown for malformed or inconsistent input data.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidProblem : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NotPositiveDefinite : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A convex subproblem turned out to have an empty feasible set.
class InfeasibleSubproblem : public std::runtime_error {
 public:
  InfeasibleSubproblem(std::size_t agent, double violation,
                       const std::string& what)
      : std::runtime_error(what), agent_(agent), violation_(violation) {}
  std::size_t agent() const { return agent_; }
  double violation() const { return violation_; }

 private:
  std::size_t agent_;
  double violation_;
};

class InfeasibleProblem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw DimensionError(message);
}

}  // namespace drgne

#endif  // DRGNE_TYPES_HPP_
