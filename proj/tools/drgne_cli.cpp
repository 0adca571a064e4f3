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


// drgne command-line driver.
//
// Exit codes: 0 equilibrium found or certified, 2 no equilibrium (or not
// certified), 3 inconclusive, 1 usage, parse or input errors.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "drgne/drgne.hpp"

namespace {

using drgne::Json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNegative = 2;
constexpr int kExitInconclusive = 3;

struct Common {
  std::string problem;
  std::string samples;
  std::optional<double> epsilon;
  std::optional<double> theta;
  std::uint64_t seed = 42;
  double tol = drgne::kTolEq;
  int max_starts = 16;
  long enum_threshold = 12;
  int threads = 1;
  std::size_t max_nodes = 4096;
  std::string out;
  bool quiet = false;
};

void add_solver_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--epsilon", c.epsilon, "Override the violation level");
  cmd->add_option("--theta", c.theta, "Override the Wasserstein radius");
  cmd->add_option("--seed", c.seed, "Seed for sampling and multistart")
      ->capture_default_str();
  cmd->add_option("--tol", c.tol, "Residual tolerance for GNE verdicts")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-starts", c.max_starts, "Starts per node")
      ->capture_default_str()
      ->check(CLI::Range(1, 1 << 20));
  cmd->add_option("--enum-threshold", c.enum_threshold,
                  "Largest K solved by full enumeration")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--threads", c.threads, "Worker threads for multistart")
      ->capture_default_str()
      ->check(CLI::Range(1, 256));
  cmd->add_option("--max-nodes", c.max_nodes, "Budget of solved q nodes")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", c.out, "Output file (default: stdout)");
  cmd->add_flag("--quiet", c.quiet, "Suppress the summary line");
}

void add_problem_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--problem", c.problem, "Problem JSON file")->required();
  cmd->add_option("--samples", c.samples,
                  "Sample file, one sample per line (replaces embedded samples)");
}

drgne::SolverOptions solver_options(const Common& c) {
  drgne::SolverOptions o;
  o.tol_eq = c.tol;
  o.multistart = c.max_starts;
  o.enum_threshold = c.enum_threshold;
  o.seed = c.seed;
  o.threads = c.threads;
  o.max_nodes = c.max_nodes;
  return o;
}

drgne::GnepProblem load(const Common& c) {
  drgne::GnepProblem g = drgne::load_problem(c.problem, c.samples.empty());
  if (!c.samples.empty()) g.drcc.samples = drgne::load_samples(c.samples);
  if (c.epsilon) g.drcc.epsilon = *c.epsilon;
  if (c.theta) g.drcc.theta = *c.theta;
  g.validate();
  return g;
}

void emit(const Common& c, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(c.out, std::ios::binary);
  if (!f) throw drgne::ParseError(c.out + ": cannot write file");
  f << text;
}

void summary(const Common& c, const std::string& line) {
  if (!c.quiet && !c.out.empty()) std::cout << line << "\n";
}

int exit_for(drgne::Status s) {
  switch (s) {
    case drgne::Status::kGne:
      return kExitOk;
    case drgne::Status::kNonExistence:
      return kExitNegative;
    case drgne::Status::kInconclusive:
      return kExitInconclusive;
  }
  return kExitInconclusive;
}

int cmd_solve(const Common& c) {
  const drgne::GnepProblem g = load(c);
  const drgne::EquilibriumResult r = drgne::solve(g, solver_options(c));
  emit(c, drgne::to_text(drgne::result_to_json(r)));
  summary(c, drgne::status_name(r.status) +
                 " residual=" + drgne::format_number(r.residual));
  return exit_for(r.status);
}

int cmd_check(const Common& c, const std::string& point) {
  const drgne::GnepProblem g = load(c);
  const drgne::Vector x = drgne::load_point(point);
  if (x.size() != g.total_dim())
    throw drgne::ParseError(point + ": point has " + std::to_string(x.size()) +
                            " entries, the problem has " +
                            std::to_string(g.total_dim()));
  const drgne::BigMSystem sys = drgne::assemble(g);
  const drgne::CertifyReport rep = drgne::certify(g, sys, x, c.tol);
  emit(c, drgne::to_text(drgne::certify_to_json(rep)));
  if (!c.quiet) {
    std::cerr << "distance mass " << drgne::format_number(rep.mass)
              << " vs theta*K " << drgne::format_number(rep.required) << "\n";
    for (std::size_t i = 0; i < rep.residual.gaps.size(); ++i)
      std::cerr << "agent " << i << " gap "
                << drgne::format_number(rep.residual.gaps[i]) << "\n";
    if (!rep.certified) std::cerr << "not certified: " << rep.reason << "\n";
  }
  return rep.certified ? kExitOk : kExitNegative;
}

struct CaseFlags {
  std::vector<int> stations{3, 5, 10, 25, 50};
  std::optional<double> u_lower;
  std::optional<double> n0_first;
  bool tune_theta = false;
  std::size_t draws = 100000;
};

drgne::CaseStudyConfig case_config(const Common& c, const CaseFlags& f) {
  drgne::CaseStudyConfig cfg;
  cfg.solver = solver_options(c);
  cfg.base.seed = c.seed;
  if (c.epsilon) cfg.base.epsilon = *c.epsilon;
  if (c.theta) cfg.base.theta = *c.theta;
  if (f.u_lower) cfg.base.u_lower = *f.u_lower;
  if (f.n0_first) cfg.base.N0(0) = *f.n0_first;
  cfg.base.validate();
  return cfg;
}

int cmd_casestudy(const std::string& which, const Common& c, const CaseFlags& f) {
  const drgne::CaseStudyConfig cfg = case_config(c, f);
  if (which == "table1") {
    const drgne::Table1Report t = drgne::run_table1(cfg);
    emit(c, drgne::to_text(drgne::table1_to_json(t)));
    for (const auto& row : t.rows)
      summary(c, row.parameter + "=" + drgne::format_number(row.value) + " " +
                     drgne::status_name(row.result.status));
    return kExitOk;
  }
  if (which == "sweep") {
    const auto rows = drgne::run_sweep(f.stations, cfg);
    emit(c, drgne::sweep_to_csv(rows));
    return kExitOk;
  }
  if (which == "validate") {
    const auto rows = drgne::run_validate(cfg, f.draws);
    emit(c, drgne::to_text(drgne::validation_to_json(rows)));
    bool ok = true;
    for (const auto& r : rows) {
      ok &= r.within_bound;
      if (r.violation)
        summary(c, r.parameter + "=" + drgne::format_number(r.value) +
                       " violation " + drgne::format_number(r.violation->estimate) +
                       " bound " +
                       drgne::format_number(r.epsilon +
                                            3.0 * r.violation->standard_error));
    }
    return ok ? kExitOk : kExitNegative;
  }
  // export: problem file for one market.
  drgne::CsMarketParams p = cfg.base;
  if (f.stations.size() == 1 && f.stations[0] != p.I) {
    p = drgne::CsMarketParams::symmetric(f.stations[0]);
    p.epsilon = cfg.base.epsilon;
    p.theta = cfg.base.theta;
    p.u_lower = cfg.base.u_lower;
    p.seed = cfg.base.seed;
    if (f.n0_first) p.N0(0) = *f.n0_first;
  }
  if (f.tune_theta) p.theta = drgne::binding_theta(p);
  emit(c, drgne::to_text(drgne::problem_to_json(drgne::build_gnep(p))));
  return kExitOk;
}

int cmd_dump_system(const Common& c) {
  const drgne::GnepProblem g = load(c);
  const drgne::BigMSystem sys = drgne::assemble(g);
  const drgne::LinearSystem ls = drgne::relax_canonical(sys);
  Json j = {{"M", drgne::io_detail::num(sys.M)},
            {"K", sys.K},
            {"m", sys.m},
            {"n", sys.n},
            {"epsilon_k", drgne::io_detail::num(sys.epsilon_k())},
            {"h1_bound", drgne::io_detail::num(sys.h1_bound())},
            {"row_scale", drgne::io_detail::vec(sys.row_scale)},
            {"rows", drgne::io_detail::mat(ls.rows)},
            {"rhs", drgne::io_detail::vec(ls.rhs)},
            {"lower", drgne::io_detail::vec(ls.lower)},
            {"upper", drgne::io_detail::vec(ls.upper)}};
  emit(c, drgne::to_text(j));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven generalized Nash equilibrium solver"};
  app.require_subcommand(1);
  Common c;
  CaseFlags f;
  std::string point;
  std::string which;

  CLI::App* solve = app.add_subcommand("solve", "Search for an equilibrium");
  add_problem_flags(solve, c);
  add_solver_flags(solve, c);

  CLI::App* check = app.add_subcommand("check", "Certify a candidate profile");
  add_problem_flags(check, c);
  add_solver_flags(check, c);
  check->add_option("--point", point, "JSON file with the profile under \"x\"")
      ->required();

  CLI::App* cs = app.add_subcommand("casestudy", "Charging-station experiments");
  cs->add_option("which", which, "table1, sweep, validate or export")
      ->required()
      ->check(CLI::IsMember({"table1", "sweep", "validate", "export"}));
  add_solver_flags(cs, c);
  cs->add_option("--I", f.stations, "Station counts (sweep) or count (export)")
      ->delimiter(',');
  cs->add_option("--u-lower", f.u_lower, "Demand floor");
  cs->add_option("--n0-first", f.n0_first, "Initial EVs at station 1");
  cs->add_flag("--tune-theta", f.tune_theta,
               "Export with a radius at which the shared constraint binds");
  cs->add_option("--draws", f.draws, "Monte Carlo draws for validate")
      ->check(CLI::Range(std::size_t{10000}, std::size_t{100000000}));

  CLI::App* dump = app.add_subcommand("dump-system", "Print the big-M system");
  add_problem_flags(dump, c);
  add_solver_flags(dump, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (solve->parsed()) return cmd_solve(c);
    if (check->parsed()) return cmd_check(c, point);
    if (dump->parsed()) return cmd_dump_system(c);
    if (which != "sweep" && which != "export" && cs->count("--I") > 0)
      throw drgne::InvalidProblem("--I applies to sweep and export only");
    return cmd_casestudy(which, c, f);
  } catch (const drgne::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return kExitError;
}
