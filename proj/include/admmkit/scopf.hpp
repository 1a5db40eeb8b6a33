// Copyright (c) 2026 admmkit contributors
// Licensed under the Apache License, Version 2.0.
//
// Security-constrained dispatch on a linearized (angle/susceptance) network
// model: case data, network matrices, and a penalty-coupled decomposition
// that alternates a base-dispatch update with independent per-outage
// subproblems, checked against a centralized stacked solve.

#ifndef ADMMKIT_SCOPF_HPP
#define ADMMKIT_SCOPF_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "admmkit/config.hpp"

namespace admmkit {

struct Bus {
  int id = 0;
  double demand = 0.0;  // MW
};

struct Branch {
  int from = 0;
  int to = 0;
  double susceptance = 1.0;  // p.u., > 0
  double limit = 0.0;        // MW flow magnitude cap
};

struct Generator {
  int bus = 0;
  double cost_a = 0.0;  // cost = cost_a * P^2 + cost_b * P
  double cost_b = 0.0;
  double pmin = 0.0;  // MW
  double pmax = 0.0;  // MW
  double ramp = 0.0;  // MW shift allowed between base and outage dispatch
};

struct PowerCase {
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;
  int slack_bus = 0;
};

/// Throws InvalidCase naming the violated requirement: unique bus ids, valid
/// branch endpoints, one slack bus, connected graph, susceptance > 0,
/// 0 <= pmin <= pmax, ramp >= 0, at least one generator.
void validate_case(const PowerCase& pcase);

PowerCase case_from_json(const nlohmann::json& j);
nlohmann::json case_to_json(const PowerCase& pcase);
PowerCase load_case(const std::string& path);
void save_case(const PowerCase& pcase, const std::string& path);

/// Branch indices (into PowerCase::branches) removed one per scenario.
using ContingencySet = std::vector<std::size_t>;

/// Network matrices for one topology (full bus dimension, no angle pinned).
struct DcMatrices {
  Eigen::MatrixXd b_bus;    // n x n susceptance-weighted graph Laplacian
  Eigen::MatrixXd b_f;      // L x n, row l = b_l * (e_from - e_to)'
  Eigen::MatrixXd gen_inc;  // n x G 0/1 bus-generator incidence
  std::vector<std::size_t> branch_indices;  // b_f row -> case branch index
  Eigen::VectorXd flow_limits;              // per in-service branch
};

/// Throws InvalidCase("...disconnected...") if removing the outage branch
/// disconnects the network.
DcMatrices build_dc_matrices(const PowerCase& pcase,
                             std::optional<std::size_t> outage = std::nullopt);

struct ScopfInstance {
  PowerCase network;
  ContingencySet contingencies;
  std::vector<DcMatrices> scenarios;  // [0] = intact topology, then one per outage
  Eigen::VectorXd demand;             // per bus, MW (shared by all scenarios)
  Eigen::VectorXd ramp;               // per generator
  std::vector<double> rho_scale;      // per outage scenario, multiplies cfg.rho
};

/// Validates the case, requires finite ramps when contingencies are present,
/// and materializes the per-scenario matrices.
ScopfInstance assemble_scopf(const PowerCase& pcase, const ContingencySet& contingencies);

struct ScenarioSolution {
  Eigen::VectorXd theta;  // bus angles, radians; slack entry exactly 0
  Eigen::VectorXd p_g;    // generation, MW
  Eigen::VectorXd flows;  // MW per in-service branch (order: branch_indices)
  Eigen::VectorXd slack;  // outage scenarios: the ramp slack in [0, 2*ramp]; empty for base
};

struct ScopfResult {
  IterationTrace trace;
  ConvergenceReport report;
  std::vector<ScenarioSolution> solutions;
};

/// One iteration's coupled state, for diagnostics and tests.
struct ScopfIterate {
  Eigen::VectorXd base_p;                    // P for the intact topology
  std::vector<Eigen::VectorXd> scenario_p;   // P per outage scenario
  std::vector<Eigen::VectorXd> scenario_slack;
  std::vector<Eigen::VectorXd> duals;        // scaled duals, one per outage scenario
};

using ScopfObserver = std::function<void(long k, const ScopfIterate& it)>;

/// Optional per-iteration penalty rescale hook for outage scenario c (1-based
/// as reported, passed 0-based here): returns the new penalty; off when empty.
using RhoRescale =
    std::function<double(long k, std::size_t scenario, double rho, double coupling_residual)>;

/// Alternates: (a) base dispatch minimizing generation cost plus the squared
/// coupling penalties, (b) independent per-outage dispatches minimizing their
/// coupling penalty, (c) scaled dual updates mu += P_base - P_c + slack_c - ramp.
/// Every scenario keeps its own hard constraints (nodal balance, flow caps,
/// generation bounds, slack box). Trace columns: objective = base generation
/// cost; primal_residual = max over scenarios of the coupling residual
/// infinity norm; dual_metric = cfg.rho * max block change (see source).
/// The report's final_x holds block 0 = base P, then [P_c; slack_c] per
/// scenario; final_multiplier stacks the scaled duals.
/// Throws InfeasibleScenario (naming the scenario) or Infeasible (base) when
/// a scenario's constraint system is infeasible on its own.
ScopfResult run_distributed_scopf(const ScopfInstance& inst, const SolverConfig& cfg,
                                  const ScopfObserver& observer = {},
                                  const RhoRescale& rho_rescale = {});

struct ScopfOracle {
  double objective = 0.0;
  std::vector<ScenarioSolution> solutions;
};

/// Single stacked solve of every scenario plus the coupling equalities;
/// the reference the distributed run is compared against.
/// Throws Infeasible when the stacked constraint system is infeasible.
ScopfOracle centralized_scopf_oracle(const ScopfInstance& inst);

nlohmann::json solutions_to_json(const std::vector<ScenarioSolution>& solutions);
void save_solutions(const std::vector<ScenarioSolution>& solutions, const std::string& path);

}  // namespace admmkit

#endif  // ADMMKIT_SCOPF_HPP
