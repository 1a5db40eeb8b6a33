// Copyright (c) 2026 admmkit contributors
// Licensed under the Apache License, Version 2.0.

#include "admmkit/scopf.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "admmkit/errors.hpp"
#include "admmkit/prox.hpp"

namespace admmkit {

namespace {

constexpr double kInnerTol = 1e-8;
constexpr long kInnerMaxIter = 200000;
constexpr double kInf = std::numeric_limits<double>::infinity();

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

std::unordered_map<int, Eigen::Index> bus_positions(const PowerCase& pcase) {
  std::unordered_map<int, Eigen::Index> pos;
  for (std::size_t i = 0; i < pcase.buses.size(); ++i) {
    if (!pos.emplace(pcase.buses[i].id, static_cast<Eigen::Index>(i)).second)
      fail(ErrorCode::InvalidCase, "duplicate bus id " + std::to_string(pcase.buses[i].id));
  }
  return pos;
}

void check_connected(const PowerCase& pcase, const std::unordered_map<int, Eigen::Index>& pos,
                     std::optional<std::size_t> skip_branch, const char* context) {
  const std::size_t n = pcase.buses.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t l = 0; l < pcase.branches.size(); ++l) {
    if (skip_branch && *skip_branch == l) continue;
    const auto i = static_cast<std::size_t>(pos.at(pcase.branches[l].from));
    const auto j = static_cast<std::size_t>(pos.at(pcase.branches[l].to));
    adj[i].push_back(j);
    adj[j].push_back(i);
  }
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (std::size_t v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        stack.push_back(v);
      }
    }
  }
  if (reached != n) fail(ErrorCode::InvalidCase, std::string(context));
}

Eigen::MatrixXd drop_column(const Eigen::MatrixXd& m, Eigen::Index col) {
  Eigen::MatrixXd out(m.rows(), m.cols() - 1);
  if (col > 0) out.leftCols(col) = m.leftCols(col);
  if (col + 1 < m.cols()) out.rightCols(m.cols() - col - 1) = m.rightCols(m.cols() - col - 1);
  return out;
}

// Variable order per scenario: [P (G); theta without slack (n-1); w (L)] and,
// for outage scenarios, the ramp slack p (G) appended.
struct ScenarioQp {
  Eigen::Index dim = 0;
  Eigen::Index num_gen = 0;
  Eigen::Index num_flow = 0;
  bool with_slack = false;
  Eigen::MatrixXd eq;
  Eigen::VectorXd eq_rhs;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::unique_ptr<BoxEqQpSolver> solver;

  Eigen::Index theta_off() const { return num_gen; }
  Eigen::Index flow_off() const { return num_gen + dim_theta(); }
  Eigen::Index slack_off() const { return flow_off() + num_flow; }
  Eigen::Index dim_theta() const {
    return dim - num_gen - num_flow - (with_slack ? num_gen : 0);
  }
};

Eigen::MatrixXd base_quadratic(const ScopfInstance& inst, const ScenarioQp& qp, double rho_sum) {
  Eigen::MatrixXd q_mat = Eigen::MatrixXd::Zero(qp.dim, qp.dim);
  for (Eigen::Index g = 0; g < qp.num_gen; ++g)
    q_mat(g, g) = 2.0 * inst.network.generators[static_cast<std::size_t>(g)].cost_a + rho_sum;
  return q_mat;
}

Eigen::MatrixXd scenario_quadratic(const ScenarioQp& qp, double rho_c) {
  Eigen::MatrixXd q_mat = Eigen::MatrixXd::Zero(qp.dim, qp.dim);
  const Eigen::Index g_dim = qp.num_gen;
  const Eigen::Index p_off = qp.slack_off();
  q_mat.block(0, 0, g_dim, g_dim) = rho_c * Eigen::MatrixXd::Identity(g_dim, g_dim);
  q_mat.block(p_off, p_off, g_dim, g_dim) = rho_c * Eigen::MatrixXd::Identity(g_dim, g_dim);
  q_mat.block(0, p_off, g_dim, g_dim) = -rho_c * Eigen::MatrixXd::Identity(g_dim, g_dim);
  q_mat.block(p_off, 0, g_dim, g_dim) = -rho_c * Eigen::MatrixXd::Identity(g_dim, g_dim);
  return q_mat;
}

ScenarioQp build_scenario_qp(const ScopfInstance& inst, std::size_t scenario,
                             Eigen::Index slack_pos) {
  const DcMatrices& dc = inst.scenarios[scenario];
  const auto g_dim = static_cast<Eigen::Index>(inst.network.generators.size());
  const Eigen::Index n = dc.b_bus.rows();
  const Eigen::Index l_dim = dc.b_f.rows();
  const bool with_slack = scenario > 0;

  ScenarioQp qp;
  qp.num_gen = g_dim;
  qp.num_flow = l_dim;
  qp.with_slack = with_slack;
  qp.dim = g_dim + (n - 1) + l_dim + (with_slack ? g_dim : 0);

  const Eigen::MatrixXd b_bus_red = drop_column(dc.b_bus, slack_pos);
  const Eigen::MatrixXd b_f_red = drop_column(dc.b_f, slack_pos);

  qp.eq = Eigen::MatrixXd::Zero(n + l_dim, qp.dim);
  qp.eq.block(0, 0, n, g_dim) = dc.gen_inc;
  qp.eq.block(0, qp.theta_off(), n, n - 1) = -b_bus_red;
  qp.eq.block(n, qp.theta_off(), l_dim, n - 1) = -b_f_red;
  qp.eq.block(n, qp.flow_off(), l_dim, l_dim) = Eigen::MatrixXd::Identity(l_dim, l_dim);
  qp.eq_rhs.resize(n + l_dim);
  qp.eq_rhs.head(n) = inst.demand;
  qp.eq_rhs.tail(l_dim).setZero();

  qp.lower = Eigen::VectorXd::Constant(qp.dim, -kInf);
  qp.upper = Eigen::VectorXd::Constant(qp.dim, kInf);
  for (Eigen::Index g = 0; g < g_dim; ++g) {
    qp.lower(g) = inst.network.generators[static_cast<std::size_t>(g)].pmin;
    qp.upper(g) = inst.network.generators[static_cast<std::size_t>(g)].pmax;
  }
  qp.lower.segment(qp.flow_off(), l_dim) = -dc.flow_limits;
  qp.upper.segment(qp.flow_off(), l_dim) = dc.flow_limits;
  if (with_slack) {
    qp.lower.segment(qp.slack_off(), g_dim).setZero();
    qp.upper.segment(qp.slack_off(), g_dim) = 2.0 * inst.ramp;
  }
  return qp;
}

void validate_instance(const ScopfInstance& inst) {
  validate_case(inst.network);
  const auto n = static_cast<Eigen::Index>(inst.network.buses.size());
  const auto g_dim = static_cast<Eigen::Index>(inst.network.generators.size());
  const std::size_t c_dim = inst.contingencies.size();
  if (inst.scenarios.size() != c_dim + 1)
    fail(ErrorCode::InvalidCase, "instance must hold one scenario per contingency plus the base");
  if (inst.demand.size() != n) fail(ErrorCode::InvalidCase, "demand must have one entry per bus");
  if (inst.ramp.size() != g_dim)
    fail(ErrorCode::InvalidCase, "ramp must have one entry per generator");
  if (inst.rho_scale.size() != c_dim)
    fail(ErrorCode::InvalidCase, "rho_scale must have one entry per contingency");
  for (double s : inst.rho_scale)
    if (!(s > 0.0) || !std::isfinite(s))
      fail(ErrorCode::InvalidCase, "rho_scale entries must be positive and finite");
  if (c_dim > 0 && !inst.ramp.allFinite())
    fail(ErrorCode::InvalidCase, "ramp limits must be finite when contingencies are present");
}

double base_cost(const ScopfInstance& inst, const Eigen::VectorXd& p_gen) {
  double cost = 0.0;
  for (std::size_t g = 0; g < inst.network.generators.size(); ++g) {
    const Generator& gen = inst.network.generators[g];
    const double p = p_gen(static_cast<Eigen::Index>(g));
    cost += gen.cost_a * p * p + gen.cost_b * p;
  }
  return cost;
}

Eigen::VectorXd full_theta(const Eigen::VectorXd& theta_red, Eigen::Index slack_pos) {
  Eigen::VectorXd theta(theta_red.size() + 1);
  theta.head(slack_pos) = theta_red.head(slack_pos);
  theta(slack_pos) = 0.0;
  theta.tail(theta.size() - slack_pos - 1) = theta_red.tail(theta_red.size() - slack_pos);
  return theta;
}

ScenarioSolution unpack_solution(const ScenarioQp& qp, const Eigen::VectorXd& x,
                                 Eigen::Index slack_pos) {
  ScenarioSolution sol;
  sol.p_g = x.head(qp.num_gen);
  sol.theta = full_theta(x.segment(qp.theta_off(), qp.dim_theta()), slack_pos);
  sol.flows = x.segment(qp.flow_off(), qp.num_flow);
  if (qp.with_slack) sol.slack = x.segment(qp.slack_off(), qp.num_gen);
  return sol;
}

void probe_feasibility(const ScopfInstance& inst, const std::vector<ScenarioQp>& qps) {
  for (std::size_t c = 0; c < qps.size(); ++c) {
    const ScenarioQp& qp = qps[c];
    const double viol = qp.solver->min_violation(qp.eq_rhs);
    const double tol = 1e-6 * std::max(1.0, qp.eq_rhs.lpNorm<Eigen::Infinity>());
    if (viol <= tol) continue;
    if (c == 0)
      fail(ErrorCode::Infeasible, "base-case constraints are infeasible (minimum violation " +
                                      std::to_string(viol) + " MW)");
    const std::size_t branch = inst.contingencies[c - 1];
    fail(ErrorCode::InfeasibleScenario,
         "outage scenario " + std::to_string(c) + " (branch " + std::to_string(branch) +
             ") is infeasible on its own (minimum violation " + std::to_string(viol) + " MW)");
  }
}

}  // namespace

void validate_case(const PowerCase& pcase) {
  if (pcase.buses.empty()) fail(ErrorCode::InvalidCase, "case has no buses");
  const auto pos = bus_positions(pcase);
  for (const Bus& bus : pcase.buses)
    if (!std::isfinite(bus.demand)) fail(ErrorCode::InvalidCase, "bus demand must be finite");
  if (!pos.count(pcase.slack_bus))
    fail(ErrorCode::InvalidCase, "slack_bus " + std::to_string(pcase.slack_bus) + " is not a bus");
  for (const Branch& br : pcase.branches) {
    if (!pos.count(br.from) || !pos.count(br.to))
      fail(ErrorCode::InvalidCase, "branch endpoints must be existing bus ids");
    if (br.from == br.to) fail(ErrorCode::InvalidCase, "branch endpoints must differ");
    if (!(br.susceptance > 0.0) || !std::isfinite(br.susceptance))
      fail(ErrorCode::InvalidCase, "branch susceptance must be positive and finite");
    if (!(br.limit > 0.0) || !std::isfinite(br.limit))
      fail(ErrorCode::InvalidCase, "branch flow limit must be positive and finite");
  }
  if (pcase.generators.empty()) fail(ErrorCode::InvalidCase, "case needs at least one generator");
  for (const Generator& gen : pcase.generators) {
    if (!pos.count(gen.bus))
      fail(ErrorCode::InvalidCase, "generator bus " + std::to_string(gen.bus) + " is not a bus");
    if (!std::isfinite(gen.cost_a) || !std::isfinite(gen.cost_b) || gen.cost_a < 0.0)
      fail(ErrorCode::InvalidCase, "generator cost must be finite with cost_a >= 0");
    if (!(gen.pmin >= 0.0) || !(gen.pmax >= gen.pmin) || !std::isfinite(gen.pmax))
      fail(ErrorCode::InvalidCase, "generator limits need 0 <= pmin <= pmax < inf");
    if (std::isnan(gen.ramp) || gen.ramp < 0.0)
      fail(ErrorCode::InvalidCase, "generator ramp must be nonnegative");
  }
  check_connected(pcase, pos, std::nullopt, "network is disconnected");
}

DcMatrices build_dc_matrices(const PowerCase& pcase, std::optional<std::size_t> outage) {
  const auto pos = bus_positions(pcase);
  if (outage && *outage >= pcase.branches.size())
    fail(ErrorCode::InvalidCase, "outage branch index out of range");
  check_connected(pcase, pos, outage,
                  outage ? "outage disconnects the network" : "network is disconnected");

  const auto n = static_cast<Eigen::Index>(pcase.buses.size());
  const auto g_dim = static_cast<Eigen::Index>(pcase.generators.size());
  DcMatrices dc;
  dc.b_bus = Eigen::MatrixXd::Zero(n, n);
  std::vector<std::size_t> in_service;
  for (std::size_t l = 0; l < pcase.branches.size(); ++l) {
    if (outage && *outage == l) continue;
    in_service.push_back(l);
    const Branch& br = pcase.branches[l];
    const Eigen::Index i = pos.at(br.from);
    const Eigen::Index j = pos.at(br.to);
    dc.b_bus(i, i) += br.susceptance;
    dc.b_bus(j, j) += br.susceptance;
    dc.b_bus(i, j) -= br.susceptance;
    dc.b_bus(j, i) -= br.susceptance;
  }
  const auto l_dim = static_cast<Eigen::Index>(in_service.size());
  dc.b_f = Eigen::MatrixXd::Zero(l_dim, n);
  dc.flow_limits.resize(l_dim);
  dc.branch_indices = in_service;
  for (Eigen::Index r = 0; r < l_dim; ++r) {
    const Branch& br = pcase.branches[in_service[static_cast<std::size_t>(r)]];
    dc.b_f(r, pos.at(br.from)) = br.susceptance;
    dc.b_f(r, pos.at(br.to)) = -br.susceptance;
    dc.flow_limits(r) = br.limit;
  }
  dc.gen_inc = Eigen::MatrixXd::Zero(n, g_dim);
  for (Eigen::Index g = 0; g < g_dim; ++g)
    dc.gen_inc(pos.at(pcase.generators[static_cast<std::size_t>(g)].bus), g) = 1.0;
  return dc;
}

ScopfInstance assemble_scopf(const PowerCase& pcase, const ContingencySet& contingencies) {
  validate_case(pcase);
  std::set<std::size_t> seen;
  for (std::size_t c : contingencies) {
    if (c >= pcase.branches.size())
      fail(ErrorCode::InvalidCase, "contingency branch index " + std::to_string(c) +
                                       " out of range");
    if (!seen.insert(c).second)
      fail(ErrorCode::InvalidCase, "duplicate contingency branch " + std::to_string(c));
  }
  if (!contingencies.empty()) {
    for (const Generator& gen : pcase.generators)
      if (!std::isfinite(gen.ramp))
        fail(ErrorCode::InvalidCase,
             "generator ramp must be finite when contingencies are present");
  }

  ScopfInstance inst;
  inst.network = pcase;
  inst.contingencies = contingencies;
  inst.scenarios.push_back(build_dc_matrices(pcase));
  for (std::size_t c : contingencies) inst.scenarios.push_back(build_dc_matrices(pcase, c));
  inst.demand.resize(static_cast<Eigen::Index>(pcase.buses.size()));
  for (std::size_t i = 0; i < pcase.buses.size(); ++i)
    inst.demand(static_cast<Eigen::Index>(i)) = pcase.buses[i].demand;
  inst.ramp.resize(static_cast<Eigen::Index>(pcase.generators.size()));
  for (std::size_t g = 0; g < pcase.generators.size(); ++g)
    inst.ramp(static_cast<Eigen::Index>(g)) = pcase.generators[g].ramp;
  inst.rho_scale.assign(contingencies.size(), 1.0);
  return inst;
}

ScopfResult run_distributed_scopf(const ScopfInstance& inst, const SolverConfig& cfg,
                                  const ScopfObserver& observer, const RhoRescale& rho_rescale) {
  validate_instance(inst);
  if (!(cfg.rho > 0.0) || !std::isfinite(cfg.rho))
    fail(ErrorCode::InvalidConfig, "rho must be positive");
  if (!(cfg.tol_primal > 0.0) || !(cfg.tol_dual > 0.0))
    fail(ErrorCode::InvalidConfig, "tolerances must be positive");
  if (cfg.max_iter < 1) fail(ErrorCode::InvalidConfig, "max_iter must be at least 1");
  if (!(cfg.divergence_threshold > 0.0))
    fail(ErrorCode::InvalidConfig, "divergence_threshold must be positive");

  const auto pos = bus_positions(inst.network);
  const Eigen::Index slack_pos = pos.at(inst.network.slack_bus);
  const auto g_dim = static_cast<Eigen::Index>(inst.network.generators.size());
  const std::size_t c_dim = inst.contingencies.size();

  std::vector<double> rho(c_dim);
  for (std::size_t c = 0; c < c_dim; ++c) rho[c] = cfg.rho * inst.rho_scale[c];
  const auto rho_sum = [&] {
    double s = 0.0;
    for (double r : rho) s += r;
    return s;
  };

  std::vector<ScenarioQp> qps;
  qps.reserve(c_dim + 1);
  for (std::size_t c = 0; c <= c_dim; ++c) qps.push_back(build_scenario_qp(inst, c, slack_pos));
  qps[0].solver = std::make_unique<BoxEqQpSolver>(base_quadratic(inst, qps[0], rho_sum()),
                                                  qps[0].eq, qps[0].lower, qps[0].upper);
  for (std::size_t c = 1; c <= c_dim; ++c)
    qps[c].solver = std::make_unique<BoxEqQpSolver>(scenario_quadratic(qps[c], rho[c - 1]),
                                                    qps[c].eq, qps[c].lower, qps[c].upper);
  probe_feasibility(inst, qps);

  Eigen::VectorXd cost_lin(qps[0].dim);
  cost_lin.setZero();
  for (Eigen::Index g = 0; g < g_dim; ++g)
    cost_lin(g) = inst.network.generators[static_cast<std::size_t>(g)].cost_b;

  Eigen::VectorXd p_base = Eigen::VectorXd::Zero(g_dim);
  std::vector<Eigen::VectorXd> p_cont(c_dim, Eigen::VectorXd::Zero(g_dim));
  std::vector<Eigen::VectorXd> slack(c_dim, Eigen::VectorXd::Zero(g_dim));
  std::vector<Eigen::VectorXd> mu(c_dim, Eigen::VectorXd::Zero(g_dim));
  Eigen::VectorXd base_x;
  std::vector<Eigen::VectorXd> cont_x(c_dim);

  ScopfResult out;
  Status status = Status::MaxIterReached;
  for (long k = 0; k < cfg.max_iter; ++k) {
    std::vector<double> ms;
    ms.reserve(c_dim + 1);
    const Eigen::VectorXd p_base_prev = p_base;
    std::vector<Eigen::VectorXd> shift_prev(c_dim);
    for (std::size_t c = 0; c < c_dim; ++c) shift_prev[c] = p_cont[c] - slack[c];

    auto t0 = std::chrono::steady_clock::now();
    Eigen::VectorXd q = cost_lin;
    for (std::size_t c = 0; c < c_dim; ++c)
      q.head(g_dim) += rho[c] * (-p_cont[c] + slack[c] - inst.ramp + mu[c]);
    const auto base_res = qps[0].solver->solve(q, qps[0].eq_rhs, kInnerTol, kInnerMaxIter);
    if (!base_res.converged)
      fail(ErrorCode::MaxIterExceeded, "base dispatch inner solve did not converge");
    base_x = base_res.x;
    p_base = base_x.head(g_dim);
    ms.push_back(elapsed_ms(t0));

    for (std::size_t c = 0; c < c_dim; ++c) {
      t0 = std::chrono::steady_clock::now();
      ScenarioQp& qp = qps[c + 1];
      const Eigen::VectorXd t_vec = p_base - inst.ramp + mu[c];
      Eigen::VectorXd qc = Eigen::VectorXd::Zero(qp.dim);
      qc.head(g_dim) = -rho[c] * t_vec;
      qc.segment(qp.slack_off(), g_dim) = rho[c] * t_vec;
      const auto res = qp.solver->solve(qc, qp.eq_rhs, kInnerTol, kInnerMaxIter);
      if (!res.converged)
        fail(ErrorCode::MaxIterExceeded,
             "outage scenario " + std::to_string(c + 1) + " inner solve did not converge");
      cont_x[c] = res.x;
      p_cont[c] = res.x.head(g_dim);
      slack[c] = res.x.segment(qp.slack_off(), g_dim);
      ms.push_back(elapsed_ms(t0));
    }

    double resid = 0.0;
    std::vector<double> scen_resid(c_dim, 0.0);
    for (std::size_t c = 0; c < c_dim; ++c) {
      const Eigen::VectorXd r = p_base - p_cont[c] + slack[c] - inst.ramp;
      mu[c] += r;
      scen_resid[c] = r.lpNorm<Eigen::Infinity>();
      resid = std::max(resid, scen_resid[c]);
    }

    double dual = 0.0;
    if (c_dim > 0) {
      dual = (p_base - p_base_prev).norm();
      for (std::size_t c = 0; c < c_dim; ++c)
        dual = std::max(dual, (p_cont[c] - slack[c] - shift_prev[c]).norm());
      dual *= cfg.rho;
    }

    TraceRow row;
    row.k = k;
    row.objective = base_cost(inst, p_base);
    row.primal_residual = resid;
    row.dual_metric = dual;
    row.block_ms = std::move(ms);
    out.trace.append(row);

    if (observer) {
      ScopfIterate it;
      it.base_p = p_base;
      it.scenario_p = p_cont;
      it.scenario_slack = slack;
      it.duals = mu;
      try {
        observer(k, it);
      } catch (const std::exception& e) {
        fail(ErrorCode::ObserverFailure, std::string("observer threw: ") + e.what());
      }
    }

    bool finite = std::isfinite(resid) && std::isfinite(dual) && p_base.allFinite();
    for (std::size_t c = 0; finite && c < c_dim; ++c)
      finite = p_cont[c].allFinite() && slack[c].allFinite() && mu[c].allFinite();
    if (!finite || resid > cfg.divergence_threshold) {
      status = Status::Diverged;
      break;
    }
    if (resid <= cfg.tol_primal && dual <= cfg.tol_dual) {
      status = Status::Converged;
      break;
    }

    if (rho_rescale) {
      bool base_stale = false;
      for (std::size_t c = 0; c < c_dim; ++c) {
        const double next = rho_rescale(k, c, rho[c], scen_resid[c]);
        if (!(next > 0.0) || !std::isfinite(next))
          fail(ErrorCode::InvalidConfig, "rho rescale hook must return a positive penalty");
        if (std::abs(next - rho[c]) <= 1e-12 * rho[c]) continue;
        mu[c] *= rho[c] / next;
        rho[c] = next;
        qps[c + 1].solver = std::make_unique<BoxEqQpSolver>(
            scenario_quadratic(qps[c + 1], rho[c]), qps[c + 1].eq, qps[c + 1].lower,
            qps[c + 1].upper);
        base_stale = true;
      }
      if (base_stale)
        qps[0].solver = std::make_unique<BoxEqQpSolver>(base_quadratic(inst, qps[0], rho_sum()),
                                                        qps[0].eq, qps[0].lower, qps[0].upper);
    }
  }

  const TraceRow& last = out.trace.rows.back();
  out.report.status = status;
  out.report.iterations = out.trace.iterations();
  out.report.final_primal_residual = last.primal_residual;
  out.report.final_dual_metric = last.dual_metric;
  out.report.final_objective = last.objective;
  out.report.final_x.segments.clear();
  out.report.final_x.segments.push_back(p_base);
  for (std::size_t c = 0; c < c_dim; ++c) {
    Eigen::VectorXd seg(2 * g_dim);
    seg.head(g_dim) = p_cont[c];
    seg.tail(g_dim) = slack[c];
    out.report.final_x.segments.push_back(seg);
  }
  out.report.final_multiplier.resize(static_cast<Eigen::Index>(c_dim) * g_dim);
  for (std::size_t c = 0; c < c_dim; ++c)
    out.report.final_multiplier.segment(static_cast<Eigen::Index>(c) * g_dim, g_dim) = mu[c];

  out.solutions.push_back(unpack_solution(qps[0], base_x, slack_pos));
  for (std::size_t c = 0; c < c_dim; ++c)
    out.solutions.push_back(unpack_solution(qps[c + 1], cont_x[c], slack_pos));
  return out;
}

ScopfOracle centralized_scopf_oracle(const ScopfInstance& inst) {
  validate_instance(inst);
  const auto pos = bus_positions(inst.network);
  const Eigen::Index slack_pos = pos.at(inst.network.slack_bus);
  const auto g_dim = static_cast<Eigen::Index>(inst.network.generators.size());
  const std::size_t c_dim = inst.contingencies.size();

  std::vector<ScenarioQp> qps;
  qps.reserve(c_dim + 1);
  for (std::size_t c = 0; c <= c_dim; ++c) qps.push_back(build_scenario_qp(inst, c, slack_pos));

  Eigen::Index dim = 0;
  Eigen::Index eq_rows = 0;
  std::vector<Eigen::Index> var_off(c_dim + 1), row_off(c_dim + 1);
  for (std::size_t c = 0; c <= c_dim; ++c) {
    var_off[c] = dim;
    row_off[c] = eq_rows;
    dim += qps[c].dim;
    eq_rows += qps[c].eq.rows();
  }
  const Eigen::Index couple_off = eq_rows;
  eq_rows += static_cast<Eigen::Index>(c_dim) * g_dim;

  Eigen::MatrixXd q_mat = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd q_vec = Eigen::VectorXd::Zero(dim);
  for (Eigen::Index g = 0; g < g_dim; ++g) {
    const Generator& gen = inst.network.generators[static_cast<std::size_t>(g)];
    q_mat(g, g) = 2.0 * gen.cost_a;
    q_vec(g) = gen.cost_b;
  }

  Eigen::MatrixXd eq = Eigen::MatrixXd::Zero(eq_rows, dim);
  Eigen::VectorXd d(eq_rows);
  Eigen::VectorXd lower(dim), upper(dim);
  for (std::size_t c = 0; c <= c_dim; ++c) {
    eq.block(row_off[c], var_off[c], qps[c].eq.rows(), qps[c].dim) = qps[c].eq;
    d.segment(row_off[c], qps[c].eq.rows()) = qps[c].eq_rhs;
    lower.segment(var_off[c], qps[c].dim) = qps[c].lower;
    upper.segment(var_off[c], qps[c].dim) = qps[c].upper;
  }
  for (std::size_t c = 0; c < c_dim; ++c) {
    const Eigen::Index r0 = couple_off + static_cast<Eigen::Index>(c) * g_dim;
    eq.block(r0, 0, g_dim, g_dim) = Eigen::MatrixXd::Identity(g_dim, g_dim);
    eq.block(r0, var_off[c + 1], g_dim, g_dim) = -Eigen::MatrixXd::Identity(g_dim, g_dim);
    eq.block(r0, var_off[c + 1] + qps[c + 1].slack_off(), g_dim, g_dim) =
        Eigen::MatrixXd::Identity(g_dim, g_dim);
    d.segment(r0, g_dim) = inst.ramp;
  }

  BoxEqQpSolver solver(q_mat, eq, lower, upper);
  const auto res = solver.solve(q_vec, d, 1e-9, 400000);
  if (!res.converged) {
    const double viol = solver.min_violation(d);
    if (viol > 1e-6 * std::max(1.0, d.lpNorm<Eigen::Infinity>()))
      fail(ErrorCode::Infeasible, "stacked constraint system is infeasible (minimum violation " +
                                      std::to_string(viol) + " MW)");
    fail(ErrorCode::MaxIterExceeded, "stacked solve did not converge");
  }

  ScopfOracle oracle;
  oracle.objective = base_cost(inst, res.x.head(g_dim));
  for (std::size_t c = 0; c <= c_dim; ++c)
    oracle.solutions.push_back(
        unpack_solution(qps[c], res.x.segment(var_off[c], qps[c].dim), slack_pos));
  return oracle;
}

PowerCase case_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::ParseError, "case must be a JSON object");
  PowerCase pcase;
  try {
    if (!j.contains("buses") || !j.at("buses").is_array())
      fail(ErrorCode::ParseError, "case needs a buses array");
    for (const auto& jb : j.at("buses")) {
      Bus bus;
      bus.id = jb.at("id").get<int>();
      bus.demand = jb.value("demand", 0.0);
      pcase.buses.push_back(bus);
    }
    if (!j.contains("branches") || !j.at("branches").is_array())
      fail(ErrorCode::ParseError, "case needs a branches array");
    for (const auto& jb : j.at("branches")) {
      Branch br;
      br.from = jb.at("from").get<int>();
      br.to = jb.at("to").get<int>();
      br.susceptance = jb.at("susceptance").get<double>();
      br.limit = jb.at("limit").get<double>();
      pcase.branches.push_back(br);
    }
    if (!j.contains("generators") || !j.at("generators").is_array())
      fail(ErrorCode::ParseError, "case needs a generators array");
    for (const auto& jg : j.at("generators")) {
      Generator gen;
      gen.bus = jg.at("bus").get<int>();
      gen.cost_a = jg.value("cost_a", 0.0);
      gen.cost_b = jg.value("cost_b", 0.0);
      gen.pmin = jg.value("pmin", 0.0);
      gen.pmax = jg.at("pmax").get<double>();
      if (jg.contains("ramp")) {
        const auto& jr = jg.at("ramp");
        if (jr.is_string() && jr.get<std::string>() == "inf")
          gen.ramp = kInf;
        else
          gen.ramp = jr.get<double>();
      } else {
        gen.ramp = kInf;
      }
      pcase.generators.push_back(gen);
    }
    pcase.slack_bus = j.at("slack_bus").get<int>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("malformed case JSON: ") + e.what());
  }
  validate_case(pcase);
  return pcase;
}

nlohmann::json case_to_json(const PowerCase& pcase) {
  nlohmann::json j;
  j["buses"] = nlohmann::json::array();
  for (const Bus& bus : pcase.buses) j["buses"].push_back({{"id", bus.id}, {"demand", bus.demand}});
  j["branches"] = nlohmann::json::array();
  for (const Branch& br : pcase.branches)
    j["branches"].push_back({{"from", br.from},
                             {"to", br.to},
                             {"susceptance", br.susceptance},
                             {"limit", br.limit}});
  j["generators"] = nlohmann::json::array();
  for (const Generator& gen : pcase.generators) {
    nlohmann::json jg = {{"bus", gen.bus},   {"cost_a", gen.cost_a}, {"cost_b", gen.cost_b},
                         {"pmin", gen.pmin}, {"pmax", gen.pmax}};
    if (std::isfinite(gen.ramp))
      jg["ramp"] = gen.ramp;
    else
      jg["ramp"] = "inf";
    j["generators"].push_back(jg);
  }
  j["slack_bus"] = pcase.slack_bus;
  return j;
}

PowerCase load_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("invalid JSON in ") + path + ": " + e.what());
  }
  return case_from_json(j);
}

void save_case(const PowerCase& pcase, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  out << case_to_json(pcase).dump(2) << "\n";
  if (!out) fail(ErrorCode::IoError, "failed writing " + path);
}

nlohmann::json solutions_to_json(const std::vector<ScenarioSolution>& solutions) {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t c = 0; c < solutions.size(); ++c) {
    const ScenarioSolution& sol = solutions[c];
    nlohmann::json js;
    js["scenario"] = c;
    js["theta_rad"] = std::vector<double>(sol.theta.data(), sol.theta.data() + sol.theta.size());
    js["p_g_mw"] = std::vector<double>(sol.p_g.data(), sol.p_g.data() + sol.p_g.size());
    js["flows_mw"] = std::vector<double>(sol.flows.data(), sol.flows.data() + sol.flows.size());
    if (sol.slack.size() > 0)
      js["ramp_slack_mw"] =
          std::vector<double>(sol.slack.data(), sol.slack.data() + sol.slack.size());
    arr.push_back(std::move(js));
  }
  return arr;
}

void save_solutions(const std::vector<ScenarioSolution>& solutions, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  out << solutions_to_json(solutions).dump(2) << "\n";
  if (!out) fail(ErrorCode::IoError, "failed writing " + path);
}

}  // namespace admmkit
