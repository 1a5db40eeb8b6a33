// Copyright (c) 2026 admmkit contributors
// Licensed under the Apache License, Version 2.0.

#include "admmkit/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "admmkit/errors.hpp"

namespace admmkit {

namespace {

std::string block_label(std::size_t i) { return "block " + std::to_string(i); }

void check_prox_weight(const ProxWeight& w, Eigen::Index dim, std::size_t i) {
  if (const auto* scalar = std::get_if<double>(&w)) {
    if (!(*scalar >= 0.0))
      fail(ErrorCode::InvalidConfig, "prox weight scalar must be >= 0 at " + block_label(i));
    return;
  }
  const auto& P = std::get<Eigen::MatrixXd>(w);
  if (P.rows() != dim || P.cols() != dim)
    fail(ErrorCode::DimensionMismatch, "prox weight shape at " + block_label(i));
  const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    fail(ErrorCode::NonPsd, "prox weight not symmetric at " + block_label(i));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
  if (lo < -1e-10 * std::max(1.0, hi))
    fail(ErrorCode::NonPsd, "prox weight not positive semidefinite at " + block_label(i));
}

}  // namespace

void validate_config(const SolverConfig& cfg, const BlockProblem& p) {
  if (!(cfg.rho > 0.0)) fail(ErrorCode::InvalidConfig, "rho must be > 0");
  if (!(cfg.gamma > 0.0)) fail(ErrorCode::InvalidConfig, "gamma must be > 0");
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
    fail(ErrorCode::InvalidConfig, "alpha must lie in (0, 1)");
  if (!(cfg.tol_primal > 0.0)) fail(ErrorCode::InvalidConfig, "tol_primal must be > 0");
  if (!(cfg.tol_dual > 0.0)) fail(ErrorCode::InvalidConfig, "tol_dual must be > 0");
  if (cfg.max_iter < 1) fail(ErrorCode::InvalidConfig, "max_iter must be >= 1");
  if (!(cfg.divergence_threshold > 0.0))
    fail(ErrorCode::InvalidConfig, "divergence_threshold must be > 0");

  const std::size_t n_blocks = p.blocks.size();
  if (!cfg.prox_weights.empty() && cfg.prox_weights.size() != n_blocks)
    fail(ErrorCode::InvalidConfig, "prox_weights must be empty or have one entry per block");
  for (std::size_t i = 0; i < cfg.prox_weights.size(); ++i)
    check_prox_weight(cfg.prox_weights[i], p.blocks[i].dim, i);

  if (cfg.start) {
    if (cfg.start->block_count() != p.block_count())
      fail(ErrorCode::DimensionMismatch, "start point block count");
    for (std::size_t i = 0; i < n_blocks; ++i)
      if (cfg.start->segments[i].size() != p.blocks[i].dim)
        fail(ErrorCode::DimensionMismatch, "start point length at " + block_label(i));
  }
}

Eigen::MatrixXd prox_weight_matrix(const SolverConfig& cfg, const BlockProblem& p,
                                   std::size_t block) {
  const Eigen::Index dim = p.blocks.at(block).dim;
  if (block >= cfg.prox_weights.size()) return Eigen::MatrixXd::Zero(dim, dim);
  const ProxWeight& w = cfg.prox_weights[block];
  if (const auto* scalar = std::get_if<double>(&w))
    return *scalar * Eigen::MatrixXd::Identity(dim, dim);
  return std::get<Eigen::MatrixXd>(w);
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Converged: return "Converged";
    case Status::MaxIterReached: return "MaxIterReached";
    case Status::Diverged: return "Diverged";
  }
  return "Unknown";
}

void IterationTrace::append(TraceRow row) {
  if (row.k != static_cast<long>(rows.size()))
    fail(ErrorCode::InvalidConfig, "trace rows must be appended with consecutive k from 0");
  rows.push_back(std::move(row));
}

namespace {

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_trace_csv(const IterationTrace& trace, std::ostream& out) {
  out << "k,objective,primal_residual,dual_metric,block_ms\n";
  for (const TraceRow& row : trace.rows) {
    double total_ms = 0.0;
    for (double ms : row.block_ms) total_ms += ms;
    out << row.k << ',' << format_real(row.objective) << ',' << format_real(row.primal_residual)
        << ',' << format_real(row.dual_metric) << ',' << format_real(total_ms) << '\n';
  }
}

void write_trace_csv(const IterationTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  write_trace_csv(trace, out);
  if (!out.good()) fail(ErrorCode::IoError, "short write to " + path);
}

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace

nlohmann::json report_to_json(const ConvergenceReport& report) {
  nlohmann::json j;
  j["status"] = to_string(report.status);
  j["iterations"] = report.iterations;
  j["final_primal_residual"] = report.final_primal_residual;
  j["final_dual_metric"] = report.final_dual_metric;
  j["final_objective"] = report.final_objective;
  nlohmann::json xs = nlohmann::json::array();
  for (const auto& seg : report.final_x.segments) xs.push_back(vector_to_json(seg));
  j["final_x"] = xs;
  j["final_multiplier"] = vector_to_json(report.final_multiplier);
  return j;
}

void save_report(const ConvergenceReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  out << report_to_json(report).dump(2) << '\n';
  if (!out.good()) fail(ErrorCode::IoError, "short write to " + path);
}

}  // namespace admmkit
