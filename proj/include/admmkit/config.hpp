// Copyright (c) 2026 admmkit contributors
// Licensed under the Apache License, Version 2.0.
//
// Run parameters shared by all engines, per-iteration trace records, and the
// terminal convergence report, plus their CSV / JSON export helpers.

#ifndef ADMMKIT_CONFIG_HPP
#define ADMMKIT_CONFIG_HPP

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "admmkit/problem.hpp"

namespace admmkit {

/// Per-block proximal weight: a scalar w stands for w * I on that block.
using ProxWeight = std::variant<double, Eigen::MatrixXd>;

struct SolverConfig {
  double rho = 1.0;    // quadratic penalty weight, > 0
  double gamma = 1.0;  // dual step damping for the proximal Jacobian scheme, > 0
  double alpha = 0.5;  // back-substitution correction step, in (0, 1)
  std::vector<ProxWeight> prox_weights;  // empty means 0 for every block
  double tol_primal = 1e-6;
  double tol_dual = 1e-6;
  long max_iter = 10000;
  double divergence_threshold = 1e8;
  unsigned long seed = 0;
  std::optional<BlockVector> start;  // default: per-set projection of zero
};

/// Throws InvalidConfig / DimensionMismatch / NonPsd when cfg cannot drive a
/// run on p.
void validate_config(const SolverConfig& cfg, const BlockProblem& p);

/// Resolves the block-i proximal weight to a dense matrix (scalar shorthand
/// expands to w * I). Missing entries resolve to the zero matrix.
Eigen::MatrixXd prox_weight_matrix(const SolverConfig& cfg, const BlockProblem& p,
                                   std::size_t block);

enum class Status { Converged, MaxIterReached, Diverged };

const char* to_string(Status s);

/// State recorded after iteration k (k counts from 0, strictly increasing).
struct TraceRow {
  long k = 0;
  double objective = 0.0;
  double primal_residual = 0.0;  // ||sum_i A_i x_i - c||_2
  double dual_metric = 0.0;      // rho * max_i ||A_i (x_i^k - x_i^{k-1})||_2
  std::vector<double> block_ms;  // wall time of each block update, milliseconds
};

struct IterationTrace {
  std::vector<TraceRow> rows;

  /// Appends a row; its k must equal the current row count.
  void append(TraceRow row);
  long iterations() const { return static_cast<long>(rows.size()); }
};

struct ConvergenceReport {
  Status status = Status::MaxIterReached;
  long iterations = 0;
  double final_primal_residual = 0.0;
  double final_dual_metric = 0.0;
  double final_objective = 0.0;
  BlockVector final_x;
  Eigen::VectorXd final_multiplier;
};

/// Read-only per-iteration callback: (k, block iterate, multiplier).
/// Exceptions thrown by an observer abort the run with ObserverFailure.
using StepObserver =
    std::function<void(long k, const BlockVector& x, const Eigen::VectorXd& lambda)>;

/// CSV with header k,objective,primal_residual,dual_metric,block_ms.
/// Values are printed with %.17g so finite doubles round-trip; block_ms is the
/// sum over blocks for the row (wall time, not reproducible across runs).
void write_trace_csv(const IterationTrace& trace, std::ostream& out);
void write_trace_csv(const IterationTrace& trace, const std::string& path);

nlohmann::json report_to_json(const ConvergenceReport& report);
void save_report(const ConvergenceReport& report, const std::string& path);

}  // namespace admmkit

#endif  // ADMMKIT_CONFIG_HPP
