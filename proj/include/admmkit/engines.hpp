// Copyright (c) 2026 admmkit contributors
// Licensed under the Apache License, Version 2.0.
//
// Six block-splitting schemes behind one run interface: a two-block
// splitting, sequential and parallel multi-block sweeps, a variable-splitting
// reformulation, a sweep-plus-back-substitution corrector, and a damped
// parallel scheme with per-block proximal terms.
//
// Every run returns the full per-iteration trace plus a terminal report.
// Engines are deterministic and single-threaded; identical inputs give
// bitwise identical iterates.

#ifndef ADMMKIT_ENGINES_HPP
#define ADMMKIT_ENGINES_HPP

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>

#include "admmkit/config.hpp"
#include "admmkit/problem.hpp"

namespace admmkit {

struct EngineResult {
  IterationTrace trace;
  ConvergenceReport report;
};

enum class EngineKind {
  TwoBlock,
  GaussSeidel,
  Jacobi,
  VariableSplitting,
  GaussianBackSubstitution,
  ProxJacobi,
};

const char* to_string(EngineKind kind);
std::optional<EngineKind> engine_kind_from_string(const std::string& name);

/// Exactly two blocks: minimize over block 1, then block 2 with the fresh
/// block-1 value, then take the full multiplier step rho * residual.
EngineResult run_two_block(const BlockProblem& p, const SolverConfig& cfg,
                           const StepObserver& observer = {});

/// Sequential sweep over all blocks in index order, each update seeing the
/// values already produced this sweep; one full multiplier step per sweep.
/// May legitimately report Diverged: the sweep is not convergent in general.
EngineResult run_gauss_seidel(const BlockProblem& p, const SolverConfig& cfg,
                              const StepObserver& observer = {});

/// Parallel-in-contract sweep: every block update reads only the previous
/// iterate, so the result is independent of evaluation order (bitwise).
/// May legitimately report Diverged.
EngineResult run_jacobi(const BlockProblem& p, const SolverConfig& cfg,
                        const StepObserver& observer = {});

/// Reformulates the coupling row sum with one auxiliary slot per block
/// (block i carries A_i x_i + z_i = c/N and its own multiplier); the z group
/// is re-centered in closed form each iteration so the z_i always sum to
/// zero. Block and multiplier updates are independent per block. The
/// reported multiplier is the mean of the per-block multipliers.
EngineResult run_variable_splitting(const BlockProblem& p, const SolverConfig& cfg,
                                    const StepObserver& observer = {});

/// Sequential-sweep prediction followed by a damped correction: the new
/// point solves a unit upper-triangular block system by back substitution
/// (multiplier first, then blocks N down to 2; block 1 keeps its predicted
/// value). Requires every coupling Gram matrix A_i' A_i (i >= 2) to be
/// nonsingular. cfg.alpha in (0,1) is the correction step.
EngineResult run_gbs(const BlockProblem& p, const SolverConfig& cfg,
                     const StepObserver& observer = {});

/// Parallel sweep where block i additionally pays 0.5 * |x_i - x_i_prev|^2
/// weighted by cfg prox weight P_i, and the multiplier step is damped by
/// cfg.gamma. With all P_i = 0 and gamma = 1 this is exactly run_jacobi.
EngineResult run_prox_jacobi(const BlockProblem& p, const SolverConfig& cfg,
                             const StepObserver& observer = {});

EngineResult run_engine(EngineKind kind, const BlockProblem& p, const SolverConfig& cfg,
                        const StepObserver& observer = {});

// ---------------------------------------------------------------------------
// Back-substitution correction data
// ---------------------------------------------------------------------------

/// The block-diagonal scaling H and block lower-triangular M whose action
/// H^{-1} M' drives the correction step of run_gbs, stored blockwise, plus
/// cached Gram factorizations and cross products for the back substitution.
/// Block order inside H and M: corrected blocks 2..N (0-based 1..N-1), then
/// the multiplier slot.
struct CorrectionMatrices {
  double rho = 1.0;
  Eigen::Index multiplier_dim = 0;
  std::vector<Eigen::Index> corrected_dims;  // dims of blocks 2..N

  std::vector<Eigen::MatrixXd> H_blocks;  // rho * A_i'A_i (i=2..N), then (1/rho) I
  /// Row r (for corrected block r+2): the blocks in columns 2..r+2.
  std::vector<std::vector<Eigen::MatrixXd>> M_rows;

  std::vector<Eigen::LDLT<Eigen::MatrixXd>> gram_factors;    // A_i'A_i, i=2..N
  std::vector<std::vector<Eigen::MatrixXd>> cross_products;  // [i][j-i-1] = A_i'A_j, j>i

  Eigen::MatrixXd H_dense() const;
  Eigen::MatrixXd M_dense() const;
};

/// Validates that every A_i'A_i (i=2..N) is nonsingular (SingularBlock
/// otherwise, naming the block) and assembles the correction data.
CorrectionMatrices build_correction_matrices(const BlockProblem& p, double rho);

// ---------------------------------------------------------------------------
// Evaluation-order and internal-state probes (used by tests and diagnostics)
// ---------------------------------------------------------------------------

/// Jacobi sweep whose block subproblems are *evaluated* in the given
/// permutation; iterates must be bitwise independent of that order.
EngineResult run_jacobi_ordered(const BlockProblem& p, const SolverConfig& cfg,
                                const std::vector<std::size_t>& order,
                                const StepObserver& observer = {});

/// Sequential sweep processed in the given permutation; iterates genuinely
/// depend on the order (the later updates see the earlier ones).
EngineResult run_gauss_seidel_ordered(const BlockProblem& p, const SolverConfig& cfg,
                                      const std::vector<std::size_t>& order,
                                      const StepObserver& observer = {});

/// Receives the sweep prediction (point and multiplier) of every run_gbs
/// iteration before the correction is applied.
using PredictionObserver =
    std::function<void(long k, const BlockVector& x_pred, const Eigen::VectorXd& lambda_pred)>;

EngineResult run_gbs_ex(const BlockProblem& p, const SolverConfig& cfg,
                        const StepObserver& observer,
                        const PredictionObserver& prediction_observer);

/// Internal state of one variable-splitting iteration: the block iterate,
/// the auxiliary zero-sum group, and the per-block multipliers.
struct VsSnapshot {
  BlockVector x;
  std::vector<Eigen::VectorXd> z;
  std::vector<Eigen::VectorXd> multipliers;
};

using VsObserver = std::function<void(long k, const VsSnapshot& state)>;

EngineResult run_variable_splitting_ex(const BlockProblem& p, const SolverConfig& cfg,
                                       const StepObserver& observer,
                                       const VsObserver& vs_observer);

}  // namespace admmkit

#endif  // ADMMKIT_ENGINES_HPP
