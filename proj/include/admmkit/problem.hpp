// Copyright (c) 2026 admmkit contributors
// Licensed under the Apache License, Version 2.0.
//
// Block-structured convex problems of the form
//
//   minimize    sum_i f_i(x_i)
//   subject to  x_i in X_i,   sum_i A_i x_i = c
//
// where each block i owns a separable objective term f_i, a simple feasible
// set X_i, and an m x n_i coupling matrix A_i.

#ifndef ADMMKIT_PROBLEM_HPP
#define ADMMKIT_PROBLEM_HPP

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "admmkit/errors.hpp"

namespace admmkit {

// ---------------------------------------------------------------------------
// Objective terms
// ---------------------------------------------------------------------------

struct ZeroTerm {};

/// q' x
struct LinearTerm {
  Eigen::VectorXd q;
};

/// 0.5 x' Q x + q' x + r, Q symmetric positive semidefinite.
struct QuadraticTerm {
  Eigen::MatrixXd Q;
  Eigen::VectorXd q;
  double r = 0.0;
};

/// -weight * log(a' x + offset), weight > 0 and offset > 0 so the term is
/// finite at x = 0.
struct NegLogAffineTerm {
  double weight = 1.0;
  Eigen::VectorXd a;
  double offset = 1.0;
};

/// Smooth convex term given by value/gradient callbacks plus a declared bound
/// on the gradient's Lipschitz constant.
struct SmoothOracleTerm {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  double lipschitz = 1.0;
};

using ObjectiveTerm =
    std::variant<ZeroTerm, LinearTerm, QuadraticTerm, NegLogAffineTerm, SmoothOracleTerm>;

// ---------------------------------------------------------------------------
// Feasible sets
// ---------------------------------------------------------------------------

struct FreeSet {};

/// lower <= x <= upper componentwise; entries may be +-infinity.
struct BoxSet {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

/// { x : x >= 0, sum(x) <= cap }, cap >= 0.
struct NonNegCappedSumSet {
  double cap = 0.0;
};

/// { x : E x = d }, E with full row rank.
struct AffineEqualitySet {
  Eigen::MatrixXd E;
  Eigen::VectorXd d;
};

/// Marker: the segments of every block tagged with this set must sum to zero.
/// Used internally by the variable-splitting scheme for its auxiliary group.
struct ZeroSumAcrossBlocksSet {};

using FeasibleSet = std::variant<FreeSet, BoxSet, NonNegCappedSumSet, AffineEqualitySet,
                                 ZeroSumAcrossBlocksSet>;

// ---------------------------------------------------------------------------
// Problems and iterates
// ---------------------------------------------------------------------------

struct BlockSpec {
  Eigen::Index dim = 0;
  ObjectiveTerm objective;
  FeasibleSet set;
  Eigen::MatrixXd coupling;  // m x dim
};

/// Immutable after assembly: build with assemble_problem and treat as const.
struct BlockProblem {
  std::vector<BlockSpec> blocks;
  Eigen::VectorXd rhs;  // c, length m

  Eigen::Index block_count() const { return static_cast<Eigen::Index>(blocks.size()); }
  Eigen::Index row_dim() const { return rhs.size(); }
  Eigen::Index total_dim() const;
};

/// One segment per block.
struct BlockVector {
  std::vector<Eigen::VectorXd> segments;

  Eigen::Index block_count() const { return static_cast<Eigen::Index>(segments.size()); }
  Eigen::VectorXd flatten() const;
  static BlockVector zeros_like(const BlockProblem& p);
};

/// Tolerance used when deciding set membership for objective_value.
inline constexpr double kSetMembershipTol = 1e-9;

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Validates block dimensions, set shapes, and objective terms (symmetry and
/// positive semidefiniteness for quadratics), then returns the problem.
/// Quadratic Q matrices are symmetrized after the symmetry check so downstream
/// gradient formulas can assume Q = Q'.
BlockProblem assemble_problem(std::vector<BlockSpec> blocks, Eigen::VectorXd rhs);

/// sum_i A_i x_i - c
Eigen::VectorXd primal_residual(const BlockProblem& p, const BlockVector& x);

/// sum_i f_i(x_i), or +infinity when some segment violates its set by more
/// than kSetMembershipTol (or leaves a log term's domain).
double objective_value(const BlockProblem& p, const BlockVector& x);

/// rho * max_i ||A_i (curr_i - prev_i)||_2 -- the dual-residual surrogate used
/// by every engine's stopping test.
double dual_residual_metric(const BlockProblem& p, const BlockVector& prev,
                            const BlockVector& curr, double rho);

/// Value of a single term at x (checks dimensions; +infinity outside a log
/// term's domain).
double term_value(const ObjectiveTerm& term, const Eigen::VectorXd& x);

/// Gradient of a term at x; throws NonFiniteEncountered outside a log term's
/// domain.
Eigen::VectorXd term_gradient(const ObjectiveTerm& term, const Eigen::VectorXd& x);

/// Componentwise violation of the set at x (infinity-norm scale); 0 inside.
/// ZeroSumAcrossBlocksSet cannot be checked per block and reports 0 here; use
/// objective_value on the whole problem for the cross-block check.
double set_violation(const FeasibleSet& set, const Eigen::VectorXd& x);

/// Euclidean projection of the origin onto the set; used for default starts.
Eigen::VectorXd set_projection_of_zero(const FeasibleSet& set, Eigen::Index dim);

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// A problem document as stored on disk: the problem plus an optional start
/// point honored by engines in place of the default projection-of-zero start.
struct ProblemDocument {
  BlockProblem problem;
  std::optional<BlockVector> start;
};

/// JSON layout:
///   { "rhs": [...],
///     "blocks": [ { "dim": n,
///                   "objective": {"kind": ...},
///                   "set": {"kind": ...},
///                   "coupling": [[row], [row], ...] }, ... ],
///     "start": [[...], ...] }            // optional
/// Matrices are row-major nested arrays. Non-finite bounds serialize as the
/// strings "inf" / "-inf"; all finite doubles round-trip exactly.
/// SmoothOracleTerm objectives are callback-backed and cannot be serialized.
nlohmann::json problem_to_json(const ProblemDocument& doc);
ProblemDocument problem_from_json(const nlohmann::json& j);

ProblemDocument load_problem(const std::string& path);
void save_problem(const ProblemDocument& doc, const std::string& path);

}  // namespace admmkit

#endif  // ADMMKIT_PROBLEM_HPP
