// Copyright (c) 2026 admmkit contributors
// Licensed under the Apache License, Version 2.0.
//
// Small deterministic solvers for the per-block subproblems: projections,
// box- and equality-constrained quadratic programs, and a line-searched
// gradient method for smooth strongly convex objectives. Everything here is
// single-threaded and bitwise reproducible for fixed inputs.

#ifndef ADMMKIT_PROX_HPP
#define ADMMKIT_PROX_HPP

#include <functional>
#include <optional>

#include <Eigen/Core>
#include <Eigen/LU>

#include "admmkit/problem.hpp"

namespace admmkit {

/// Componentwise clamp onto [lower, upper]; bounds may be infinite.
Eigen::VectorXd project_box(const Eigen::VectorXd& x, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper);

/// Euclidean projection onto { y : y >= 0, sum(y) <= cap }. Clips negatives;
/// when the clipped sum still exceeds the cap, shifts by the threshold tau
/// with sum(max(x - tau, 0)) = cap, found by a stable descending sort.
Eigen::VectorXd project_capped_simplexoid(const Eigen::VectorXd& x, double cap);

/// minimize 0.5 x'Qx + q'x over the given set (Box or NonNegCappedSum).
struct QpSpec {
  Eigen::MatrixXd Q;  // symmetric positive semidefinite
  Eigen::VectorXd q;
  FeasibleSet set;
};

/// Accelerated projected gradient with periodic active-set refinement.
/// Returns x with ||x - proj(x - (Qx + q))||_inf <= tol; throws MaxIterError
/// (carrying the best iterate) when the budget runs out first.
Eigen::VectorXd solve_box_qp(const QpSpec& spec, double tol = 1e-8, long max_iter = 200000,
                             const std::optional<Eigen::VectorXd>& start = std::nullopt);

/// Projected-gradient core behind solve_box_qp, usable with any projector.
/// No feasibility validation and no active-set refinement.
Eigen::VectorXd solve_projected_qp(
    const Eigen::MatrixXd& Q, const Eigen::VectorXd& q,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& project, double tol,
    long max_iter, const Eigen::VectorXd& start);

/// minimize 0.5 x'Qx + q'x subject to Ex = d via one dense KKT solve.
/// E must have full row rank and Q must be positive definite on null(E);
/// otherwise throws SingularKkt. The returned x satisfies ||Ex - d|| within
/// 1e-9 relative.
Eigen::VectorXd solve_eq_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& q,
                            const Eigen::MatrixXd& E, const Eigen::VectorXd& d);

/// Smooth strongly convex minimization target. mu is the strong-convexity
/// modulus (must be positive), lipschitz an upper bound on the gradient's
/// Lipschitz constant on the relevant sublevel set.
struct SmoothSpec {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  double mu = 0.0;
  double lipschitz = 1.0;
  Eigen::VectorXd start;
};

/// Gradient descent with deterministic Armijo backtracking: the first trial
/// step is 1/lipschitz, accepted steps may grow by 2x between iterations, and
/// non-finite trial values simply fail the decrease test. Near the optimum,
/// where the decrease margin sinks below rounding noise in the value, it
/// switches to plain 1/lipschitz steps so tight tolerances stay reachable.
/// Stops when ||grad||_2 <= tol. Throws NonFiniteEncountered if the start is
/// outside the objective's domain and MaxIterError when the budget runs out.
Eigen::VectorXd minimize_smooth(const SmoothSpec& spec, double tol = 1e-8,
                                long max_iter = 100000);

// ---------------------------------------------------------------------------
// Box + equality QP
// ---------------------------------------------------------------------------

/// Splitting solver for  minimize 0.5 x'Qx + q'x  s.t.  Ex = d, lo <= x <= up.
/// Alternates a prefactored KKT solve (quadratic + equality rows) with a box
/// clamp and a running multiplier, so Q may be singular as long as E has full
/// row rank. The instance keeps its factorization and warm-start state, which
/// makes repeated solves with fresh linear terms cheap.
class BoxEqQpSolver {
 public:
  struct Result {
    Eigen::VectorXd x;        // box-feasible solution (the clamp-side iterate)
    Eigen::VectorXd eq_dual;  // multipliers for Ex = d
    double eq_residual = 0.0;           // ||Ex - d||_inf at x
    double fixed_point_residual = 0.0;  // ||x - clamp(x - (Qx + q + E'nu))||_inf
    long iterations = 0;
    bool converged = false;
  };

  BoxEqQpSolver(Eigen::MatrixXd Q, Eigen::MatrixXd E, Eigen::VectorXd lower,
                Eigen::VectorXd upper, double omega = 1.0);

  /// Solve with the stored structure and the given linear term / right-hand
  /// side, warm-starting from the previous call on this instance.
  Result solve(const Eigen::VectorXd& q, const Eigen::VectorXd& d, double tol = 1e-9,
               long max_iter = 200000);

  /// Least achievable ||Ex - d||_2 over the box, to solver accuracy. A value
  /// above the caller's tolerance certifies infeasibility of the constraints.
  double min_violation(const Eigen::VectorXd& d, double tol = 1e-10,
                       long max_iter = 400000) const;

  void reset_warm_start();
  const Eigen::MatrixXd& Q() const { return Q_; }

 private:
  Eigen::MatrixXd Q_;
  Eigen::MatrixXd E_;
  Eigen::VectorXd lower_, upper_;
  double omega_;
  Eigen::FullPivLU<Eigen::MatrixXd> kkt_;
  Eigen::VectorXd z_, u_;  // warm-start state
};

/// One-shot convenience wrapper around BoxEqQpSolver.
Eigen::VectorXd solve_box_eq_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& q,
                                const Eigen::MatrixXd& E, const Eigen::VectorXd& d,
                                const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                double tol = 1e-9, long max_iter = 200000);

}  // namespace admmkit

#endif  // ADMMKIT_PROX_HPP
