// Copyright (c) 2026 admmkit contributors
// Licensed under the Apache License, Version 2.0.

#include "admmkit/prox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace admmkit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double spectral_upper_bound(const Eigen::MatrixXd& Q) {
  if (Q.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q, Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues().maxCoeff());
}

}  // namespace

Eigen::VectorXd project_box(const Eigen::VectorXd& x, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper) {
  if (lower.size() != x.size() || upper.size() != x.size())
    fail(ErrorCode::DimensionMismatch, "project_box: bound lengths");
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (lower[i] > upper[i]) fail(ErrorCode::InvalidSet, "project_box: bounds crossed");
  return x.cwiseMax(lower).cwiseMin(upper);
}

Eigen::VectorXd project_capped_simplexoid(const Eigen::VectorXd& x, double cap) {
  if (!(cap >= 0.0)) fail(ErrorCode::InvalidSet, "project_capped_simplexoid: negative cap");
  const Eigen::Index n = x.size();
  if (n == 0) return x;
  Eigen::VectorXd clipped = x.cwiseMax(0.0);
  if (clipped.sum() <= cap) return clipped;
  if (cap == 0.0) return Eigen::VectorXd::Zero(n);

  // Threshold tau with sum(max(x - tau, 0)) = cap. Sort values descending;
  // ties are broken by index to keep the order fully specified.
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&x](Eigen::Index a, Eigen::Index b) { return x[a] > x[b]; });
  double cumulative = 0.0;
  double tau = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double v = x[order[static_cast<std::size_t>(k)]];
    cumulative += v;
    const double candidate = (cumulative - cap) / static_cast<double>(k + 1);
    if (v - candidate > 0.0)
      tau = candidate;
    else
      break;
  }
  return (x.array() - tau).max(0.0).matrix();
}

Eigen::VectorXd solve_projected_qp(
    const Eigen::MatrixXd& Q, const Eigen::VectorXd& q,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& project, double tol,
    long max_iter, const Eigen::VectorXd& start) {
  const double lipschitz = std::max(spectral_upper_bound(Q), 1e-12);
  const double step = 1.0 / lipschitz;

  Eigen::VectorXd x = project(start);
  Eigen::VectorXd y = x;
  double t = 1.0;
  Eigen::VectorXd best = x;
  double best_residual = kInf;

  for (long k = 0; k < max_iter; ++k) {
    const Eigen::VectorXd gy = Q * y + q;
    Eigen::VectorXd xn = project(y - step * gy);
    if (!xn.allFinite())
      throw MaxIterError("projected QP produced non-finite iterates (unbounded below?)", best);

    const Eigen::VectorXd gn = Q * xn + q;
    const double residual = (xn - project(xn - gn)).cwiseAbs().maxCoeff();
    if (residual < best_residual) {
      best_residual = residual;
      best = xn;
    }
    if (residual <= tol) return xn;

    // Gradient-mapping restart keeps the momentum sequence monotone enough.
    if ((y - xn).dot(xn - x) > 0.0) t = 1.0;
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = xn + ((t - 1.0) / tn) * (xn - x);
    x = xn;
    t = tn;
  }
  throw MaxIterError("projected QP did not reach the requested tolerance", best);
}

namespace {

// One pass of active-set refinement for box QPs: guess the bound-active set
// from the current iterate, solve the free subsystem exactly, and keep the
// result only if it lowers the objective.
bool polish_box_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& q,
                   const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                   Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  const Eigen::VectorXd g = Q * x + q;
  std::vector<Eigen::Index> free_idx;
  free_idx.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool at_lower = x[i] <= lower[i] && g[i] > 0.0;
    const bool at_upper = x[i] >= upper[i] && g[i] < 0.0;
    if (!at_lower && !at_upper) free_idx.push_back(i);
  }
  const Eigen::Index nf = static_cast<Eigen::Index>(free_idx.size());
  if (nf == 0 || nf == n) {
    if (nf == 0) return false;
  }
  Eigen::MatrixXd Qff(nf, nf);
  Eigen::VectorXd rhs(nf);
  for (Eigen::Index a = 0; a < nf; ++a) {
    const Eigen::Index i = free_idx[static_cast<std::size_t>(a)];
    double fixed_part = q[i];
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::find(free_idx.begin(), free_idx.end(), j) == free_idx.end())
        fixed_part += Q(i, j) * x[j];
    }
    rhs[a] = -fixed_part;
    for (Eigen::Index b = 0; b < nf; ++b)
      Qff(a, b) = Q(i, free_idx[static_cast<std::size_t>(b)]);
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(Qff);
  if (ldlt.info() != Eigen::Success) return false;
  const Eigen::VectorXd xf = ldlt.solve(rhs);
  if (!xf.allFinite()) return false;
  if ((Qff * xf - rhs).cwiseAbs().maxCoeff() >
      1e-8 * std::max(1.0, rhs.cwiseAbs().maxCoeff()))
    return false;

  Eigen::VectorXd candidate = x;
  for (Eigen::Index a = 0; a < nf; ++a) candidate[free_idx[static_cast<std::size_t>(a)]] = xf[a];
  candidate = candidate.cwiseMax(lower).cwiseMin(upper);
  const auto value = [&](const Eigen::VectorXd& v) { return 0.5 * v.dot(Q * v) + q.dot(v); };
  if (value(candidate) < value(x)) {
    x = candidate;
    return true;
  }
  return false;
}

}  // namespace

Eigen::VectorXd solve_box_qp(const QpSpec& spec, double tol, long max_iter,
                             const std::optional<Eigen::VectorXd>& start) {
  const Eigen::Index n = spec.Q.rows();
  if (spec.Q.cols() != n || spec.q.size() != n)
    fail(ErrorCode::DimensionMismatch, "solve_box_qp: objective shape");

  const auto* box = std::get_if<BoxSet>(&spec.set);
  const auto* capped = std::get_if<NonNegCappedSumSet>(&spec.set);
  if (!box && !capped)
    fail(ErrorCode::InvalidSet, "solve_box_qp: set must be a box or a capped nonnegative sum");

  if (capped) {
    const double cap = capped->cap;
    const Eigen::VectorXd x0 =
        start ? project_capped_simplexoid(*start, cap) : Eigen::VectorXd::Zero(n);
    return solve_projected_qp(
        spec.Q, spec.q,
        [cap](const Eigen::VectorXd& v) { return project_capped_simplexoid(v, cap); }, tol,
        max_iter, x0);
  }

  const Eigen::VectorXd& lower = box->lower;
  const Eigen::VectorXd& upper = box->upper;
  if (lower.size() != n || upper.size() != n)
    fail(ErrorCode::DimensionMismatch, "solve_box_qp: bound lengths");
  for (Eigen::Index i = 0; i < n; ++i)
    if (lower[i] > upper[i]) fail(ErrorCode::InvalidSet, "solve_box_qp: bounds crossed");

  const auto clamp = [&](const Eigen::VectorXd& v) {
    return v.cwiseMax(lower).cwiseMin(upper).eval();
  };
  const double lipschitz = std::max(spectral_upper_bound(spec.Q), 1e-12);
  const double step = 1.0 / lipschitz;

  Eigen::VectorXd x = clamp(start ? *start : Eigen::VectorXd::Zero(n));
  Eigen::VectorXd y = x;
  double t = 1.0;
  Eigen::VectorXd best = x;
  double best_residual = kInf;
  constexpr long kPolishEvery = 20;

  for (long k = 0; k < max_iter; ++k) {
    const Eigen::VectorXd gy = spec.Q * y + spec.q;
    Eigen::VectorXd xn = clamp(y - step * gy);
    if (!xn.allFinite())
      throw MaxIterError("solve_box_qp produced non-finite iterates (unbounded below?)", best);

    if ((k + 1) % kPolishEvery == 0) {
      if (polish_box_qp(spec.Q, spec.q, lower, upper, xn)) {
        y = xn;
        t = 1.0;
      }
    }

    const Eigen::VectorXd gn = spec.Q * xn + spec.q;
    const double residual = (xn - clamp(xn - gn)).cwiseAbs().maxCoeff();
    if (residual < best_residual) {
      best_residual = residual;
      best = xn;
    }
    if (residual <= tol) return xn;

    if ((y - xn).dot(xn - x) > 0.0) t = 1.0;
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = xn + ((t - 1.0) / tn) * (xn - x);
    x = xn;
    t = tn;
  }
  throw MaxIterError("solve_box_qp did not reach the requested tolerance", best);
}

Eigen::VectorXd solve_eq_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& q,
                            const Eigen::MatrixXd& E, const Eigen::VectorXd& d) {
  const Eigen::Index n = Q.rows();
  const Eigen::Index p = E.rows();
  if (Q.cols() != n || q.size() != n || (p > 0 && E.cols() != n) || d.size() != p)
    fail(ErrorCode::DimensionMismatch, "solve_eq_qp: shapes");

  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + p, n + p);
  kkt.topLeftCorner(n, n) = Q;
  if (p > 0) {
    kkt.topRightCorner(n, p) = E.transpose();
    kkt.bottomLeftCorner(p, n) = E;
  }
  Eigen::VectorXd rhs(n + p);
  rhs.head(n) = -q;
  rhs.tail(p) = d;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  if (!lu.isInvertible()) fail(ErrorCode::SingularKkt, "solve_eq_qp: singular KKT system");
  const Eigen::VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite()) fail(ErrorCode::SingularKkt, "solve_eq_qp: non-finite KKT solution");
  const Eigen::VectorXd x = sol.head(n);
  if (p > 0) {
    const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
    if ((E * x - d).cwiseAbs().maxCoeff() > 1e-9 * scale)
      fail(ErrorCode::SingularKkt, "solve_eq_qp: equality residual too large");
  }
  return x;
}

Eigen::VectorXd minimize_smooth(const SmoothSpec& spec, double tol, long max_iter) {
  if (!spec.value || !spec.gradient)
    fail(ErrorCode::InvalidConfig, "minimize_smooth: missing callbacks");
  if (!(spec.mu > 0.0))
    fail(ErrorCode::InvalidConfig, "minimize_smooth: strong convexity modulus must be positive");
  if (!(spec.lipschitz > 0.0))
    fail(ErrorCode::InvalidConfig, "minimize_smooth: Lipschitz bound must be positive");

  Eigen::VectorXd x = spec.start;
  double fx = spec.value(x);
  if (!std::isfinite(fx))
    fail(ErrorCode::NonFiniteEncountered, "minimize_smooth: start outside the domain");

  double step = 1.0 / spec.lipschitz;
  for (long k = 0; k < max_iter; ++k) {
    const Eigen::VectorXd g = spec.gradient(x);
    if (!g.allFinite())
      fail(ErrorCode::NonFiniteEncountered, "minimize_smooth: non-finite gradient");
    const double gnorm = g.norm();
    if (gnorm <= tol) return x;

    const double slope = 0.5 * gnorm * gnorm;

    // Once the guaranteed decrease at step 1/L drops below rounding noise in
    // the value, the sufficient-decrease test is meaningless; plain 1/L steps
    // still contract the gradient, so take those without a value guard.
    if (slope / spec.lipschitz <= 1e-14 * std::max(1.0, std::abs(fx))) {
      double fallback = 1.0 / spec.lipschitz;
      bool moved = false;
      for (int halving = 0; halving < 60; ++halving) {
        const Eigen::VectorXd trial = x - fallback * g;
        const double ft = spec.value(trial);
        if (std::isfinite(ft)) {
          x = trial;
          fx = ft;
          moved = true;
          break;
        }
        fallback *= 0.5;
      }
      if (!moved)
        fail(ErrorCode::NonFiniteEncountered, "minimize_smooth: line search stalled");
      continue;
    }

    step = std::min(step * 2.0, 1e12);
    bool accepted = false;
    for (int halving = 0; halving < 200; ++halving) {
      const Eigen::VectorXd trial = x - step * g;
      const double ft = spec.value(trial);
      if (std::isfinite(ft) && ft <= fx - step * slope) {
        x = trial;
        fx = ft;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted)
      fail(ErrorCode::NonFiniteEncountered, "minimize_smooth: line search stalled");
  }
  throw MaxIterError("minimize_smooth did not reach the gradient tolerance", x);
}

// ---------------------------------------------------------------------------
// BoxEqQpSolver
// ---------------------------------------------------------------------------

BoxEqQpSolver::BoxEqQpSolver(Eigen::MatrixXd Q, Eigen::MatrixXd E, Eigen::VectorXd lower,
                             Eigen::VectorXd upper, double omega)
    : Q_(std::move(Q)),
      E_(std::move(E)),
      lower_(std::move(lower)),
      upper_(std::move(upper)),
      omega_(omega) {
  const Eigen::Index n = Q_.rows();
  const Eigen::Index p = E_.rows();
  if (Q_.cols() != n || lower_.size() != n || upper_.size() != n || (p > 0 && E_.cols() != n))
    fail(ErrorCode::DimensionMismatch, "BoxEqQpSolver: shapes");
  if (!(omega_ > 0.0)) fail(ErrorCode::InvalidConfig, "BoxEqQpSolver: omega must be positive");
  for (Eigen::Index i = 0; i < n; ++i)
    if (lower_[i] > upper_[i]) fail(ErrorCode::InvalidSet, "BoxEqQpSolver: bounds crossed");

  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + p, n + p);
  kkt.topLeftCorner(n, n) = Q_ + omega_ * Eigen::MatrixXd::Identity(n, n);
  if (p > 0) {
    kkt.topRightCorner(n, p) = E_.transpose();
    kkt.bottomLeftCorner(p, n) = E_;
  }
  kkt_.compute(kkt);
  if (!kkt_.isInvertible())
    fail(ErrorCode::SingularKkt, "BoxEqQpSolver: equality rows are rank deficient");
  z_ = Eigen::VectorXd::Zero(n).cwiseMax(lower_).cwiseMin(upper_);
  u_ = Eigen::VectorXd::Zero(n);
}

void BoxEqQpSolver::reset_warm_start() {
  z_ = Eigen::VectorXd::Zero(z_.size()).cwiseMax(lower_).cwiseMin(upper_);
  u_.setZero();
}

BoxEqQpSolver::Result BoxEqQpSolver::solve(const Eigen::VectorXd& q, const Eigen::VectorXd& d,
                                           double tol, long max_iter) {
  const Eigen::Index n = Q_.rows();
  const Eigen::Index p = E_.rows();
  if (q.size() != n || d.size() != p)
    fail(ErrorCode::DimensionMismatch, "BoxEqQpSolver::solve: rhs shapes");

  Eigen::VectorXd rhs(n + p);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(p);
  Result res;
  for (long k = 0; k < max_iter; ++k) {
    rhs.head(n) = omega_ * (z_ - u_) - q;
    rhs.tail(p) = d;
    const Eigen::VectorXd sol = kkt_.solve(rhs);
    x = sol.head(n);
    nu = sol.tail(p);
    if (!x.allFinite()) fail(ErrorCode::NonFiniteEncountered, "BoxEqQpSolver: non-finite iterate");

    const Eigen::VectorXd z_prev = z_;
    z_ = (x + u_).cwiseMax(lower_).cwiseMin(upper_);
    u_ += x - z_;

    const double primal = (x - z_).cwiseAbs().maxCoeff();
    const double dual = omega_ * (z_ - z_prev).cwiseAbs().maxCoeff();
    if (primal <= tol && dual <= tol) {
      res.converged = true;
      res.iterations = k + 1;
      break;
    }
    res.iterations = k + 1;
  }

  res.x = z_;
  res.eq_dual = nu;
  res.eq_residual = p > 0 ? (E_ * z_ - d).cwiseAbs().maxCoeff() : 0.0;
  const Eigen::VectorXd grad = Q_ * z_ + q + (p > 0 ? (E_.transpose() * nu).eval()
                                                    : Eigen::VectorXd::Zero(n).eval());
  res.fixed_point_residual =
      (z_ - (z_ - grad).cwiseMax(lower_).cwiseMin(upper_)).cwiseAbs().maxCoeff();
  return res;
}

double BoxEqQpSolver::min_violation(const Eigen::VectorXd& d, double tol, long max_iter) const {
  if (E_.rows() == 0) return 0.0;
  const Eigen::MatrixXd gram = E_.transpose() * E_;
  const Eigen::VectorXd lin = -E_.transpose() * d;
  const auto clamp = [this](const Eigen::VectorXd& v) {
    return v.cwiseMax(lower_).cwiseMin(upper_).eval();
  };
  Eigen::VectorXd x;
  try {
    x = solve_projected_qp(gram, lin, clamp, tol, max_iter,
                           Eigen::VectorXd::Zero(E_.cols()));
  } catch (const MaxIterError& e) {
    x = e.best_iterate();
  }
  return (E_ * x - d).norm();
}

Eigen::VectorXd solve_box_eq_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& q,
                                const Eigen::MatrixXd& E, const Eigen::VectorXd& d,
                                const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                double tol, long max_iter) {
  BoxEqQpSolver solver(Q, E, lower, upper);
  const auto res = solver.solve(q, d, tol, max_iter);
  if (!res.converged)
    throw MaxIterError("solve_box_eq_qp did not converge (infeasible constraints?)", res.x);
  return res.x;
}

}  // namespace admmkit
