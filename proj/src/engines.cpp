// Copyright (c) 2026 admmkit contributors
// Licensed under the Apache License, Version 2.0.

#include "admmkit/engines.hpp"

#include <chrono>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "admmkit/errors.hpp"
#include "admmkit/prox.hpp"

namespace admmkit {

const char* to_string(EngineKind kind) {
  switch (kind) {
    case EngineKind::TwoBlock: return "two-block";
    case EngineKind::GaussSeidel: return "gauss-seidel";
    case EngineKind::Jacobi: return "jacobi";
    case EngineKind::VariableSplitting: return "variable-splitting";
    case EngineKind::GaussianBackSubstitution: return "gbs";
    case EngineKind::ProxJacobi: return "prox-jacobi";
  }
  return "unknown";
}

std::optional<EngineKind> engine_kind_from_string(const std::string& name) {
  for (EngineKind k :
       {EngineKind::TwoBlock, EngineKind::GaussSeidel, EngineKind::Jacobi,
        EngineKind::VariableSplitting, EngineKind::GaussianBackSubstitution,
        EngineKind::ProxJacobi})
    if (name == to_string(k)) return k;
  return std::nullopt;
}

namespace {

constexpr double kInnerTol = 1e-8;
constexpr long kInnerMaxIter = 200000;
constexpr long kSmoothMaxIter = 100000;

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

enum class SubKind { DirectLinear, BoxQp, CappedQp, EqQp, Smooth };

/// One block's prepared subproblem: everything that does not change between
/// iterations is factored or cached here; only the linear term varies.
struct BlockSolver {
  SubKind kind = SubKind::DirectLinear;
  Eigen::MatrixXd Qeff;  // full quadratic of the subproblem (for Smooth: the added quadratic only)
  Eigen::VectorXd f_lin;
  bool has_prox = false;
  Eigen::MatrixXd prox;
  Eigen::LDLT<Eigen::MatrixXd> direct;
  Eigen::FullPivLU<Eigen::MatrixXd> kkt;
  Eigen::Index eq_rows = 0;
  Eigen::VectorXd eq_d;
  QpSpec qp;  // BoxQp / CappedQp template; q is filled per call
  double smooth_mu = 0.0;
  double smooth_lip = 1.0;
  const ObjectiveTerm* objective = nullptr;
};

std::string block_label(std::size_t i) { return "block " + std::to_string(i); }

struct EigenRange {
  double lo;
  double hi;  // max |eigenvalue|
};

EigenRange eigen_range(const Eigen::MatrixXd& Q) {
  if (Q.size() == 0) return {0.0, 0.0};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().minCoeff(), es.eigenvalues().cwiseAbs().maxCoeff()};
}

BlockSolver build_block_solver(const BlockProblem& p, const SolverConfig& cfg, bool use_prox,
                               std::size_t i) {
  const BlockSpec& b = p.blocks[i];
  BlockSolver s;

  Eigen::MatrixXd P;
  if (use_prox) {
    P = prox_weight_matrix(cfg, p, i);
    s.has_prox = P.cwiseAbs().maxCoeff() > 0.0;
  }
  Eigen::MatrixXd Qquad = cfg.rho * (b.coupling.transpose() * b.coupling);
  if (s.has_prox) {
    Qquad += P;
    s.prox = P;
  }

  const auto* lin_term = std::get_if<LinearTerm>(&b.objective);
  const auto* quad_term = std::get_if<QuadraticTerm>(&b.objective);
  const bool polynomial = std::holds_alternative<ZeroTerm>(b.objective) || lin_term || quad_term;

  s.f_lin = Eigen::VectorXd::Zero(b.dim);
  if (lin_term) s.f_lin = lin_term->q;
  if (quad_term) s.f_lin = quad_term->q;
  s.Qeff = quad_term ? Eigen::MatrixXd(Qquad + quad_term->Q) : Qquad;

  if (std::holds_alternative<FreeSet>(b.set)) {
    if (polynomial) {
      s.kind = SubKind::DirectLinear;
      const EigenRange r = eigen_range(s.Qeff);
      if (r.lo <= 1e-12 * std::max(1.0, r.hi))
        fail(ErrorCode::UnsupportedSubproblem,
             block_label(i) + ": free block with a singular quadratic has no unique minimizer");
      s.direct.compute(s.Qeff);
      return s;
    }
    s.kind = SubKind::Smooth;
    const EigenRange r = eigen_range(s.Qeff);
    if (r.lo <= 1e-12 * std::max(1.0, r.hi))
      fail(ErrorCode::UnsupportedSubproblem,
           block_label(i) +
               ": smooth objective needs a positive definite added quadratic "
               "(coupling Gram plus prox weight)");
    s.smooth_mu = r.lo;
    double term_lip = 1.0;
    if (const auto* nl = std::get_if<NegLogAffineTerm>(&b.objective))
      term_lip = nl->weight * nl->a.squaredNorm() / (nl->offset * nl->offset);
    else if (const auto* so = std::get_if<SmoothOracleTerm>(&b.objective))
      term_lip = so->lipschitz;
    s.smooth_lip = r.hi + term_lip;
    s.objective = &b.objective;
    return s;
  }

  if (const auto* box = std::get_if<BoxSet>(&b.set)) {
    if (!polynomial)
      fail(ErrorCode::UnsupportedSubproblem,
           block_label(i) + ": smooth objective over a box set has no solver");
    s.kind = SubKind::BoxQp;
    s.qp = QpSpec{s.Qeff, Eigen::VectorXd::Zero(b.dim), FeasibleSet{*box}};
    return s;
  }

  if (const auto* capped = std::get_if<NonNegCappedSumSet>(&b.set)) {
    if (!polynomial)
      fail(ErrorCode::UnsupportedSubproblem,
           block_label(i) + ": smooth objective over a capped-sum set has no solver");
    s.kind = SubKind::CappedQp;
    s.qp = QpSpec{s.Qeff, Eigen::VectorXd::Zero(b.dim), FeasibleSet{*capped}};
    return s;
  }

  if (const auto* eq = std::get_if<AffineEqualitySet>(&b.set)) {
    if (!polynomial)
      fail(ErrorCode::UnsupportedSubproblem,
           block_label(i) + ": smooth objective over an equality set has no solver");
    s.kind = SubKind::EqQp;
    const Eigen::Index n = b.dim;
    const Eigen::Index rows = eq->E.rows();
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + rows, n + rows);
    kkt.topLeftCorner(n, n) = s.Qeff;
    kkt.topRightCorner(n, rows) = eq->E.transpose();
    kkt.bottomLeftCorner(rows, n) = eq->E;
    s.kkt.compute(kkt);
    if (!s.kkt.isInvertible())
      fail(ErrorCode::SingularKkt, block_label(i) + ": equality-constrained block KKT singular");
    s.eq_rows = rows;
    s.eq_d = eq->d;
    return s;
  }

  fail(ErrorCode::UnsupportedSubproblem,
       block_label(i) + ": the zero-sum group set has no per-block solver");
}

std::vector<BlockSolver> build_solvers(const BlockProblem& p, const SolverConfig& cfg,
                                       bool use_prox) {
  std::vector<BlockSolver> out;
  out.reserve(p.blocks.size());
  for (std::size_t i = 0; i < p.blocks.size(); ++i)
    out.push_back(build_block_solver(p, cfg, use_prox, i));
  return out;
}

Eigen::VectorXd solve_block(BlockSolver& s, const Eigen::VectorXd& lin,
                            const Eigen::VectorXd& start) {
  switch (s.kind) {
    case SubKind::DirectLinear:
      return s.direct.solve(-lin);
    case SubKind::BoxQp:
    case SubKind::CappedQp:
      s.qp.q = lin;
      return solve_box_qp(s.qp, kInnerTol, kInnerMaxIter, start);
    case SubKind::EqQp: {
      const Eigen::Index n = s.Qeff.rows();
      Eigen::VectorXd rhs(n + s.eq_rows);
      rhs.head(n) = -lin;
      rhs.tail(s.eq_rows) = s.eq_d;
      return s.kkt.solve(rhs).head(n);
    }
    case SubKind::Smooth: {
      SmoothSpec spec;
      const ObjectiveTerm* obj = s.objective;
      const Eigen::MatrixXd& Qq = s.Qeff;
      const Eigen::VectorXd q = lin;
      spec.value = [obj, &Qq, q](const Eigen::VectorXd& v) {
        const double f = term_value(*obj, v);
        if (!std::isfinite(f)) return f;
        return f + 0.5 * v.dot(Qq * v) + q.dot(v);
      };
      spec.gradient = [obj, &Qq, q](const Eigen::VectorXd& v) {
        return (term_gradient(*obj, v) + Qq * v + q).eval();
      };
      spec.mu = s.smooth_mu;
      spec.lipschitz = s.smooth_lip;
      spec.start = start;
      return minimize_smooth(spec, kInnerTol, kSmoothMaxIter);
    }
  }
  fail(ErrorCode::UnsupportedSubproblem, "unreachable subproblem kind");
}

struct RunState {
  BlockVector x;
  Eigen::VectorXd lambda;
  std::vector<Eigen::VectorXd> g;  // A_i x_i, refreshed with x
};

RunState init_state(const BlockProblem& p, const SolverConfig& cfg) {
  RunState st;
  if (cfg.start) {
    st.x = *cfg.start;
  } else {
    st.x.segments.reserve(p.blocks.size());
    for (const BlockSpec& b : p.blocks)
      st.x.segments.push_back(set_projection_of_zero(b.set, b.dim));
  }
  st.lambda = Eigen::VectorXd::Zero(p.row_dim());
  st.g.reserve(p.blocks.size());
  for (std::size_t i = 0; i < p.blocks.size(); ++i)
    st.g.push_back(p.blocks[i].coupling * st.x.segments[i]);
  return st;
}

Eigen::VectorXd sum_images(const std::vector<Eigen::VectorXd>& g, Eigen::Index m) {
  Eigen::VectorXd S = Eigen::VectorXd::Zero(m);
  for (const auto& gi : g) S += gi;
  return S;
}

std::vector<std::size_t> identity_order(std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  return order;
}

void check_permutation(const std::vector<std::size_t>& order, std::size_t n) {
  if (order.size() != n)
    fail(ErrorCode::InvalidConfig, "evaluation order must list every block exactly once");
  std::vector<bool> seen(n, false);
  for (std::size_t idx : order) {
    if (idx >= n || seen[idx])
      fail(ErrorCode::InvalidConfig, "evaluation order is not a permutation of the blocks");
    seen[idx] = true;
  }
}

/// Sequential sweep: each update sees the values already produced this sweep.
void gs_sweep(const BlockProblem& p, std::vector<BlockSolver>& solvers, double rho,
              const Eigen::VectorXd& lambda, const std::vector<std::size_t>& order,
              BlockVector& x, std::vector<Eigen::VectorXd>& g, std::vector<double>& ms) {
  Eigen::VectorXd S = sum_images(g, p.row_dim());
  for (std::size_t idx : order) {
    const auto t0 = Clock::now();
    const Eigen::VectorXd s_other = S - g[idx];
    const Eigen::VectorXd w = rho * (s_other - p.rhs) - lambda;
    const Eigen::VectorXd lin = solvers[idx].f_lin + p.blocks[idx].coupling.transpose() * w;
    x.segments[idx] = solve_block(solvers[idx], lin, x.segments[idx]);
    g[idx] = p.blocks[idx].coupling * x.segments[idx];
    S = s_other + g[idx];
    ms[idx] += elapsed_ms(t0);
  }
}

/// Parallel-in-contract sweep: every update reads only the incoming iterate,
/// so results do not depend on the evaluation order.
void jacobi_pass(const BlockProblem& p, std::vector<BlockSolver>& solvers, double rho,
                 const Eigen::VectorXd& lambda, const std::vector<std::size_t>& order,
                 BlockVector& x, std::vector<Eigen::VectorXd>& g, std::vector<double>& ms) {
  const Eigen::VectorXd S = sum_images(g, p.row_dim());
  BlockVector x_new = x;
  for (std::size_t idx : order) {
    const auto t0 = Clock::now();
    const Eigen::VectorXd s_other = S - g[idx];
    const Eigen::VectorXd w = rho * (s_other - p.rhs) - lambda;
    Eigen::VectorXd lin = solvers[idx].f_lin + p.blocks[idx].coupling.transpose() * w;
    if (solvers[idx].has_prox) lin -= solvers[idx].prox * x.segments[idx];
    x_new.segments[idx] = solve_block(solvers[idx], lin, x.segments[idx]);
    ms[idx] += elapsed_ms(t0);
  }
  x = std::move(x_new);
  for (std::size_t i = 0; i < p.blocks.size(); ++i)
    g[i] = p.blocks[i].coupling * x.segments[i];
}

using StepFn = std::function<void(long k, std::vector<double>& block_ms)>;

EngineResult drive(const BlockProblem& p, const SolverConfig& cfg, const StepObserver& observer,
                   RunState& st, const StepFn& step) {
  IterationTrace trace;
  Status status = Status::MaxIterReached;
  for (long k = 0; k < cfg.max_iter; ++k) {
    const BlockVector x_prev = st.x;
    std::vector<double> ms(p.blocks.size(), 0.0);
    step(k, ms);

    const double rnorm = primal_residual(p, st.x).norm();
    const double dual = dual_residual_metric(p, x_prev, st.x, cfg.rho);
    const double obj = objective_value(p, st.x);
    trace.append(TraceRow{k, obj, rnorm, dual, std::move(ms)});

    if (observer) {
      try {
        observer(k, st.x, st.lambda);
      } catch (const std::exception& e) {
        fail(ErrorCode::ObserverFailure, std::string("step observer threw: ") + e.what());
      }
    }

    bool finite = std::isfinite(rnorm) && std::isfinite(dual) && st.lambda.allFinite();
    for (const auto& seg : st.x.segments) finite = finite && seg.allFinite();
    if (!finite || rnorm > cfg.divergence_threshold) {
      status = Status::Diverged;
      break;
    }
    if (rnorm <= cfg.tol_primal && dual <= cfg.tol_dual) {
      status = Status::Converged;
      break;
    }
  }

  EngineResult out;
  const TraceRow& last = trace.rows.back();
  out.report.status = status;
  out.report.iterations = trace.iterations();
  out.report.final_primal_residual = last.primal_residual;
  out.report.final_dual_metric = last.dual_metric;
  out.report.final_objective = last.objective;
  out.report.final_x = st.x;
  out.report.final_multiplier = st.lambda;
  out.trace = std::move(trace);
  return out;
}

EngineResult run_sequential_impl(const BlockProblem& p, const SolverConfig& cfg,
                                 const std::vector<std::size_t>& order,
                                 const StepObserver& observer) {
  validate_config(cfg, p);
  auto solvers = build_solvers(p, cfg, /*use_prox=*/false);
  RunState st = init_state(p, cfg);
  const StepFn step = [&](long, std::vector<double>& ms) {
    gs_sweep(p, solvers, cfg.rho, st.lambda, order, st.x, st.g, ms);
    st.lambda -= cfg.rho * primal_residual(p, st.x);
  };
  return drive(p, cfg, observer, st, step);
}

EngineResult run_parallel_impl(const BlockProblem& p, const SolverConfig& cfg,
                               const std::vector<std::size_t>& order,
                               const StepObserver& observer, bool use_prox, double gamma) {
  validate_config(cfg, p);
  auto solvers = build_solvers(p, cfg, use_prox);
  RunState st = init_state(p, cfg);
  const StepFn step = [&](long, std::vector<double>& ms) {
    jacobi_pass(p, solvers, cfg.rho, st.lambda, order, st.x, st.g, ms);
    st.lambda -= (gamma * cfg.rho) * primal_residual(p, st.x);
  };
  return drive(p, cfg, observer, st, step);
}

}  // namespace

EngineResult run_two_block(const BlockProblem& p, const SolverConfig& cfg,
                           const StepObserver& observer) {
  if (p.block_count() != 2)
    fail(ErrorCode::InvalidConfig, "the two-block engine requires exactly 2 blocks");
  return run_sequential_impl(p, cfg, identity_order(2), observer);
}

EngineResult run_gauss_seidel(const BlockProblem& p, const SolverConfig& cfg,
                              const StepObserver& observer) {
  return run_sequential_impl(p, cfg, identity_order(p.blocks.size()), observer);
}

EngineResult run_gauss_seidel_ordered(const BlockProblem& p, const SolverConfig& cfg,
                                      const std::vector<std::size_t>& order,
                                      const StepObserver& observer) {
  check_permutation(order, p.blocks.size());
  return run_sequential_impl(p, cfg, order, observer);
}

EngineResult run_jacobi(const BlockProblem& p, const SolverConfig& cfg,
                        const StepObserver& observer) {
  return run_parallel_impl(p, cfg, identity_order(p.blocks.size()), observer,
                           /*use_prox=*/false, /*gamma=*/1.0);
}

EngineResult run_jacobi_ordered(const BlockProblem& p, const SolverConfig& cfg,
                                const std::vector<std::size_t>& order,
                                const StepObserver& observer) {
  check_permutation(order, p.blocks.size());
  return run_parallel_impl(p, cfg, order, observer, /*use_prox=*/false, /*gamma=*/1.0);
}

EngineResult run_prox_jacobi(const BlockProblem& p, const SolverConfig& cfg,
                             const StepObserver& observer) {
  return run_parallel_impl(p, cfg, identity_order(p.blocks.size()), observer,
                           /*use_prox=*/true, cfg.gamma);
}

EngineResult run_variable_splitting_ex(const BlockProblem& p, const SolverConfig& cfg,
                                       const StepObserver& observer,
                                       const VsObserver& vs_observer) {
  validate_config(cfg, p);
  auto solvers = build_solvers(p, cfg, /*use_prox=*/false);
  RunState st = init_state(p, cfg);

  const std::size_t n = p.blocks.size();
  const double nd = static_cast<double>(n);
  const Eigen::Index m = p.row_dim();
  const Eigen::VectorXd share = p.rhs / nd;  // each block's slice c/N
  std::vector<Eigen::VectorXd> z(n, Eigen::VectorXd::Zero(m));
  std::vector<Eigen::VectorXd> lams(n, Eigen::VectorXd::Zero(m));

  const StepFn step = [&](long k, std::vector<double>& ms) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto t0 = Clock::now();
      const Eigen::VectorXd w = cfg.rho * (z[i] - share) - lams[i];
      const Eigen::VectorXd lin = solvers[i].f_lin + p.blocks[i].coupling.transpose() * w;
      st.x.segments[i] = solve_block(solvers[i], lin, st.x.segments[i]);
      st.g[i] = p.blocks[i].coupling * st.x.segments[i];
      ms[i] += elapsed_ms(t0);
    }

    // Re-center the auxiliary group: the unconstrained per-block minimizers,
    // shifted by their mean so they sum to zero.
    std::vector<Eigen::VectorXd> w(n);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = share + lams[i] / cfg.rho - st.g[i];
      mean += w[i];
    }
    mean /= nd;
    for (std::size_t i = 0; i < n; ++i) z[i] = w[i] - mean;

    Eigen::VectorXd lam_mean = Eigen::VectorXd::Zero(m);
    for (std::size_t i = 0; i < n; ++i) {
      lams[i] -= cfg.rho * (st.g[i] + z[i] - share);
      lam_mean += lams[i];
    }
    st.lambda = lam_mean / nd;

    if (vs_observer) {
      try {
        vs_observer(k, VsSnapshot{st.x, z, lams});
      } catch (const std::exception& e) {
        fail(ErrorCode::ObserverFailure, std::string("split-state observer threw: ") + e.what());
      }
    }
  };
  return drive(p, cfg, observer, st, step);
}

EngineResult run_variable_splitting(const BlockProblem& p, const SolverConfig& cfg,
                                    const StepObserver& observer) {
  return run_variable_splitting_ex(p, cfg, observer, {});
}

EngineResult run_gbs_ex(const BlockProblem& p, const SolverConfig& cfg,
                        const StepObserver& observer,
                        const PredictionObserver& prediction_observer) {
  validate_config(cfg, p);
  auto solvers = build_solvers(p, cfg, /*use_prox=*/false);
  CorrectionMatrices corr = build_correction_matrices(p, cfg.rho);
  RunState st = init_state(p, cfg);
  const std::vector<std::size_t> order = identity_order(p.blocks.size());
  const std::size_t n = p.blocks.size();

  const StepFn step = [&](long k, std::vector<double>& ms) {
    BlockVector x_pred = st.x;
    std::vector<Eigen::VectorXd> g_pred = st.g;
    gs_sweep(p, solvers, cfg.rho, st.lambda, order, x_pred, g_pred, ms);
    const Eigen::VectorXd lambda_pred = st.lambda - cfg.rho * primal_residual(p, x_pred);

    if (prediction_observer) {
      try {
        prediction_observer(k, x_pred, lambda_pred);
      } catch (const std::exception& e) {
        fail(ErrorCode::ObserverFailure, std::string("prediction observer threw: ") + e.what());
      }
    }

    // Correction: back substitution through the unit upper-triangular system,
    // multiplier slot first, then blocks N down to 2.
    st.lambda += cfg.alpha * (lambda_pred - st.lambda);
    if (n >= 2) {
      std::vector<Eigen::VectorXd> dx(n);
      dx[n - 1] = cfg.alpha * (x_pred.segments[n - 1] - st.x.segments[n - 1]);
      for (std::size_t i = n - 2; i >= 1; --i) {
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(p.blocks[i].dim);
        for (std::size_t j = i + 1; j < n; ++j)
          acc += corr.cross_products[i - 1][j - i - 1] * dx[j];
        dx[i] = cfg.alpha * (x_pred.segments[i] - st.x.segments[i]) -
                corr.gram_factors[i - 1].solve(acc);
      }
      for (std::size_t i = 1; i < n; ++i) st.x.segments[i] += dx[i];
    }
    st.x.segments[0] = x_pred.segments[0];
    for (std::size_t i = 0; i < n; ++i) st.g[i] = p.blocks[i].coupling * st.x.segments[i];
  };
  return drive(p, cfg, observer, st, step);
}

EngineResult run_gbs(const BlockProblem& p, const SolverConfig& cfg,
                     const StepObserver& observer) {
  return run_gbs_ex(p, cfg, observer, {});
}

EngineResult run_engine(EngineKind kind, const BlockProblem& p, const SolverConfig& cfg,
                        const StepObserver& observer) {
  switch (kind) {
    case EngineKind::TwoBlock: return run_two_block(p, cfg, observer);
    case EngineKind::GaussSeidel: return run_gauss_seidel(p, cfg, observer);
    case EngineKind::Jacobi: return run_jacobi(p, cfg, observer);
    case EngineKind::VariableSplitting: return run_variable_splitting(p, cfg, observer);
    case EngineKind::GaussianBackSubstitution: return run_gbs(p, cfg, observer);
    case EngineKind::ProxJacobi: return run_prox_jacobi(p, cfg, observer);
  }
  fail(ErrorCode::InvalidConfig, "unknown engine kind");
}

// ---------------------------------------------------------------------------
// Back-substitution correction data
// ---------------------------------------------------------------------------

CorrectionMatrices build_correction_matrices(const BlockProblem& p, double rho) {
  if (!(rho > 0.0)) fail(ErrorCode::InvalidConfig, "rho must be > 0");
  CorrectionMatrices out;
  out.rho = rho;
  out.multiplier_dim = p.row_dim();

  const std::size_t n = p.blocks.size();
  for (std::size_t i = 1; i < n; ++i) {
    const Eigen::MatrixXd G = p.blocks[i].coupling.transpose() * p.blocks[i].coupling;
    const EigenRange r = eigen_range(G);
    if (r.lo <= 1e-10 * std::max(1.0, r.hi))
      fail(ErrorCode::SingularBlock,
           "coupling Gram of " + block_label(i) + " is singular; the correction needs it invertible");
    out.corrected_dims.push_back(p.blocks[i].dim);
    out.H_blocks.push_back(rho * G);
    out.gram_factors.emplace_back(G);
    std::vector<Eigen::MatrixXd> row;
    for (std::size_t j = 1; j <= i; ++j)
      row.push_back(rho * (p.blocks[i].coupling.transpose() * p.blocks[j].coupling));
    out.M_rows.push_back(std::move(row));
  }
  out.H_blocks.push_back((1.0 / rho) *
                         Eigen::MatrixXd::Identity(out.multiplier_dim, out.multiplier_dim));
  for (std::size_t i = 1; i + 1 < n; ++i) {
    std::vector<Eigen::MatrixXd> cp;
    for (std::size_t j = i + 1; j < n; ++j)
      cp.push_back(p.blocks[i].coupling.transpose() * p.blocks[j].coupling);
    out.cross_products.push_back(std::move(cp));
  }
  return out;
}

Eigen::MatrixXd CorrectionMatrices::H_dense() const {
  Eigen::Index total = 0;
  for (const auto& Hb : H_blocks) total += Hb.rows();
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(total, total);
  Eigen::Index off = 0;
  for (const auto& Hb : H_blocks) {
    H.block(off, off, Hb.rows(), Hb.cols()) = Hb;
    off += Hb.rows();
  }
  return H;
}

Eigen::MatrixXd CorrectionMatrices::M_dense() const {
  Eigen::Index total = multiplier_dim;
  for (Eigen::Index d : corrected_dims) total += d;
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(total, total);
  Eigen::Index row_off = 0;
  for (std::size_t r = 0; r < M_rows.size(); ++r) {
    Eigen::Index col_off = 0;
    for (const Eigen::MatrixXd& blockM : M_rows[r]) {
      M.block(row_off, col_off, blockM.rows(), blockM.cols()) = blockM;
      col_off += blockM.cols();
    }
    row_off += corrected_dims[r];
  }
  M.block(row_off, row_off, multiplier_dim, multiplier_dim) =
      (1.0 / rho) * Eigen::MatrixXd::Identity(multiplier_dim, multiplier_dim);
  return M;
}

}  // namespace admmkit
