// Copyright (c) 2026 admmkit contributors
// Licensed under the Apache License, Version 2.0.

#include "admmkit/offload.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <utility>

#include <nlohmann/json.hpp>

#include "admmkit/errors.hpp"
#include "admmkit/prox.hpp"

namespace admmkit {

namespace {

constexpr double kInnerTol = 1e-8;
constexpr long kSmoothMaxIter = 100000;

double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

OffloadInstance build_offload(Eigen::Index num_bs, Eigen::Index num_ap, double cap,
                              unsigned long theta_seed) {
  if (num_bs < 1 || num_ap < 1) fail(ErrorCode::InvalidConfig, "node counts must be positive");
  OffloadInstance inst;
  inst.num_bs = num_bs;
  inst.num_ap = num_ap;
  inst.caps = Eigen::VectorXd::Constant(num_ap, cap);
  inst.theta.resize(num_ap);
  std::mt19937_64 rng(theta_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index a = 0; a < num_ap; ++a) inst.theta(a) = std::max(0.01, normal(rng));
  inst.x = Eigen::MatrixXd::Zero(num_bs, num_ap);
  inst.y = Eigen::MatrixXd::Zero(num_ap, num_bs);
  inst.lambda = Eigen::MatrixXd::Zero(num_ap, num_bs);
  inst.rho = 1.0;
  inst.gamma = 1.0 / static_cast<double>(num_ap);
  inst.prox = 0.1;
  validate_offload(inst);
  return inst;
}

void validate_offload(const OffloadInstance& inst) {
  if (inst.num_bs < 1 || inst.num_ap < 1)
    fail(ErrorCode::InvalidConfig, "node counts must be positive");
  if (inst.caps.size() != inst.num_ap)
    fail(ErrorCode::InvalidConfig, "caps must have one entry per access point");
  if ((inst.caps.array() < 0.0).any() || !inst.caps.allFinite())
    fail(ErrorCode::InvalidConfig, "caps must be finite and nonnegative");
  if (inst.theta.size() != inst.num_ap)
    fail(ErrorCode::InvalidConfig, "theta must have one entry per access point");
  if (!inst.theta.allFinite()) fail(ErrorCode::InvalidConfig, "theta must be finite");
  if (inst.x.rows() != inst.num_bs || inst.x.cols() != inst.num_ap)
    fail(ErrorCode::InvalidConfig, "x must be num_bs x num_ap");
  if (inst.y.rows() != inst.num_ap || inst.y.cols() != inst.num_bs)
    fail(ErrorCode::InvalidConfig, "y must be num_ap x num_bs");
  if (inst.lambda.rows() != inst.num_ap || inst.lambda.cols() != inst.num_bs)
    fail(ErrorCode::InvalidConfig, "lambda must be num_ap x num_bs");
  if (!inst.x.allFinite() || !inst.y.allFinite() || !inst.lambda.allFinite())
    fail(ErrorCode::InvalidConfig, "stored state must be finite");
  if (!(inst.rho > 0.0) || !std::isfinite(inst.rho))
    fail(ErrorCode::InvalidConfig, "rho must be positive");
  if (!(inst.gamma > 0.0) || !std::isfinite(inst.gamma))
    fail(ErrorCode::InvalidConfig, "gamma must be positive");
  if (inst.prox < 0.0 || !std::isfinite(inst.prox))
    fail(ErrorCode::InvalidConfig, "prox must be finite and nonnegative");
}

SignalBundle make_signals(const OffloadInstance& inst) {
  SignalBundle sig;
  sig.p = inst.y + inst.lambda / inst.rho;
  sig.q = inst.x - inst.lambda.transpose() / inst.rho;
  return sig;
}

Eigen::VectorXd bs_update(Eigen::Index b, const OffloadInstance& inst, const SignalBundle& sig) {
  if (b < 0 || b >= inst.num_bs) fail(ErrorCode::InvalidConfig, "base station index out of range");
  const Eigen::Index a_dim = inst.num_ap;
  const Eigen::VectorXd target = sig.p.col(b);
  const Eigen::VectorXd anchor = inst.x.row(b).transpose();
  const double rho = inst.rho;
  const double prox = inst.prox;

  SmoothSpec spec;
  spec.mu = rho + prox;
  spec.lipschitz = rho + prox + static_cast<double>(a_dim);
  spec.start = anchor;
  spec.value = [&, rho, prox](const Eigen::VectorXd& v) {
    const double s = v.sum() + 1.0;
    if (!(s > 0.0)) return std::numeric_limits<double>::infinity();
    return -std::log(s) + 0.5 * rho * (v - target).squaredNorm() +
           0.5 * prox * (v - anchor).squaredNorm();
  };
  spec.gradient = [&, rho, prox](const Eigen::VectorXd& v) {
    const double s = v.sum() + 1.0;
    Eigen::VectorXd g = rho * (v - target) + prox * (v - anchor);
    g.array() -= 1.0 / s;
    return g;
  };
  return minimize_smooth(spec, kInnerTol, kSmoothMaxIter);
}

Eigen::VectorXd ap_update(Eigen::Index a, const OffloadInstance& inst, const SignalBundle& sig) {
  if (a < 0 || a >= inst.num_ap) fail(ErrorCode::InvalidConfig, "access point index out of range");
  const Eigen::VectorXd anchor = inst.y.row(a).transpose();
  const Eigen::VectorXd v =
      (inst.rho * sig.q.col(a) + inst.prox * anchor -
       Eigen::VectorXd::Constant(inst.num_bs, inst.theta(a))) /
      (inst.rho + inst.prox);
  return project_capped_simplexoid(v, inst.caps(a));
}

Eigen::MatrixXd controller_update(const OffloadInstance& inst, const Eigen::MatrixXd& x_new,
                                  const Eigen::MatrixXd& y_new, double gamma) {
  if (x_new.rows() != inst.num_bs || x_new.cols() != inst.num_ap)
    fail(ErrorCode::DimensionMismatch, "x_new must be num_bs x num_ap");
  if (y_new.rows() != inst.num_ap || y_new.cols() != inst.num_bs)
    fail(ErrorCode::DimensionMismatch, "y_new must be num_ap x num_bs");
  Eigen::MatrixXd lambda = inst.lambda;
  lambda.noalias() -= (gamma * inst.rho) * (x_new.transpose() - y_new);
  return lambda;
}

double offload_objective(const OffloadInstance& inst, const Eigen::MatrixXd& x,
                         const Eigen::MatrixXd& y) {
  double obj = 0.0;
  for (Eigen::Index a = 0; a < inst.num_ap; ++a) obj += inst.theta(a) * y.row(a).sum();
  for (Eigen::Index b = 0; b < inst.num_bs; ++b) {
    const double s = x.row(b).sum() + 1.0;
    if (!(s > 0.0)) return std::numeric_limits<double>::infinity();
    obj -= std::log(s);
  }
  return obj;
}

OffloadResult run_offloading(const OffloadInstance& inst, const SolverConfig& cfg,
                             const OffloadObserver& observer) {
  validate_offload(inst);
  if (!(cfg.tol_primal > 0.0) || !(cfg.tol_dual > 0.0))
    fail(ErrorCode::InvalidConfig, "tolerances must be positive");
  if (cfg.max_iter < 1) fail(ErrorCode::InvalidConfig, "max_iter must be at least 1");
  if (!(cfg.divergence_threshold > 0.0))
    fail(ErrorCode::InvalidConfig, "divergence_threshold must be positive");

  const Eigen::Index nb = inst.num_bs;
  const Eigen::Index na = inst.num_ap;
  OffloadInstance cur = inst;

  OffloadResult out;
  Status status = Status::MaxIterReached;
  for (long k = 0; k < cfg.max_iter; ++k) {
    const SignalBundle sig = make_signals(cur);
    Eigen::MatrixXd x_new(nb, na);
    Eigen::MatrixXd y_new(na, nb);
    std::vector<double> ms;
    ms.reserve(static_cast<std::size_t>(nb + na));
    for (Eigen::Index b = 0; b < nb; ++b) {
      const auto t0 = std::chrono::steady_clock::now();
      x_new.row(b) = bs_update(b, cur, sig).transpose();
      ms.push_back(elapsed_ms(t0));
    }
    for (Eigen::Index a = 0; a < na; ++a) {
      const auto t0 = std::chrono::steady_clock::now();
      y_new.row(a) = ap_update(a, cur, sig).transpose();
      ms.push_back(elapsed_ms(t0));
    }
    Eigen::MatrixXd lambda_new = controller_update(cur, x_new, y_new, cur.gamma);

    double dual = 0.0;
    for (Eigen::Index b = 0; b < nb; ++b)
      dual = std::max(dual, (x_new.row(b) - cur.x.row(b)).norm());
    for (Eigen::Index a = 0; a < na; ++a)
      dual = std::max(dual, (y_new.row(a) - cur.y.row(a)).norm());
    dual *= cur.rho;

    cur.x = std::move(x_new);
    cur.y = std::move(y_new);
    cur.lambda = std::move(lambda_new);

    const double resid = (cur.x.transpose() - cur.y).cwiseAbs().maxCoeff();
    const double obj = offload_objective(cur, cur.x, cur.y);

    TraceRow row;
    row.k = k;
    row.objective = obj;
    row.primal_residual = resid;
    row.dual_metric = dual;
    row.block_ms = std::move(ms);
    out.trace.append(row);

    if (observer) {
      try {
        observer(k, OffloadState{cur.x, cur.y, cur.lambda});
      } catch (const std::exception& e) {
        fail(ErrorCode::ObserverFailure, std::string("observer threw: ") + e.what());
      }
    }

    const bool finite = std::isfinite(resid) && std::isfinite(dual) && cur.x.allFinite() &&
                        cur.y.allFinite() && cur.lambda.allFinite();
    if (!finite || resid > cfg.divergence_threshold) {
      status = Status::Diverged;
      break;
    }
    if (resid <= cfg.tol_primal && dual <= cfg.tol_dual) {
      status = Status::Converged;
      break;
    }
  }

  const TraceRow& last = out.trace.rows.back();
  out.report.status = status;
  out.report.iterations = out.trace.iterations();
  out.report.final_primal_residual = last.primal_residual;
  out.report.final_dual_metric = last.dual_metric;
  out.report.final_objective = last.objective;
  out.report.final_x.segments.clear();
  for (Eigen::Index b = 0; b < nb; ++b)
    out.report.final_x.segments.push_back(cur.x.row(b).transpose());
  for (Eigen::Index a = 0; a < na; ++a)
    out.report.final_x.segments.push_back(cur.y.row(a).transpose());
  out.report.final_multiplier.resize(na * nb);
  for (Eigen::Index a = 0; a < na; ++a)
    out.report.final_multiplier.segment(a * nb, nb) = cur.lambda.row(a).transpose();
  out.final_state = OffloadState{cur.x, cur.y, cur.lambda};
  return out;
}

namespace {

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols,
                                 const char* what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    fail(ErrorCode::ParseError, std::string(what) + ": wrong row count");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      fail(ErrorCode::ParseError, std::string(what) + ": wrong column count");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) fail(ErrorCode::ParseError, std::string(what) + ": non-numeric entry");
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

OffloadInstance offload_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::ParseError, "offload instance must be a JSON object");
  if (!j.contains("num_bs") || !j.contains("num_ap"))
    fail(ErrorCode::ParseError, "offload instance needs num_bs and num_ap");
  OffloadInstance inst;
  inst.num_bs = j.at("num_bs").get<Eigen::Index>();
  inst.num_ap = j.at("num_ap").get<Eigen::Index>();
  if (inst.num_bs < 1 || inst.num_ap < 1)
    fail(ErrorCode::InvalidConfig, "node counts must be positive");

  if (!j.contains("cap")) fail(ErrorCode::ParseError, "offload instance needs cap");
  const auto& cap = j.at("cap");
  if (cap.is_number()) {
    inst.caps = Eigen::VectorXd::Constant(inst.num_ap, cap.get<double>());
  } else if (cap.is_array()) {
    if (static_cast<Eigen::Index>(cap.size()) != inst.num_ap)
      fail(ErrorCode::ParseError, "cap array must have one entry per access point");
    inst.caps.resize(inst.num_ap);
    for (Eigen::Index a = 0; a < inst.num_ap; ++a)
      inst.caps(a) = cap[static_cast<std::size_t>(a)].get<double>();
  } else {
    fail(ErrorCode::ParseError, "cap must be a number or an array");
  }

  if (j.contains("theta")) {
    const auto& th = j.at("theta");
    if (!th.is_array() || static_cast<Eigen::Index>(th.size()) != inst.num_ap)
      fail(ErrorCode::ParseError, "theta must have one entry per access point");
    inst.theta.resize(inst.num_ap);
    for (Eigen::Index a = 0; a < inst.num_ap; ++a)
      inst.theta(a) = th[static_cast<std::size_t>(a)].get<double>();
  } else if (j.contains("theta_seed")) {
    std::mt19937_64 rng(j.at("theta_seed").get<unsigned long>());
    std::normal_distribution<double> normal(0.0, 1.0);
    inst.theta.resize(inst.num_ap);
    for (Eigen::Index a = 0; a < inst.num_ap; ++a) inst.theta(a) = std::max(0.01, normal(rng));
  } else {
    fail(ErrorCode::ParseError, "offload instance needs theta or theta_seed");
  }

  inst.rho = j.value("rho", 1.0);
  inst.gamma = j.value("gamma", 1.0 / static_cast<double>(inst.num_ap));
  inst.prox = j.value("prox", 0.1);

  inst.x = j.contains("x") ? matrix_from_json(j.at("x"), inst.num_bs, inst.num_ap, "x")
                           : Eigen::MatrixXd::Zero(inst.num_bs, inst.num_ap);
  inst.y = j.contains("y") ? matrix_from_json(j.at("y"), inst.num_ap, inst.num_bs, "y")
                           : Eigen::MatrixXd::Zero(inst.num_ap, inst.num_bs);
  inst.lambda = j.contains("lambda")
                    ? matrix_from_json(j.at("lambda"), inst.num_ap, inst.num_bs, "lambda")
                    : Eigen::MatrixXd::Zero(inst.num_ap, inst.num_bs);
  validate_offload(inst);
  return inst;
}

nlohmann::json offload_to_json(const OffloadInstance& inst) {
  nlohmann::json j;
  j["num_bs"] = inst.num_bs;
  j["num_ap"] = inst.num_ap;
  j["cap"] = nlohmann::json::array();
  for (Eigen::Index a = 0; a < inst.num_ap; ++a) j["cap"].push_back(inst.caps(a));
  j["theta"] = nlohmann::json::array();
  for (Eigen::Index a = 0; a < inst.num_ap; ++a) j["theta"].push_back(inst.theta(a));
  j["rho"] = inst.rho;
  j["gamma"] = inst.gamma;
  j["prox"] = inst.prox;
  if (inst.x.cwiseAbs().maxCoeff() > 0.0) j["x"] = matrix_to_json(inst.x);
  if (inst.y.cwiseAbs().maxCoeff() > 0.0) j["y"] = matrix_to_json(inst.y);
  if (inst.lambda.cwiseAbs().maxCoeff() > 0.0) j["lambda"] = matrix_to_json(inst.lambda);
  return j;
}

OffloadInstance load_offload(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("invalid JSON in ") + path + ": " + e.what());
  }
  return offload_from_json(j);
}

void save_offload(const OffloadInstance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  out << offload_to_json(inst).dump(2) << "\n";
  if (!out) fail(ErrorCode::IoError, "failed writing " + path);
}

nlohmann::json allocations_to_json(const OffloadState& state) {
  nlohmann::json j;
  j["x"] = matrix_to_json(state.x);
  j["y"] = matrix_to_json(state.y);
  return j;
}

}  // namespace admmkit
