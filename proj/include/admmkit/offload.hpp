// Copyright (c) 2026 admmkit contributors
// Licensed under the Apache License, Version 2.0.
//
// Mobile data offloading between base stations and access points: each base
// station proposes per-AP traffic shares, each AP admits traffic under a
// capacity cap, and a controller prices the disagreement. Every per-node
// update depends only on the previous iterate, so all nodes move in parallel.

#ifndef ADMMKIT_OFFLOAD_HPP
#define ADMMKIT_OFFLOAD_HPP

#include <functional>
#include <string>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "admmkit/config.hpp"

namespace admmkit {

/// x(b, a): traffic BS b wants to push to AP a. y(a, b): traffic AP a agrees
/// to admit from BS b. lambda(a, b) prices x(b, a) - y(a, b). rho, gamma, and
/// prox live on the instance so the fixture carries its own tuning; gamma
/// defaults to 1 / num_ap.
struct OffloadInstance {
  Eigen::Index num_bs = 0;
  Eigen::Index num_ap = 0;
  Eigen::VectorXd caps;    // per AP, >= 0
  Eigen::VectorXd theta;   // per AP admission price, >= 0
  Eigen::MatrixXd x;       // num_bs x num_ap
  Eigen::MatrixXd y;       // num_ap x num_bs
  Eigen::MatrixXd lambda;  // num_ap x num_bs
  double rho = 1.0;
  double gamma = 0.0;
  double prox = 0.1;
};

/// Seeded construction: theta ~ N(0,1) clamped to >= 0.01, all caps equal,
/// x = y = lambda = 0, gamma = 1 / num_ap.
OffloadInstance build_offload(Eigen::Index num_bs, Eigen::Index num_ap, double cap,
                              unsigned long theta_seed);

/// Throws InvalidConfig on nonpositive counts, negative caps, shape
/// mismatches, or nonpositive rho/gamma/negative prox.
void validate_offload(const OffloadInstance& inst);

/// p(:, b): target column handed to BS b, p = y + lambda / rho.
/// q(:, a): target column handed to AP a, q = x - lambda' / rho.
struct SignalBundle {
  Eigen::MatrixXd p;  // num_ap x num_bs
  Eigen::MatrixXd q;  // num_bs x num_ap
};

SignalBundle make_signals(const OffloadInstance& inst);

/// BS b minimizes -log(1'x + 1) + rho/2 |x - p(:,b)|^2 + prox/2 |x - x_b|^2
/// over x in R^num_ap, started and anchored at the instance's row b of x.
Eigen::VectorXd bs_update(Eigen::Index b, const OffloadInstance& inst, const SignalBundle& sig);

/// AP a minimizes theta_a 1'y + rho/2 |y - q(:,a)|^2 + prox/2 |y - y_a|^2
/// over y >= 0, 1'y <= caps(a); closed form via the capped simplexoid
/// projection of (rho q(:,a) + prox y_a - theta_a 1) / (rho + prox).
Eigen::VectorXd ap_update(Eigen::Index a, const OffloadInstance& inst, const SignalBundle& sig);

/// lambda(a, b) -= gamma * rho * (x_new(b, a) - y_new(a, b)) for every pair.
Eigen::MatrixXd controller_update(const OffloadInstance& inst, const Eigen::MatrixXd& x_new,
                                  const Eigen::MatrixXd& y_new, double gamma);

/// sum_a theta_a 1'y_a - sum_b log(1'x_b + 1)
double offload_objective(const OffloadInstance& inst, const Eigen::MatrixXd& x,
                         const Eigen::MatrixXd& y);

struct OffloadState {
  Eigen::MatrixXd x;
  Eigen::MatrixXd y;
  Eigen::MatrixXd lambda;
};

using OffloadObserver = std::function<void(long k, const OffloadState& state)>;

struct OffloadResult {
  IterationTrace trace;
  ConvergenceReport report;
  OffloadState final_state;
};

/// Round-based run from the instance's stored state. Per round every BS and
/// every AP updates from the previous iterate, then the controller reprices.
/// Trace columns: objective as offload_objective; primal_residual =
/// max |x(b,a) - y(a,b)|; dual_metric = rho * max block change (2-norm);
/// block_ms lists the num_bs BS updates then the num_ap AP updates.
/// The instance's rho/gamma/prox govern the run; cfg supplies tolerances,
/// max_iter, and the divergence threshold. The report's final_x holds the
/// num_bs rows of x then the num_ap rows of y; final_multiplier flattens
/// lambda row-major (AP-major).
OffloadResult run_offloading(const OffloadInstance& inst, const SolverConfig& cfg,
                             const OffloadObserver& observer = {});

OffloadInstance offload_from_json(const nlohmann::json& j);
nlohmann::json offload_to_json(const OffloadInstance& inst);
OffloadInstance load_offload(const std::string& path);
void save_offload(const OffloadInstance& inst, const std::string& path);

/// {"x": ..., "y": ...} row-major nested arrays.
nlohmann::json allocations_to_json(const OffloadState& state);

}  // namespace admmkit

#endif  // ADMMKIT_OFFLOAD_HPP
