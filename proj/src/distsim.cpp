// Copyright (c) 2026 admmkit contributors
// Licensed under the Apache License, Version 2.0.

#include "admmkit/distsim.hpp"

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "admmkit/errors.hpp"

namespace admmkit {

const char* to_string(NodeRole role) {
  return role == NodeRole::Coordinator ? "coordinator" : "worker";
}

const char* to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::Signal: return "signal";
    case MessageKind::BlockUpdate: return "block_update";
    case MessageKind::Halt: return "halt";
  }
  return "unknown";
}

std::string node_label(const NodeId& node) {
  if (node.role == NodeRole::Coordinator) return "coordinator";
  return "worker:" + std::to_string(node.index);
}

void MessageLog::append(Message msg) {
  if (msg.round < 0) fail(ErrorCode::InvalidConfig, "message round must be nonnegative");
  if (!messages_.empty() && msg.round < messages_.back().round)
    fail(ErrorCode::InvalidConfig, "message rounds must be nondecreasing");
  while (static_cast<long>(round_bytes_.size()) <= msg.round) round_bytes_.push_back(0);
  round_bytes_[static_cast<std::size_t>(msg.round)] += 8 * msg.payload.size();
  messages_.push_back(std::move(msg));
}

std::vector<RoundStats> message_stats(const MessageLog& log) {
  std::vector<RoundStats> stats(static_cast<std::size_t>(log.rounds()));
  for (std::size_t r = 0; r < stats.size(); ++r) stats[r].round = static_cast<long>(r);
  for (const Message& msg : log.messages()) {
    RoundStats& rs = stats[static_cast<std::size_t>(msg.round)];
    rs.message_count += 1;
    rs.payload_reals += msg.payload.size();
    rs.payload_bytes += 8 * msg.payload.size();
  }
  return stats;
}

namespace {

NodeId coordinator() { return NodeId{NodeRole::Coordinator, 0}; }
NodeId worker(Eigen::Index i) { return NodeId{NodeRole::Worker, i}; }

void append_halt_round(MessageLog& log, long round, Eigen::Index worker_count) {
  for (Eigen::Index i = 0; i < worker_count; ++i)
    log.append(Message{coordinator(), worker(i), round, MessageKind::Halt, Eigen::VectorXd()});
}

BlockVector initial_iterate(const BlockProblem& p, const SolverConfig& cfg) {
  if (cfg.start) return *cfg.start;
  BlockVector x;
  for (const BlockSpec& block : p.blocks)
    x.segments.push_back(set_projection_of_zero(block.set, block.dim));
  return x;
}

std::vector<Eigen::VectorXd> block_images(const BlockProblem& p, const BlockVector& x) {
  std::vector<Eigen::VectorXd> g;
  g.reserve(p.blocks.size());
  for (std::size_t i = 0; i < p.blocks.size(); ++i)
    g.push_back(p.blocks[i].coupling * x.segments[i]);
  return g;
}

}  // namespace

SimulationResult simulate_block_engine(EngineKind kind, const BlockProblem& p,
                                       const SolverConfig& cfg) {
  if (kind == EngineKind::TwoBlock || kind == EngineKind::GaussSeidel ||
      kind == EngineKind::GaussianBackSubstitution)
    fail(ErrorCode::SequentialEngineRejected,
         std::string(to_string(kind)) +
             " updates blocks within a sweep, so its rounds cannot run in parallel");

  const auto n_blocks = static_cast<Eigen::Index>(p.block_count());
  SimulationResult out;

  if (kind == EngineKind::VariableSplitting) {
    std::vector<VsSnapshot> snaps;
    EngineResult run = run_variable_splitting_ex(
        p, cfg, {}, [&](long, const VsSnapshot& s) { snaps.push_back(s); });
    out.trace = std::move(run.trace);
    out.report = std::move(run.report);

    const double share_scale = 1.0 / static_cast<double>(n_blocks);
    const Eigen::VectorXd share = p.rhs * share_scale;
    std::vector<Eigen::VectorXd> z_prev(static_cast<std::size_t>(n_blocks),
                                        Eigen::VectorXd::Zero(p.row_dim()));
    std::vector<Eigen::VectorXd> mult_prev = z_prev;
    for (long k = 0; k < out.trace.iterations(); ++k) {
      for (Eigen::Index i = 0; i < n_blocks; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        Eigen::VectorXd w = cfg.rho * (z_prev[ui] - share) - mult_prev[ui];
        out.log.append(Message{coordinator(), worker(i), k, MessageKind::Signal, std::move(w)});
      }
      const VsSnapshot& s = snaps[static_cast<std::size_t>(k)];
      for (Eigen::Index i = 0; i < n_blocks; ++i)
        out.log.append(Message{worker(i), coordinator(), k, MessageKind::BlockUpdate,
                               s.x.segments[static_cast<std::size_t>(i)]});
      z_prev = s.z;
      mult_prev = s.multipliers;
    }
    append_halt_round(out.log, out.trace.iterations(), n_blocks);
    return out;
  }

  std::vector<BlockVector> x_snaps;
  std::vector<Eigen::VectorXd> lambda_snaps;
  const StepObserver observer = [&](long, const BlockVector& x, const Eigen::VectorXd& lam) {
    x_snaps.push_back(x);
    lambda_snaps.push_back(lam);
  };
  EngineResult run = kind == EngineKind::Jacobi ? run_jacobi(p, cfg, observer)
                                                : run_prox_jacobi(p, cfg, observer);
  out.trace = std::move(run.trace);
  out.report = std::move(run.report);

  BlockVector x_prev = initial_iterate(p, cfg);
  Eigen::VectorXd lambda_prev = Eigen::VectorXd::Zero(p.row_dim());
  for (long k = 0; k < out.trace.iterations(); ++k) {
    std::vector<Eigen::VectorXd> g = block_images(p, x_prev);
    Eigen::VectorXd total = Eigen::VectorXd::Zero(p.row_dim());
    for (const Eigen::VectorXd& gi : g) total += gi;
    for (Eigen::Index i = 0; i < n_blocks; ++i) {
      Eigen::VectorXd w =
          cfg.rho * (total - g[static_cast<std::size_t>(i)] - p.rhs) - lambda_prev;
      out.log.append(Message{coordinator(), worker(i), k, MessageKind::Signal, std::move(w)});
    }
    const BlockVector& x_new = x_snaps[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < n_blocks; ++i)
      out.log.append(Message{worker(i), coordinator(), k, MessageKind::BlockUpdate,
                             x_new.segments[static_cast<std::size_t>(i)]});
    x_prev = x_new;
    lambda_prev = lambda_snaps[static_cast<std::size_t>(k)];
  }
  append_halt_round(out.log, out.trace.iterations(), n_blocks);
  return out;
}

OffloadSimulationResult simulate_offloading(const OffloadInstance& inst, const SolverConfig& cfg) {
  std::vector<OffloadState> snaps;
  OffloadResult run =
      run_offloading(inst, cfg, [&](long, const OffloadState& s) { snaps.push_back(s); });

  OffloadSimulationResult out;
  out.trace = std::move(run.trace);
  out.report = std::move(run.report);
  out.final_state = std::move(run.final_state);

  const Eigen::Index nb = inst.num_bs;
  const Eigen::Index na = inst.num_ap;
  OffloadState prev{inst.x, inst.y, inst.lambda};
  for (long k = 0; k < out.trace.iterations(); ++k) {
    const Eigen::MatrixXd p_sig = prev.y + prev.lambda / inst.rho;
    const Eigen::MatrixXd q_sig = prev.x - prev.lambda.transpose() / inst.rho;
    for (Eigen::Index b = 0; b < nb; ++b)
      out.log.append(Message{coordinator(), worker(b), k, MessageKind::Signal, p_sig.col(b)});
    for (Eigen::Index a = 0; a < na; ++a)
      out.log.append(Message{coordinator(), worker(nb + a), k, MessageKind::Signal, q_sig.col(a)});
    const OffloadState& s = snaps[static_cast<std::size_t>(k)];
    for (Eigen::Index b = 0; b < nb; ++b)
      out.log.append(Message{worker(b), coordinator(), k, MessageKind::BlockUpdate,
                             s.x.row(b).transpose()});
    for (Eigen::Index a = 0; a < na; ++a)
      out.log.append(Message{worker(nb + a), coordinator(), k, MessageKind::BlockUpdate,
                             s.y.row(a).transpose()});
    prev = s;
  }
  append_halt_round(out.log, out.trace.iterations(), nb + na);
  return out;
}

void write_message_log(const MessageLog& log, std::ostream& os) {
  for (const Message& msg : log.messages()) {
    nlohmann::json j;
    j["round"] = msg.round;
    j["from"] = node_label(msg.from);
    j["to"] = node_label(msg.to);
    j["kind"] = to_string(msg.kind);
    j["dim"] = msg.payload.size();
    os << j.dump() << "\n";
  }
}

void write_message_log(const MessageLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  write_message_log(log, out);
  if (!out) fail(ErrorCode::IoError, "failed writing " + path);
}

}  // namespace admmkit
