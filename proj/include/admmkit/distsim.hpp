// Copyright (c) 2026 admmkit contributors
// Licensed under the Apache License, Version 2.0.
//
// Round-based message-passing view of the parallel engines: a coordinator
// broadcasts per-worker signals, workers reply with their block updates, and
// the log records who sent what when. Numeric results are identical to the
// in-process runs; the log is bookkeeping, not a reimplementation.

#ifndef ADMMKIT_DISTSIM_HPP
#define ADMMKIT_DISTSIM_HPP

#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "admmkit/engines.hpp"
#include "admmkit/offload.hpp"
#include "admmkit/problem.hpp"

namespace admmkit {

enum class NodeRole { Coordinator, Worker };

struct NodeId {
  NodeRole role = NodeRole::Coordinator;
  Eigen::Index index = 0;  // 0 for the coordinator, 0..N-1 for workers
};

enum class MessageKind {
  Signal,       // coordinator -> worker: what the worker needs to update
  BlockUpdate,  // worker -> coordinator: the worker's new block
  Halt,         // coordinator -> worker: stop, empty payload
};

const char* to_string(NodeRole role);
const char* to_string(MessageKind kind);
std::string node_label(const NodeId& node);

struct Message {
  NodeId from;
  NodeId to;
  long round = 0;
  MessageKind kind = MessageKind::Signal;
  Eigen::VectorXd payload;
};

/// Append-only ordered log; rounds must be nondecreasing. Payload bytes are
/// tallied per round at 8 bytes per real.
class MessageLog {
 public:
  void append(Message msg);
  const std::vector<Message>& messages() const { return messages_; }
  long rounds() const { return static_cast<long>(round_bytes_.size()); }
  const std::vector<long>& round_bytes() const { return round_bytes_; }

 private:
  std::vector<Message> messages_;
  std::vector<long> round_bytes_;
};

struct RoundStats {
  long round = 0;
  long message_count = 0;
  long payload_reals = 0;
  long payload_bytes = 0;
};

std::vector<RoundStats> message_stats(const MessageLog& log);

struct SimulationResult {
  IterationTrace trace;
  ConvergenceReport report;
  MessageLog log;
};

/// Runs the engine and synthesizes its communication log. One compute round
/// per iteration: a Signal to each worker carrying exactly the coordinator
/// side of that worker's update, then each worker's BlockUpdate; after the
/// last compute round a terminal round of empty Halt messages. Accepts only
/// engines whose block updates read the previous iterate alone (Jacobi,
/// proximal Jacobi, variable splitting); sequential-sweep engines throw
/// SequentialEngineRejected.
SimulationResult simulate_block_engine(EngineKind kind, const BlockProblem& p,
                                       const SolverConfig& cfg);

struct OffloadSimulationResult {
  IterationTrace trace;
  ConvergenceReport report;
  OffloadState final_state;
  MessageLog log;
};

/// Same scheme for the offloading rounds: workers 0..num_bs-1 are the base
/// stations (Signal carries p(:, b), reply carries row b of x), workers
/// num_bs..num_bs+num_ap-1 are the access points (Signal carries q(:, a),
/// reply carries row a of y).
OffloadSimulationResult simulate_offloading(const OffloadInstance& inst, const SolverConfig& cfg);

/// JSON lines, one message per line: {"round", "from", "to", "kind", "dim"}.
void write_message_log(const MessageLog& log, std::ostream& os);
void write_message_log(const MessageLog& log, const std::string& path);

}  // namespace admmkit

#endif  // ADMMKIT_DISTSIM_HPP
