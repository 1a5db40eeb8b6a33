// Copyright (c) 2026 admmkit contributors
// Licensed under the Apache License, Version 2.0.
//
// Command line front end: `run` solves one instance and writes trace.csv,
// report.json, and per-application outputs; `fixtures` materializes the
// bundled instances. Exit codes: 0 converged, 2 iteration budget exhausted,
// 3 diverged, 1 usage or I/O errors.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "admmkit/distsim.hpp"
#include "admmkit/engines.hpp"
#include "admmkit/errors.hpp"
#include "admmkit/fixtures.hpp"
#include "admmkit/offload.hpp"
#include "admmkit/scopf.hpp"

namespace fs = std::filesystem;
using namespace admmkit;

namespace {

int status_exit_code(Status status) {
  switch (status) {
    case Status::Converged: return 0;
    case Status::MaxIterReached: return 2;
    case Status::Diverged: return 3;
  }
  return 1;
}

/// The timing column is zeroed so identical invocations write identical
/// bytes; measured per-block times stay available through the library API.
void write_deterministic_trace(IterationTrace trace, const fs::path& path) {
  for (TraceRow& row : trace.rows)
    for (double& ms : row.block_ms) ms = 0.0;
  write_trace_csv(trace, path.string());
}

struct RunOptions {
  std::string engine;
  std::string input;
  std::string out_dir = ".";
  double rho = 0.0;
  double gamma = 0.0;
  double alpha = 0.0;
  double prox = 0.0;
  double tol_primal = 0.0;
  double tol_dual = 0.0;
  long max_iter = 0;
  unsigned long seed = 0;
  bool simulate = false;
};

int run_command(const RunOptions& opt, const CLI::App& sub) {
  SolverConfig cfg;
  if (sub.count("--rho")) cfg.rho = opt.rho;
  if (sub.count("--gamma")) cfg.gamma = opt.gamma;
  if (sub.count("--alpha")) cfg.alpha = opt.alpha;
  if (sub.count("--tol-primal")) cfg.tol_primal = opt.tol_primal;
  if (sub.count("--tol-dual")) cfg.tol_dual = opt.tol_dual;
  if (sub.count("--max-iter")) cfg.max_iter = opt.max_iter;
  if (sub.count("--seed")) cfg.seed = opt.seed;

  const fs::path out_dir(opt.out_dir);
  fs::create_directories(out_dir);

  if (opt.engine == "scopf") {
    if (opt.simulate) {
      std::cerr << "error: --simulate supports the parallel block engines and offload only\n";
      return 1;
    }
    std::ifstream in(opt.input);
    if (!in) {
      std::cerr << "error: cannot open " << opt.input << "\n";
      return 1;
    }
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "error: invalid JSON in " << opt.input << ": " << e.what() << "\n";
      return 1;
    }
    const PowerCase pcase = case_from_json(j);
    ContingencySet contingencies;
    if (j.contains("contingencies"))
      contingencies = j.at("contingencies").get<ContingencySet>();
    const ScopfInstance inst = assemble_scopf(pcase, contingencies);
    const ScopfResult result = run_distributed_scopf(inst, cfg);
    write_deterministic_trace(result.trace, out_dir / "trace.csv");
    save_report(result.report, (out_dir / "report.json").string());
    save_solutions(result.solutions, (out_dir / "solutions.json").string());
    return status_exit_code(result.report.status);
  }

  if (opt.engine == "offload") {
    OffloadInstance inst = load_offload(opt.input);
    if (sub.count("--rho")) inst.rho = opt.rho;
    if (sub.count("--gamma")) inst.gamma = opt.gamma;
    if (sub.count("--prox")) inst.prox = opt.prox;
    IterationTrace trace;
    ConvergenceReport report;
    OffloadState final_state;
    if (opt.simulate) {
      OffloadSimulationResult sim = simulate_offloading(inst, cfg);
      write_message_log(sim.log, (out_dir / "messages.jsonl").string());
      trace = std::move(sim.trace);
      report = std::move(sim.report);
      final_state = std::move(sim.final_state);
    } else {
      OffloadResult run = run_offloading(inst, cfg);
      trace = std::move(run.trace);
      report = std::move(run.report);
      final_state = std::move(run.final_state);
    }
    write_deterministic_trace(trace, out_dir / "trace.csv");
    save_report(report, (out_dir / "report.json").string());
    std::ofstream alloc(out_dir / "allocations.json");
    if (!alloc) {
      std::cerr << "error: cannot write allocations.json\n";
      return 1;
    }
    alloc << allocations_to_json(final_state).dump(2) << "\n";
    return status_exit_code(report.status);
  }

  const std::optional<EngineKind> kind = engine_kind_from_string(opt.engine);
  if (!kind) {
    std::cerr << "error: unknown engine '" << opt.engine << "'\n";
    return 1;
  }
  const ProblemDocument doc = load_problem(opt.input);
  cfg.start = doc.start;
  if (sub.count("--prox"))
    cfg.prox_weights.assign(doc.problem.block_count(), ProxWeight(opt.prox));

  IterationTrace trace;
  ConvergenceReport report;
  if (opt.simulate) {
    SimulationResult sim = simulate_block_engine(*kind, doc.problem, cfg);
    write_message_log(sim.log, (out_dir / "messages.jsonl").string());
    trace = std::move(sim.trace);
    report = std::move(sim.report);
  } else {
    EngineResult run = run_engine(*kind, doc.problem, cfg);
    trace = std::move(run.trace);
    report = std::move(run.report);
  }
  write_deterministic_trace(trace, out_dir / "trace.csv");
  save_report(report, (out_dir / "report.json").string());
  return status_exit_code(report.status);
}

int fixtures_command(const std::string& dir, bool force, bool list) {
  const std::vector<FixtureFile> files = bundled_fixtures();
  if (list) {
    for (const FixtureFile& f : files) std::cout << f.filename << "\n";
    return 0;
  }
  const fs::path out_dir(dir);
  if (fs::exists(out_dir) && !fs::is_empty(out_dir) && !force) {
    std::cerr << "error: " << dir << " is not empty; pass --force to overwrite\n";
    return 1;
  }
  fs::create_directories(out_dir);
  for (const FixtureFile& f : files) {
    const fs::path path = out_dir / f.filename;
    f.write(path.string());
    std::cout << "wrote " << path.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"block-structured convex optimization toolkit"};
  app.require_subcommand(1);

  RunOptions opt;
  CLI::App* run = app.add_subcommand("run", "solve one instance and export its trace");
  run->add_option("--engine", opt.engine,
                  "two-block | gauss-seidel | jacobi | variable-splitting | gbs | "
                  "prox-jacobi | scopf | offload")
      ->required();
  run->add_option("--input", opt.input, "instance JSON file")->required();
  run->add_option("--out", opt.out_dir, "output directory (default: current)");
  run->add_option("--rho", opt.rho, "penalty weight");
  run->add_option("--gamma", opt.gamma, "multiplier step scale");
  run->add_option("--alpha", opt.alpha, "correction step in (0, 1)");
  run->add_option("--prox", opt.prox, "scalar proximal weight for every block");
  run->add_option("--tol-primal", opt.tol_primal, "primal stopping tolerance");
  run->add_option("--tol-dual", opt.tol_dual, "dual stopping tolerance");
  run->add_option("--max-iter", opt.max_iter, "iteration budget");
  run->add_option("--seed", opt.seed, "rng seed recorded in the config");
  run->add_flag("--simulate", opt.simulate,
                "also emit messages.jsonl from the round-based execution log");

  std::string fix_dir = "fixtures";
  bool force = false;
  bool list = false;
  CLI::App* fix = app.add_subcommand("fixtures", "materialize the bundled instances");
  fix->add_option("--out", fix_dir, "target directory (default: fixtures)");
  fix->add_flag("--force", force, "write into a non-empty directory");
  fix->add_flag("--list", list, "print fixture names without writing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) return run_command(opt, *run);
    return fixtures_command(fix_dir, force, list);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
