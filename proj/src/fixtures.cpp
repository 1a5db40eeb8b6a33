// Copyright (c) 2026 admmkit contributors
// Licensed under the Apache License, Version 2.0.

#include "admmkit/fixtures.hpp"

#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "admmkit/errors.hpp"

namespace admmkit {

ProblemDocument divergence_fixture() {
  auto column = [](double a, double b, double c) {
    Eigen::MatrixXd m(3, 1);
    m << a, b, c;
    return m;
  };
  std::vector<BlockSpec> blocks(3);
  blocks[0].dim = 1;
  blocks[0].coupling = column(1.0, 1.0, 1.0);
  blocks[1].dim = 1;
  blocks[1].coupling = column(1.0, 1.0, 2.0);
  blocks[2].dim = 1;
  blocks[2].coupling = column(1.0, 2.0, 2.0);

  ProblemDocument doc;
  doc.problem = assemble_problem(std::move(blocks), Eigen::VectorXd::Zero(3));
  BlockVector start;
  start.segments.assign(3, Eigen::VectorXd::Ones(1));
  doc.start = start;
  return doc;
}

ProblemDocument strongly_convex_instance(int block_count, unsigned long seed) {
  if (block_count < 1) fail(ErrorCode::InvalidConfig, "block_count must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> dim_draw(2, 6);
  std::uniform_int_distribution<int> extra_rows(2, 4);

  std::vector<int> dims(static_cast<std::size_t>(block_count));
  int max_dim = 0;
  int total_dim = 0;
  for (auto& d : dims) {
    d = dim_draw(rng);
    max_dim = std::max(max_dim, d);
    total_dim += d;
  }
  // Keep the coupling underdetermined (solvable for any rhs) while tall
  // enough that every block's coupling has full column rank.
  const int m = std::min(max_dim + extra_rows(rng), total_dim - 1);

  std::vector<BlockSpec> blocks(static_cast<std::size_t>(block_count));
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const int d = dims[i];
    Eigen::MatrixXd l_mat(d, d);
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index c = 0; c < d; ++c) l_mat(r, c) = normal(rng);
    QuadraticTerm term;
    term.Q = l_mat.transpose() * l_mat + Eigen::MatrixXd::Identity(d, d);
    term.q.resize(d);
    for (Eigen::Index r = 0; r < d; ++r) term.q(r) = normal(rng);
    term.r = 0.0;

    blocks[i].dim = d;
    blocks[i].objective = term;
    blocks[i].coupling.resize(m, d);
    for (Eigen::Index r = 0; r < m; ++r)
      for (Eigen::Index c = 0; c < d; ++c) blocks[i].coupling(r, c) = 0.3 * normal(rng);
  }

  Eigen::VectorXd rhs(m);
  for (Eigen::Index r = 0; r < m; ++r) rhs(r) = normal(rng);

  ProblemDocument doc;
  doc.problem = assemble_problem(std::move(blocks), std::move(rhs));
  return doc;
}

PowerCase three_bus_case() {
  PowerCase pcase;
  pcase.buses = {{1, 0.0}, {2, 0.0}, {3, 450.0}};
  pcase.branches = {{1, 2, 1.0, 300.0}, {1, 3, 1.0, 300.0}, {2, 3, 1.0, 300.0}};
  pcase.generators = {{1, 0.02, 20.0, 0.0, 330.0, 200.0}, {2, 0.04, 30.0, 0.0, 120.0, 200.0}};
  pcase.slack_bus = 3;
  return pcase;
}

ContingencySet three_bus_contingencies() { return {0}; }

PowerCase six_bus_case() {
  PowerCase pcase;
  pcase.buses = {{1, 0.0}, {2, 120.0}, {3, 0.0}, {4, 130.0}, {5, 0.0}, {6, 110.0}};
  pcase.branches = {{1, 2, 1.2, 250.0}, {2, 3, 1.0, 250.0}, {3, 4, 1.1, 250.0},
                    {4, 5, 0.9, 250.0}, {5, 6, 1.3, 250.0}, {6, 1, 1.0, 250.0},
                    {1, 4, 0.8, 250.0}, {2, 5, 0.7, 250.0}};
  pcase.generators = {{1, 0.020, 20.0, 0.0, 200.0, 60.0},
                      {3, 0.025, 18.0, 0.0, 200.0, 60.0},
                      {5, 0.030, 22.0, 0.0, 200.0, 60.0}};
  pcase.slack_bus = 1;
  return pcase;
}

ContingencySet six_bus_contingencies(std::size_t count) {
  const ContingencySet all = {0, 3, 6};
  if (count > all.size()) fail(ErrorCode::InvalidCase, "at most 3 bundled outages");
  return ContingencySet(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(count));
}

OffloadInstance offload_b5a5() { return build_offload(5, 5, 10.0, 42); }

OffloadInstance offload_b5a10() { return build_offload(5, 10, 10.0, 42); }

namespace {

void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path + " for writing");
  out << j.dump(2) << "\n";
  if (!out) fail(ErrorCode::IoError, "failed writing " + path);
}

}  // namespace

std::vector<FixtureFile> bundled_fixtures() {
  std::vector<FixtureFile> files;
  files.push_back({"diverge3.json", [](const std::string& path) {
                     save_problem(divergence_fixture(), path);
                   }});
  for (int n : {2, 3, 4, 6}) {
    files.push_back({"sc_n" + std::to_string(n) + ".json", [n](const std::string& path) {
                       save_problem(strongly_convex_instance(n, 100 + n), path);
                     }});
  }
  files.push_back({"scopf_3bus.json", [](const std::string& path) {
                     nlohmann::json j = case_to_json(three_bus_case());
                     j["contingencies"] = three_bus_contingencies();
                     write_json(j, path);
                   }});
  files.push_back({"scopf_6bus.json", [](const std::string& path) {
                     nlohmann::json j = case_to_json(six_bus_case());
                     j["contingencies"] = six_bus_contingencies(3);
                     write_json(j, path);
                   }});
  files.push_back({"offload_b5a5.json", [](const std::string& path) {
                     save_offload(offload_b5a5(), path);
                   }});
  files.push_back({"offload_b5a10.json", [](const std::string& path) {
                     save_offload(offload_b5a10(), path);
                   }});
  return files;
}

}  // namespace admmkit
