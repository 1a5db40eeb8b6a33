// Copyright (c) 2026 admmkit contributors
// Licensed under the Apache License, Version 2.0.
//
// Bundled instances used by the test suite and the CLI `fixtures` subcommand.

#ifndef ADMMKIT_FIXTURES_HPP
#define ADMMKIT_FIXTURES_HPP

#include <functional>
#include <string>
#include <vector>

#include "admmkit/offload.hpp"
#include "admmkit/problem.hpp"
#include "admmkit/scopf.hpp"

namespace admmkit {

/// Three scalar blocks, zero objectives, nearly parallel coupling columns,
/// zero right-hand side, start (1, 1, 1). The sequential sweep's iteration
/// map has spectral radius just above 1, so it diverges from any nonzero
/// start; the corrected and splitting variants converge on it.
ProblemDocument divergence_fixture();

/// Strongly convex random instance: block dims 2..6, Q_i = L'L + I, free
/// sets, small coupling entries (0.3 * N(0,1)), row_dim = max block dim + 2
/// or a bit more. Deterministic in (block_count, seed).
ProblemDocument strongly_convex_instance(int block_count, unsigned long seed);

/// Triangle network: generators at two buses, one load bus, equal
/// susceptances, uniform flow limits sized so the intact base case is
/// feasible but every single-branch outage is not.
PowerCase three_bus_case();
ContingencySet three_bus_contingencies();  // the branch between the generator buses

/// Six-bus ring with two chords, three generators, three loads, generous
/// limits; stays connected and feasible under each bundled outage.
PowerCase six_bus_case();
/// First `count` entries of the fixed outage list (count <= 3).
ContingencySet six_bus_contingencies(std::size_t count);

OffloadInstance offload_b5a5();
OffloadInstance offload_b5a10();

struct FixtureFile {
  std::string filename;
  std::function<void(const std::string& path)> write;
};

/// Everything the CLI materializes, with stable filenames.
std::vector<FixtureFile> bundled_fixtures();

}  // namespace admmkit

#endif  // ADMMKIT_FIXTURES_HPP
