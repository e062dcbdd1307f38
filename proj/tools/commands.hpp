#pragma once

#include <ostream>
#include <string>

#include "run_config.hpp"

namespace channel_eq::cli {

// Each driver writes its files under cfg.directory, prints a short summary
// to `out` and lets library exceptions propagate.
void run_solve(const RunConfig& cfg, std::ostream& out);
void run_forces(const RunConfig& cfg, std::ostream& out);
void run_equilibrium(const RunConfig& cfg, std::ostream& out);
void run_certify(const RunConfig& cfg, std::ostream& out);
void run_convergence(const RunConfig& cfg, std::ostream& out);
void run_wbound(const RunConfig& cfg, std::ostream& out);
void run_mesh(const RunConfig& cfg, std::ostream& out);

// Runs `command`, mapping exceptions to exit codes: 0 success, 1 config or
// input error, 2 non-convergence, 3 geometry error, 4 anything else.
int dispatch(const std::string& command, const RunConfig& cfg, std::ostream& out, std::ostream& err);

// "UNIQUE-AT-ZERO root=<x>", "MULTIPLE-ROOTS count=<n>" or
// "INCONCLUSIVE flagged=<n>".
std::string verdict_line(const EquilibriumReport& report);

}  // namespace channel_eq::cli
