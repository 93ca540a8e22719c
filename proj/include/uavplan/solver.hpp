#pragma once

#include "uavplan/conic.hpp"

namespace uavplan {

struct SolverOptions {
  double tol = 1e-6;            // relative gap / feasibility tolerance
  int max_newton_per_center = 200;
  int max_total_newton = 6000;
  int verbosity = 0;
};

// Log-barrier interior-point method over the typed blocks of a ConicProgram.
// Deterministic: identical program + options give an identical result.
// Concurrent calls on distinct programs are safe (no shared mutable state).
SolveResult solve(const ConicProgram& program, const SolverOptions& options = {});

}  // namespace uavplan
