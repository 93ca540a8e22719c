#pragma once

#include <string>
#include <vector>

#include "uavplan/builder.hpp"
#include "uavplan/solver.hpp"
#include "uavplan/verify.hpp"

namespace uavplan {

enum class Scheme {
  Proposed,         // joint trajectory + allocation
  FixedTrajectory,  // straight line pinned, allocation optimized
  FixedAllocation   // equal bandwidth / max power pinned, trajectory optimized
};

struct RunOptions {
  Objective goal = Objective::Serve;  // Serve, Rate, or Feasibility
  Scheme scheme = Scheme::Proposed;
  double mu0 = 1.0;
  double mu_growth = 10.0;
  double mu_max = 1e6;
  double rel_tol = 1e-4;
  int max_outer = 100;
  // Rate mode: served-count floor carried over from a Serve run when < 0.
  double lambda_floor = -1.0;
  SolverOptions solver;
  int verbosity = 0;
};

// One outer iteration. Objectives are in physical units: dimensionless served
// count for Serve, bits for Rate/Feasibility (penalty term included).
struct StageLog {
  int iteration = 0;
  double mu = 0.0;
  double surrogate_at_expansion = 0.0;  // subproblem objective at its warm start
  double solved_objective = 0.0;        // subproblem optimum
  double true_objective = 0.0;          // exact objective at the new iterate
  double penalty = 0.0;                 // P(lambda), <= 0
  double gap = 0.0;                     // solver duality-gap bound
  int newton_iterations = 0;
  SolveStatus status = SolveStatus::Optimal;
  // First step of a new ascent segment (penalty weight raised or a device
  // dropped); the objective is not comparable with the previous row's.
  bool restart = false;
};

struct RunReport {
  Iterate iterate;                     // final relaxed iterate
  std::vector<double> lambda_rounded;  // binary decisions after verification
  VerifyReport verification;           // at the rounded decisions, true rates
  int num_served = 0;
  double relay_throughput_bits = 0.0;
  double lambda_floor_used = -1.0;  // Rate mode
  std::vector<StageLog> trace;
  bool converged = false;
  std::string message;
};

// Straight-line trajectory, equal bandwidth, full power, all slacks tight.
Iterate initial_iterate(const Scenario& s);

RunReport run_plan(const Scenario& s, const RunOptions& opt);

}  // namespace uavplan
