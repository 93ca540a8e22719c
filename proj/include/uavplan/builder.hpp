#pragma once

#include <vector>

#include "uavplan/conic.hpp"
#include "uavplan/scenario.hpp"

namespace uavplan {

// One expansion point / candidate solution in physical units. Windowed fields
// (z, t, phi, r) are stored over the full horizon but only the entries inside
// the device's UL/DL window are meaningful.
struct Iterate {
  std::vector<Vec2> q;                              // N, meters
  std::vector<std::vector<double>> a1, a2, p1, p2;  // [K][N]; powers in watts
  std::vector<double> lambda;                       // K
  std::vector<std::vector<double>> z1, z2;          // [K][N], (H^2+d^2)^{alpha/2} slack
  std::vector<std::vector<double>> t1;              // [K][N], UL interference slack (FD)
  std::vector<std::vector<double>> phi1, phi2;      // [K][N], bits/s (Phi lower bounds)
  std::vector<std::vector<double>> r1, r2;          // [K][N], bits/s (rate lower bounds)
};

Iterate make_iterate(const Scenario& s);  // zero-filled with the right shape

enum class Objective {
  Serve,        // max sum lambda + mu * linearized penalty
  Feasibility,  // max the worst service margin (Algorithm 1 fallback stage)
  Rate          // max total relayed throughput, served count held at a floor
};

struct BuildOptions {
  Objective objective = Objective::Serve;
  double penalty_mu = 0.0;
  // Rate mode: require sum lambda >= lambda_floor (ignored when < 0).
  double lambda_floor = -1.0;
  // Optional per-link QoS: r_hat >= a * qos_threshold whenever the scenario
  // carries a threshold.
  bool fix_trajectory = false;  // pin q[n] to the expansion point (benchmarks)
  bool fix_allocation = false;  // pin a and p to the expansion point
};

// Nondimensional scaling applied to every solver variable. Lengths are in
// units of H, distance slacks in H^alpha, interference slacks in sigma^2,
// powers in their box maxima, spectral terms in B, data in delta_t*B.
struct Scaling {
  double len = 1.0;    // q
  double z = 1.0;      // z1, z2
  double noise = 1.0;  // t1
  double p1 = 1.0, p2 = 1.0;
  double rate = 1.0;   // phi, r_hat
  double bits = 1.0;   // S_k, C, tau, rho
  double gamma1 = 0.0, gamma2 = 0.0;  // scaled link-budget constants
  double rsi = 0.0;                   // scaled self-interference coefficient
};

// Index map from model quantities to solver coordinates; -1 marks a slot the
// variable does not exist in (outside the device's window).
struct VariableLayout {
  int K = 0, N = 0;
  bool hd = false;
  bool has_t1 = false;
  Scaling scale;
  double pathloss_exp = 2.0;

  std::vector<int> qx, qy;                         // N
  std::vector<std::vector<int>> a1, a2, p1, p2;    // [K][N]
  std::vector<int> lambda;                         // K
  std::vector<std::vector<int>> z1, z2, t1;        // windowed
  std::vector<std::vector<int>> phi1, phi2;        // windowed
  std::vector<std::vector<int>> r1, r2;            // windowed
  std::vector<std::vector<int>> s1, s2;            // sqrt-power cone aux
  std::vector<std::vector<int>> u1;                // UL range epigraph per (k,n)
  std::vector<int> u0;                             // DL range epigraph per n (shared)
  std::vector<int> r1sum, r2sum;                   // K, window totals of r_hat
  std::vector<int> ul_slot, dl_slot;               // N, per-slot totals over devices
  std::vector<int> suf_ul, pre_dl;                 // N, running sums for the cache rows
  int lam_weight = -1;                             // sum_k lambda_k S_k
  std::vector<int> tau;                            // K (Feasibility mode)
  int tau_bar = -1;
  std::vector<int> rho;                            // K (Rate mode)
  int num_vars = 0;
};

struct BuiltProgram {
  ConicProgram program;
  VariableLayout layout;
};

// Assembles one convex subproblem around the expansion point. The expansion
// point doubles as the warm start; strict feasibility of successive iterates
// follows from the surrogates being tight at the previous solution.
// Throws std::domain_error when an expansion denominator underflows and
// std::invalid_argument for inconsistent options.
BuiltProgram build_subproblem(const Scenario& s, const Iterate& exp_pt,
                              const BuildOptions& opt);

// Unscales a solver point back to physical units. Entries outside windows are
// copied from nothing and stay zero.
Iterate extract_iterate(const VariableLayout& L, const Eigen::VectorXd& x);

}  // namespace uavplan
