#include "uavplan/drivers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <iostream>
#include <string>

#include "uavplan/sca.hpp"
#include "uavplan/units.hpp"

namespace uavplan {

namespace {

double exact_objective(const Scenario& s, const Iterate& it, Objective goal,
                       double mu, double bits_unit) {
  if (goal == Objective::Serve) {
    double v = 0.0;
    for (double l : it.lambda) v += l;
    return v + mu * penalty_value(it.lambda);
  }
  VerifyReport rep = verify_iterate(s, it, it.lambda);
  if (goal == Objective::Rate)
    return rep.relay_throughput_bits() + mu * bits_unit * penalty_value(it.lambda);
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < rep.devices.size(); ++k) {
    const auto& d = rep.devices[k];
    worst = std::min(worst, std::min(d.ul_bits, d.dl_bits) -
                                it.lambda[k] * d.demand_bits);
  }
  return worst;
}

void round_and_verify(const Scenario& s, RunReport& rep) {
  const int K = s.num_devices();
  rep.lambda_rounded.assign(K, 0.0);
  for (int k = 0; k < K; ++k)
    rep.lambda_rounded[k] =
        rep.iterate.lambda[k] >= 1.0 - s.binary_tol ? 1.0 : 0.0;
  // Demote any decision the exact rates cannot back up, then re-check: with
  // fewer served devices every original row only gains slack.
  for (int pass = 0; pass <= K; ++pass) {
    rep.verification = verify_iterate(s, rep.iterate, rep.lambda_rounded);
    bool changed = false;
    for (int k = 0; k < K; ++k) {
      const auto& d = rep.verification.devices[k];
      if (rep.lambda_rounded[k] > 0.5 &&
          (d.service_residual > 1e-9 || d.timeout_residual > 1e-9)) {
        rep.lambda_rounded[k] = 0.0;
        changed = true;
      }
    }
    if (!changed) break;
  }
  // Rounding a near-binary indicator up to 1 slightly raises the served data
  // total, which can nudge the cache or downlink-demand rows past tolerance
  // even when every per-device row holds. Shed the least-committed served
  // devices until the whole plan verifies.
  while (!rep.verification.feasible(1e-9)) {
    int drop = -1;
    for (int k = 0; k < K; ++k)
      if (rep.lambda_rounded[k] > 0.5 &&
          (drop < 0 || rep.iterate.lambda[k] < rep.iterate.lambda[drop]))
        drop = k;
    if (drop < 0) break;
    rep.lambda_rounded[drop] = 0.0;
    rep.verification = verify_iterate(s, rep.iterate, rep.lambda_rounded);
  }
  rep.num_served = rep.verification.num_served();
  rep.relay_throughput_bits = rep.verification.relay_throughput_bits();
}

RunReport run_loop(const Scenario& s, const RunOptions& opt, Iterate it,
                   double floor) {
  RunReport rep;
  const double bits_unit = s.uav.slot_seconds * s.channel.bandwidth_hz;
  const double unit = opt.goal == Objective::Serve ? 1.0 : bits_unit;
  const bool use_mu = opt.goal != Objective::Feasibility;
  double mu = opt.mu0;
  double prev = -std::numeric_limits<double>::infinity();
  std::vector<double> prev_lambda;
  int demotions = 0;
  bool next_restart = true;

  for (int outer = 0; outer < opt.max_outer; ++outer) {
    BuildOptions bo;
    bo.objective = opt.goal;
    bo.penalty_mu = use_mu ? mu : 0.0;
    bo.lambda_floor = floor;
    bo.fix_trajectory = opt.scheme == Scheme::FixedTrajectory;
    bo.fix_allocation = opt.scheme == Scheme::FixedAllocation;
    BuiltProgram b = build_subproblem(s, it, bo);

    StageLog log;
    log.iteration = outer;
    log.mu = use_mu ? mu : 0.0;
    log.restart = next_restart;
    next_restart = false;
    log.surrogate_at_expansion =
        unit * (b.program.objective.dot(b.program.warm_start) +
                b.program.objective_constant);

    if (opt.verbosity >= 2) {
      const ConicProgram& P = b.program;
      const Eigen::VectorXd& w = P.warm_start;
      double worst = -1e300;
      std::string wtag;
      auto note = [&](double v, const std::string& tag) {
        if (v > worst) {
          worst = v;
          wtag = tag;
        }
      };
      for (const auto& blk : P.linear) note(blk.expr.eval(w), "lin:" + blk.tag);
      for (const auto& blk : P.equalities)
        note(std::abs(blk.expr.eval(w)), "eq:" + blk.tag);
      for (const auto& blk : P.quads) {
        double v = blk.lin.eval(w);
        for (const auto& sq : blk.squares) {
          const double q = sq.eval(w);
          v += q * q;
        }
        note(v, "quad:" + blk.tag);
      }
      for (const auto& blk : P.socs) {
        double nn = 0.0;
        for (const auto& vf : blk.vec) {
          const double q = vf.eval(w);
          nn += q * q;
        }
        note(std::sqrt(nn) - blk.rhs.eval(w), "soc:" + blk.tag);
      }
      for (const auto& blk : P.pows) {
        const double big = blk.big.eval(w);
        note(big <= 0.0 ? 1e300 : blk.small.eval(w) - std::pow(big, blk.theta),
             "pow:" + blk.tag);
      }
      for (int i = 0; i < P.num_vars; ++i)
        note(std::max(P.lower_bounds[i] - w[i], w[i] - P.upper_bounds[i]),
             "box:" + (P.var_names.empty() ? std::to_string(i)
                                           : P.var_names[i]));
      std::cerr << "outer " << outer << " warm worst violation " << worst
                << " at " << wtag << "\n";
    }
    SolveResult res = solve(b.program, opt.solver);
    log.status = res.status;
    log.newton_iterations = res.newton_iterations;
    if (res.status != SolveStatus::Optimal) {
      rep.trace.push_back(log);
      rep.message = "iteration " + std::to_string(outer) + ": " + res.message;
      break;
    }

    // Each surrogate is tight at the expansion point, so an exact subproblem
    // optimum can never fall below the warm-start value; when numerical
    // conditioning produces one anyway, keep the expansion point as a
    // stationary step instead of letting the trace regress.
    const double warm_val = b.program.objective.dot(b.program.warm_start) +
                            b.program.objective_constant;
    const bool improved =
        res.objective >= warm_val - 1e-9 * std::max(1.0, std::abs(warm_val));
    if (improved) {
      Iterate next = extract_iterate(b.layout, res.x);
      // Pin the endpoints exactly so every warm start satisfies the endpoint
      // equality rows; solver round-off here would otherwise compound across
      // the outer iterations.
      next.q.front() = s.uav.start;
      next.q.back() = s.uav.goal;
      // Keep indicators strictly inside [0,1]: a warm start pressed against
      // the box wall by a large penalty weight makes the next subproblem's
      // barrier terms numerically singular.
      for (double& l : next.lambda) l = std::clamp(l, 1e-6, 1.0 - 1e-6);
      it = std::move(next);
    }
    log.solved_objective = unit * (improved ? res.objective : warm_val);
    log.gap = unit * res.gap;
    log.penalty = penalty_value(it.lambda);
    log.true_objective =
        exact_objective(s, it, opt.goal, use_mu ? mu : 0.0, bits_unit);
    rep.trace.push_back(log);

    // The soft assignments must be stationary too: the objective can plateau
    // for a few iterations while a device's indicator is still climbing, and
    // raising the penalty weight during that window would lock the device out.
    double lambda_move = 0.0;
    if (prev_lambda.size() == it.lambda.size()) {
      for (std::size_t k = 0; k < it.lambda.size(); ++k)
        lambda_move =
            std::max(lambda_move, std::abs(it.lambda[k] - prev_lambda[k]));
    } else {
      lambda_move = std::numeric_limits<double>::infinity();
    }
    const bool settled =
        std::isfinite(prev) &&
        std::abs(log.true_objective - prev) <=
            opt.rel_tol * std::max(1.0, std::abs(prev)) &&
        lambda_move <= std::max(opt.rel_tol, s.binary_tol);
    prev = log.true_objective;
    prev_lambda = it.lambda;
    if (settled) {
      if (!use_mu) {
        rep.converged = true;
        break;
      }
      if (log.penalty > -s.binary_tol) {
        rep.converged = true;
        break;
      }
      if (mu >= opt.mu_max) {
        // A device whose indicator sits fractional here is capped by its
        // service capacity (for lambda above one half the penalty pushes up,
        // the capacity row pushes back). It cannot be fully served, so drop
        // it and let the loop reassign its resources.
        int drop = -1;
        for (std::size_t k = 0; k < it.lambda.size(); ++k)
          if (it.lambda[k] > s.binary_tol && it.lambda[k] < 1.0 - s.binary_tol &&
              (drop < 0 || it.lambda[k] < it.lambda[drop]))
            drop = static_cast<int>(k);
        if (drop >= 0 && demotions < static_cast<int>(it.lambda.size())) {
          // Slightly interior so the next warm start stays off the barrier
          // wall; the penalty gradient at mu_max drives it the rest of the
          // way down.
          it.lambda[drop] = 1e-4;
          ++demotions;
          prev = -std::numeric_limits<double>::infinity();
          prev_lambda.clear();
          next_restart = true;
          continue;
        }
        rep.message = "penalty did not reach the binary tolerance at mu_max";
        break;
      }
      mu = std::min(mu * opt.mu_growth, opt.mu_max);
      prev = -std::numeric_limits<double>::infinity();
      next_restart = true;
    }
  }

  rep.iterate = std::move(it);
  round_and_verify(s, rep);
  if (!rep.converged && rep.message.empty())
    rep.message = "outer iteration limit reached";
  return rep;
}

}  // namespace

Iterate initial_iterate(const Scenario& s) {
  const int K = s.num_devices();
  const int N = s.num_slots();
  Iterate it = make_iterate(s);
  for (int n = 0; n < N; ++n) {
    const double f = N > 1 ? static_cast<double>(n) / (N - 1) : 0.0;
    it.q[n] = s.uav.start + f * (s.uav.goal - s.uav.start);
  }
  const double share = 1.0 / std::max(K, 1);
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < N; ++n) {
      it.a1[k][n] = share;
      it.a2[k][n] = share;
      it.p1[k][n] = s.device_p_max_watts[n];
      // In full duplex the relay's own transmission interferes with uplink
      // reception, so starting at full downlink power buries the first
      // uplink surrogates; start quiet and let the loop raise it.
      it.p2[k][n] = s.uav.p_max_watts[n] * share *
                    (s.duplex == DuplexMode::FD ? 0.1 : 1.0);
    }

  const double alpha = s.channel.pathloss_exp;
  const bool hd = s.duplex == DuplexMode::HD;
  for (int k = 0; k < K; ++k) {
    const Device& dev = s.devices[k];
    for (int n : s.ul_window(dev)) {
      const int i = n - 1;
      const double d = link_distance(it.q[i], dev.position, s.uav.altitude_m);
      it.z1[k][i] = std::pow(d * d, alpha / 2.0);
      if (hd) {
        it.t1[k][i] = 0.0;
        it.phi1[k][i] = phi2_exact_bps(it.p1[k][i], it.z1[k][i], s.channel);
      } else {
        double interf = 0.0;
        for (int kk = 0; kk < K; ++kk)
          if (kk != k) interf += it.p2[kk][i];
        it.t1[k][i] = s.channel.noise_watts + s.channel.rsi_coeff * interf;
        it.phi1[k][i] =
            phi1_exact_bps(it.p1[k][i], it.z1[k][i], it.t1[k][i], s.channel);
      }
      it.r1[k][i] = it.a1[k][i] * it.phi1[k][i];
    }
    for (int n : s.dl_window(dev)) {
      const int i = n - 1;
      const double d = link_distance(it.q[i], s.gateway, s.uav.altitude_m);
      it.z2[k][i] = std::pow(d * d, alpha / 2.0);
      it.phi2[k][i] = phi2_exact_bps(it.p2[k][i], it.z2[k][i], s.channel);
      it.r2[k][i] = it.a2[k][i] * it.phi2[k][i];
    }
  }
  return it;
}

RunReport run_plan(const Scenario& s, const RunOptions& opt) {
  s.validate();
  if (opt.goal == Objective::Rate && opt.lambda_floor < 0.0) {
    RunOptions serve_opt = opt;
    serve_opt.goal = Objective::Serve;
    RunReport serve_rep = run_loop(s, serve_opt, initial_iterate(s), -1.0);
    const double floor = serve_rep.num_served;
    RunReport rep = run_loop(s, opt, serve_rep.iterate, floor);
    rep.lambda_floor_used = floor;
    if (!serve_rep.converged && !serve_rep.message.empty())
      rep.message = "serve stage: " + serve_rep.message +
                    (rep.message.empty() ? "" : "; rate stage: " + rep.message);
    return rep;
  }
  const double floor = opt.goal == Objective::Rate ? opt.lambda_floor : -1.0;
  RunReport rep = run_loop(s, opt, initial_iterate(s), floor);
  if (opt.goal == Objective::Rate) rep.lambda_floor_used = floor;
  return rep;
}

}  // namespace uavplan
