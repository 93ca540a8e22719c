#include "uavplan/solver.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <functional>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <vector>

namespace uavplan {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Internal minimization problem: min c'x + barrier(x) s.t. A x = b, where the
// barrier is assembled from the program blocks (optionally relaxed by a
// phase-I slack variable appended as the last coordinate).
struct BarrierProblem {
  int n = 0;                       // variables (incl. phase-I slack if any)
  int phase1_var = -1;             // index of the slack, or -1
  Eigen::VectorXd c;
  Eigen::VectorXd lb, ub;
  const ConicProgram* prog = nullptr;
  std::vector<Triplet> eq_triplets;
  Eigen::VectorXd eq_rhs;
  int num_eq = 0;
  int barrier_terms = 0;           // m in the m/t gap bound

  double relax(const Eigen::VectorXd& x) const {
    return phase1_var >= 0 ? x[phase1_var] : 0.0;
  }
};

struct Derivs {
  double value = 0.0;
  Eigen::VectorXd grad;
  std::vector<Triplet> hess;
  bool in_domain = true;
};

void add_outer(std::vector<Triplet>& out, const AffineForm& a, const AffineForm& b,
               double w, int p1a = -1, int p1b = -1, double wa1 = 0.0,
               double wb1 = 0.0) {
  // w * (grad a)(grad b)' where grad includes optional phase-1 coefficient.
  auto each = [&](const AffineForm& f, int pv, double pw, auto&& fn) {
    for (const auto& [i, cf] : f.terms) fn(i, cf);
    if (pv >= 0 && pw != 0.0) fn(pv, pw);
  };
  each(a, p1a, wa1, [&](int i, double ci) {
    each(b, p1b, wb1, [&](int j, double cj) {
      out.emplace_back(i, j, w * ci * cj);
    });
  });
}

void add_grad(Eigen::VectorXd& g, const AffineForm& a, double w, int p1 = -1,
              double w1 = 0.0) {
  for (const auto& [i, c] : a.terms) g[i] += w * c;
  if (p1 >= 0) g[p1] += w * w1;
}

// Barrier value/gradient/Hessian at x. Returns in_domain=false when any slack
// is non-positive (value/grad then meaningless).
Derivs barrier_derivs(const BarrierProblem& bp, const Eigen::VectorXd& x,
                      bool want_derivs) {
  const ConicProgram& p = *bp.prog;
  Derivs d;
  d.grad = Eigen::VectorXd::Zero(bp.n);
  const double s = bp.relax(x);
  const int pv = bp.phase1_var;

  auto bad = [&]() {
    d.in_domain = false;
    return d;
  };

  // Variable boxes (never relaxed).
  for (int i = 0; i < bp.n; ++i) {
    const double gl = x[i] - bp.lb[i];
    const double gu = bp.ub[i] - x[i];
    if (gl <= 0.0 || gu <= 0.0) return bad();
    d.value += -std::log(gl) - std::log(gu);
    if (want_derivs) {
      d.grad[i] += -1.0 / gl + 1.0 / gu;
      d.hess.emplace_back(i, i, 1.0 / (gl * gl) + 1.0 / (gu * gu));
    }
  }

  for (const auto& blk : p.linear) {  // expr <= s
    const double g = s - blk.expr.eval(x);
    if (g <= 0.0) return bad();
    d.value += -std::log(g);
    if (want_derivs) {
      // grad of (expr - s) is (coef..., -1 on pv)
      add_grad(d.grad, blk.expr, 1.0 / g, pv, -1.0);
      add_outer(d.hess, blk.expr, blk.expr, 1.0 / (g * g), pv, pv, -1.0, -1.0);
    }
  }

  for (const auto& blk : p.quads) {  // sum sq^2 + lin <= s
    double f = blk.lin.eval(x) - s;
    std::vector<double> sq_vals(blk.squares.size());
    for (std::size_t m = 0; m < blk.squares.size(); ++m) {
      sq_vals[m] = blk.squares[m].eval(x);
      f += sq_vals[m] * sq_vals[m];
    }
    const double g = -f;
    if (g <= 0.0) return bad();
    d.value += -std::log(g);
    if (want_derivs) {
      // grad f = lin' + sum 2 sq_m * sq_m'; phase-1 coefficient -1.
      AffineForm gf_sparse = blk.lin;
      for (std::size_t m = 0; m < blk.squares.size(); ++m)
        for (const auto& [i, c] : blk.squares[m].terms)
          gf_sparse.add(i, 2.0 * sq_vals[m] * c);
      add_grad(d.grad, gf_sparse, 1.0 / g, pv, -1.0);
      add_outer(d.hess, gf_sparse, gf_sparse, 1.0 / (g * g), pv, pv, -1.0, -1.0);
      for (const auto& sqf : blk.squares)
        add_outer(d.hess, sqf, sqf, 2.0 / g, -1, -1, 0.0, 0.0);
    }
  }

  for (const auto& blk : p.socs) {  // ||vec|| <= rhs + s
    const double r = blk.rhs.eval(x) + s;
    if (r <= 0.0) return bad();
    double vv = 0.0;
    std::vector<double> vals(blk.vec.size());
    for (std::size_t m = 0; m < blk.vec.size(); ++m) {
      vals[m] = blk.vec[m].eval(x);
      vv += vals[m] * vals[m];
    }
    const double g = r * r - vv;
    if (g <= 0.0) return bad();
    d.value += -std::log(g);
    if (want_derivs) {
      // grad g = 2r * rhs' - sum 2 v_m v_m'
      add_grad(d.grad, blk.rhs, -2.0 * r / g, pv, 1.0);
      for (std::size_t m = 0; m < blk.vec.size(); ++m)
        add_grad(d.grad, blk.vec[m], 2.0 * vals[m] / g);
      // hess = (grad g)(grad g)'/g^2 - hess g / g, hess g = 2 rhs rhs' - 2 sum v v'
      AffineForm gg;
      for (const auto& [i, c] : blk.rhs.terms) gg.add(i, 2.0 * r * c);
      for (std::size_t m = 0; m < blk.vec.size(); ++m)
        for (const auto& [i, c] : blk.vec[m].terms) gg.add(i, -2.0 * vals[m] * c);
      add_outer(d.hess, gg, gg, 1.0 / (g * g), pv, pv, 2.0 * r, 2.0 * r);
      add_outer(d.hess, blk.rhs, blk.rhs, -2.0 / g, pv, pv, 1.0, 1.0);
      for (const auto& vf : blk.vec) add_outer(d.hess, vf, vf, 2.0 / g);
    }
  }

  for (const auto& blk : p.pows) {  // small <= big^theta + s, big > 0
    const double z = blk.big.eval(x);
    if (z <= 0.0) return bad();
    const double th = blk.theta;
    const double zt = std::pow(z, th);
    const double g = zt + s - blk.small.eval(x);
    if (g <= 0.0) return bad();
    d.value += -std::log(g) - std::log(z);
    if (want_derivs) {
      // -log z part
      add_grad(d.grad, blk.big, -1.0 / z);
      add_outer(d.hess, blk.big, blk.big, 1.0 / (z * z));
      // -log(zt + s - small): grad arg = th*zt/z * big' + e_s - small'
      const double dz = th * zt / z;
      const double d2z = th * (th - 1.0) * zt / (z * z);  // negative
      add_grad(d.grad, blk.big, -dz / g, pv, -1.0 / g * 0.0);
      add_grad(d.grad, blk.small, 1.0 / g);
      if (pv >= 0) d.grad[pv] += -1.0 / g;
      AffineForm ga;  // grad of the argument (without phase-1)
      for (const auto& [i, c] : blk.big.terms) ga.add(i, dz * c);
      for (const auto& [i, c] : blk.small.terms) ga.add(i, -c);
      add_outer(d.hess, ga, ga, 1.0 / (g * g), pv, pv, 1.0, 1.0);
      add_outer(d.hess, blk.big, blk.big, -d2z / g);
    }
  }

  return d;
}

void report_gaps(const BarrierProblem& bp, const Eigen::VectorXd& x) {
  const ConicProgram& p = *bp.prog;
  const double s = bp.relax(x);
  double ming = 1e300;
  int mini = -1;
  for (int i = 0; i < bp.n; ++i) {
    const double g = std::min(x[i] - bp.lb[i], bp.ub[i] - x[i]);
    if (g < ming) { ming = g; mini = i; }
  }
  std::cerr << "    min box gap " << ming << " at var " << mini << "\n";
  double minb = 1e300;
  std::string tag;
  for (const auto& b : p.linear) {
    const double g = s - b.expr.eval(x);
    if (g < minb) { minb = g; tag = "lin " + b.tag; }
  }
  for (const auto& b : p.quads) {
    double f = b.lin.eval(x) - s;
    for (const auto& q : b.squares) { const double e = q.eval(x); f += e * e; }
    if (-f < minb) { minb = -f; tag = "quad " + b.tag; }
  }
  for (const auto& b : p.socs) {
    const double r = b.rhs.eval(x) + s;
    double vv = 0;
    for (const auto& q : b.vec) { const double e = q.eval(x); vv += e * e; }
    if (r * r - vv < minb) { minb = r * r - vv; tag = "soc " + b.tag; }
  }
  for (const auto& b : p.pows) {
    const double g = std::pow(b.big.eval(x), b.theta) + s - b.small.eval(x);
    if (g < minb) { minb = g; tag = "pow " + b.tag; }
  }
  std::cerr << "    min block gap " << minb << " at " << tag << "\n";
}

int count_barrier_terms(const BarrierProblem& bp) {
  const ConicProgram& p = *bp.prog;
  return 2 * bp.n + static_cast<int>(p.linear.size() + p.quads.size() +
                                     p.socs.size() + 2 * p.pows.size());
}

struct CenterOutcome {
  bool ok = false;
  int newton_iters = 0;
};

// Infeasible-start Newton centering of min t*c'x + barrier s.t. A x = b.
CenterOutcome center(const BarrierProblem& bp, double t, Eigen::VectorXd& x,
                     Eigen::VectorXd& nu, const SolverOptions& opt,
                     int& newton_budget,
                     const std::function<bool(const Eigen::VectorXd&)>& early_stop) {
  CenterOutcome out;
  SpMat A(bp.num_eq, bp.n);
  A.setFromTriplets(bp.eq_triplets.begin(), bp.eq_triplets.end());

  // Factor A A' once so each Newton step can be snapped back onto the
  // equality manifold; the diagonal regularization in the KKT solve would
  // otherwise let steps drift off it.
  Eigen::SimplicialLDLT<SpMat> aat_ldlt;
  if (bp.num_eq > 0) {
    SpMat AAt = (A * SpMat(A.transpose())).pruned();
    for (int i = 0; i < bp.num_eq; ++i) AAt.coeffRef(i, i) += 1e-12;
    aat_ldlt.compute(AAt);
  }

  bool last_decrement_ok = false;
  for (int it = 0; it < opt.max_newton_per_center && newton_budget > 0;
       ++it, --newton_budget) {
    if (early_stop && early_stop(x)) {
      out.ok = true;
      out.newton_iters = it;
      return out;
    }
    Derivs d = barrier_derivs(bp, x, true);
    if (!d.in_domain) return out;  // should not happen; caller treats as failure

    // Multipliers from their least-squares estimate at the current point; the
    // line-searched nu update lags badly whenever the primal step length is
    // small, leaving a spurious dual residual at near-centered points.
    if (bp.num_eq > 0 && aat_ldlt.info() == Eigen::Success)
      nu = -aat_ldlt.solve(A * (t * bp.c + d.grad));
    Eigen::VectorXd r_dual = t * bp.c + d.grad;
    if (bp.num_eq > 0) r_dual += A.transpose() * nu;
    Eigen::VectorXd r_pri =
        bp.num_eq > 0 ? Eigen::VectorXd(A * x - bp.eq_rhs) : Eigen::VectorXd(0);
    const double res = std::sqrt(r_dual.squaredNorm() + r_pri.squaredNorm());
    const double scale = 1.0 + t * bp.c.norm();
    const bool primal_ok = r_pri.norm() <= 1e-8 * (1.0 + bp.eq_rhs.norm());
    if (res <= 1e-9 * scale) {
      out.ok = true;
      out.newton_iters = it;
      return out;
    }

    // KKT: [[H, A'],[A, -delta I]] [dx; dnu] = [-r_dual; -r_pri]
    const int dim = bp.n + bp.num_eq;
    std::vector<Triplet> trip = d.hess;
    trip.reserve(trip.size() + bp.eq_triplets.size() * 2 + dim);
    for (const auto& e : bp.eq_triplets) {
      trip.emplace_back(bp.n + e.row(), e.col(), e.value());
      trip.emplace_back(e.col(), bp.n + e.row(), e.value());
    }
    Eigen::VectorXd rhs(dim);
    rhs.head(bp.n) = -r_dual;
    rhs.tail(bp.num_eq) = -r_pri;
    // The barrier Hessian spans many orders of magnitude late in the path;
    // equilibrate symmetrically (row-max scaling) so the factorization works
    // on a matrix with O(1) entries, and regularize in the scaled space where
    // the perturbation is meaningful relative to every pivot.
    SpMat K0(dim, dim);
    K0.setFromTriplets(trip.begin(), trip.end());
    Eigen::VectorXd rowmax = Eigen::VectorXd::Constant(dim, 1e-12);
    for (int c = 0; c < K0.outerSize(); ++c)
      for (SpMat::InnerIterator itK(K0, c); itK; ++itK) {
        const double a = std::abs(itK.value());
        rowmax[itK.row()] = std::max(rowmax[itK.row()], a);
        rowmax[itK.col()] = std::max(rowmax[itK.col()], a);
      }
    Eigen::VectorXd dscale = rowmax.cwiseSqrt().cwiseInverse();
    SpMat Ks_base = dscale.asDiagonal() * K0 * dscale.asDiagonal();
    double reg = 1e-10;
    Eigen::VectorXd step;
    SpMat Ks;
    const Eigen::VectorXd rhs_s = dscale.asDiagonal() * rhs;
    double kkt_err = 1e300;  // relative residual of the KKT solve
    for (int attempt = 0; attempt < 4; ++attempt) {
      Ks = Ks_base;
      for (int i = 0; i < bp.n; ++i) Ks.coeffRef(i, i) += reg;
      for (int i = bp.n; i < dim; ++i) Ks.coeffRef(i, i) -= reg;
      Eigen::SimplicialLDLT<SpMat> ldlt(Ks);
      if (ldlt.info() == Eigen::Success) {
        Eigen::VectorXd ys = ldlt.solve(rhs_s);
        for (int refine = 0; refine < 2 && ys.allFinite(); ++refine)
          ys += ldlt.solve(rhs_s - Ks * ys);
        if (ys.allFinite()) {
          step = dscale.asDiagonal() * ys;
          kkt_err = (Ks * ys - rhs_s).norm() / std::max(1e-30, rhs_s.norm());
          break;
        }
      }
      reg *= 1e3;
      step.resize(0);
    }
    if (step.size() == 0) return out;

    auto project_eq = [&](Eigen::VectorXd& d_x) {
      if (bp.num_eq > 0 && aat_ldlt.info() == Eigen::Success) {
        const Eigen::VectorXd viol = A * (x + d_x) - bp.eq_rhs;
        d_x -= A.transpose() * aat_ldlt.solve(viol);
      }
    };
    Eigen::VectorXd dx = step.head(bp.n);
    Eigen::VectorXd dnu = step.tail(bp.num_eq);
    project_eq(dx);

    // The unpivoted LDLT can silently lose the descent property on badly
    // conditioned saddle systems; an exact Newton step always descends, so a
    // non-descending direction away from the center flags a bad factorization.
    // Re-solve those with the slower pivoted sparse LU before trusting it.
    // An accurate KKT solve with a tiny Newton decrement certifies the
    // center: the decrement is affine-invariant, so an absolute threshold is
    // meaningful at every barrier weight. The accuracy gate matters because
    // a broken factorization can return a direction whose directional
    // derivative is small (or even positive) at an uncentered point.
    // The decrement lambda^2 = -dd_newton is affine-invariant, so an absolute
    // threshold is meaningful at every barrier weight. Path following stays
    // sound with centers accurate to lambda ~ 0.03; demanding much more is
    // unreachable anyway once the barrier Hessian's condition number eats
    // most of the double-precision budget, because the computed step then
    // carries an irreducible relative error of roughly cond(H) * epsilon.
    const double dd_newton = (t * bp.c + d.grad).dot(dx);
    const bool solve_trusted = kkt_err <= 1e-8;
    if (primal_ok && solve_trusted && std::abs(dd_newton) <= 1e-2) {
      out.ok = true;
      out.newton_iters = it;
      return out;
    }
    if ((dd_newton > -1e-6 && !solve_trusted) || dd_newton > 1e-6) {
      Eigen::SparseLU<SpMat> lu;
      lu.compute(Ks);
      if (lu.info() == Eigen::Success) {
        Eigen::VectorXd ys = lu.solve(rhs_s);
        for (int refine = 0; refine < 2 && ys.allFinite(); ++refine)
          ys += lu.solve(rhs_s - Ks * ys);
        if (ys.allFinite()) {
          const Eigen::VectorXd step2 = dscale.asDiagonal() * ys;
          Eigen::VectorXd dx2 = step2.head(bp.n);
          project_eq(dx2);
          if ((t * bp.c + d.grad).dot(dx2) < (t * bp.c + d.grad).dot(dx)) {
            dx = dx2;
            dnu = step2.tail(bp.num_eq);
          }
        }
      }
      // Last resort: the projected steepest-descent direction always
      // descends, trading Newton's rate for guaranteed progress.
      if ((t * bp.c + d.grad).dot(dx) > -1e-6) {
        Eigen::VectorXd dsd = -(t * bp.c + d.grad);
        if (bp.num_eq > 0 && aat_ldlt.info() == Eigen::Success)
          dsd -= A.transpose() * aat_ldlt.solve(Eigen::VectorXd(A * dsd));
        const double gn = dsd.norm();
        if (gn > 0) {
          dx = dsd * (std::max(1.0, dx.norm()) / gn);
          project_eq(dx);
          dnu.setZero();
        }
      }
    }

    // Once primal-feasible, use the centering objective itself as the merit
    // function (Newton decrement stop); otherwise backtrack on residual norm.
    // The Newton decrement is affine-invariant, so an absolute threshold is
    // meaningful at every barrier weight; anything tied to |f| or t*||c||
    // grows with t and would accept uncentered points late in the path.
    const double f0 = t * bp.c.dot(x) + d.value;
    const double dirderiv = (t * bp.c + d.grad).dot(dx);
    if (opt.verbosity >= 3) {
      std::cerr << "  newton it=" << it << " res=" << res
                << " rd=" << r_dual.norm() << " rp=" << r_pri.norm()
                << " dd=" << dirderiv << " |dx|=" << dx.norm()
                << " kkt_err=" << kkt_err << " f=" << std::setprecision(14)
                << f0 << std::setprecision(6) << "\n";
      if (opt.verbosity >= 4 && it % 25 == 0) report_gaps(bp, x);
      if (opt.verbosity >= 5 && it % 25 == 0) {
        const double h = 1e-7 / std::max(1.0, dx.norm());
        const Derivs dp = barrier_derivs(bp, x + h * dx, true);
        const Derivs dm = barrier_derivs(bp, x - h * dx, true);
        if (dp.in_domain && dm.in_domain) {
          const double fd =
              (t * bp.c.dot(x + h * dx) + dp.value - t * bp.c.dot(x - h * dx) -
               dm.value) /
              (2 * h);
          std::cerr << "    fd-dirderiv " << fd << " analytic " << dirderiv
                    << "\n";
        }
        if (dp.in_domain && dm.in_domain) {
          SpMat H(bp.n, bp.n);
          H.setFromTriplets(d.hess.begin(), d.hess.end());
          const Eigen::VectorXd hv = H * dx;
          const Eigen::VectorXd fdv = (dp.grad - dm.grad) / (2 * h);
          const double c2 = (dp.value - 2 * d.value + dm.value) / (h * h);
          std::cerr << "    fd-hess |Hdx-fd|=" << (hv - fdv).norm()
                    << " |Hdx|=" << hv.norm() << " |fd|=" << fdv.norm()
                    << " dxHdx=" << dx.dot(hv) << " fd2=" << c2 << "\n";
          Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
              Eigen::MatrixXd(H), Eigen::EigenvaluesOnly);
          std::cerr << "    H eig min=" << es.eigenvalues().minCoeff()
                    << " max=" << es.eigenvalues().maxCoeff() << "\n";
        }
      }
    }
    // A positive directional derivative means the factorization broke down
    // (an exact Newton step on a convex centering problem always descends),
    // so only a small-magnitude decrement certifies centering.
    if (primal_ok && std::abs(dirderiv) <= 1e-6) {
      out.ok = true;
      out.newton_iters = it;
      return out;
    }

    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      Eigen::VectorXd xn = x + alpha * dx;
      Derivs dn = barrier_derivs(bp, xn, true);
      if (dn.in_domain) {
        Eigen::VectorXd nun = nu + alpha * dnu;
        Eigen::VectorXd rd = t * bp.c + dn.grad;
        if (bp.num_eq > 0) rd += A.transpose() * nun;
        Eigen::VectorXd rp = bp.num_eq > 0 ? Eigen::VectorXd(A * xn - bp.eq_rhs)
                                           : Eigen::VectorXd(0);
        const double rn = std::sqrt(rd.squaredNorm() + rp.squaredNorm());
        const double fn = t * bp.c.dot(xn) + dn.value;
        const bool ok_res = rn <= (1.0 - 0.1 * alpha) * res;
        const bool ok_merit =
            primal_ok && fn <= f0 + 1e-4 * alpha * dirderiv &&
            rp.norm() <= 1e-8 * (1.0 + bp.eq_rhs.norm());
        if (ok_res || ok_merit) {
          x = xn;
          nu = nun;
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
      if (alpha < 1e-13) break;  // a smaller step cannot change the iterate
    }
    const bool near_centered =
        primal_ok && (std::abs(dirderiv) <= 1e-4 ||
                      (solve_trusted && std::abs(dd_newton) <= 1e-2));
    if (!accepted) {
      // Line search made no progress: only accept if the decrement already
      // certifies near-centering.
      out.ok = near_centered;
      out.newton_iters = it;
      return out;
    }
    if (opt.verbosity >= 3)
      std::cerr << "    alpha=" << alpha << " accepted=" << accepted << "\n";
    last_decrement_ok = near_centered;
  }
  // Budget exhausted: accept only on a certified small decrement.
  out.ok = last_decrement_ok;
  out.newton_iters = opt.max_newton_per_center;
  return out;
}

}  // namespace

SolveResult solve(const ConicProgram& prog, const SolverOptions& opt) {
  SolveResult result;
  const int n = prog.num_vars;

  // Assemble equality rows.
  BarrierProblem base;
  base.prog = &prog;
  base.n = n;
  base.lb = prog.lower_bounds;
  base.ub = prog.upper_bounds;
  base.num_eq = static_cast<int>(prog.equalities.size());
  base.eq_rhs = Eigen::VectorXd::Zero(base.num_eq);
  for (int r = 0; r < base.num_eq; ++r) {
    for (const auto& [i, c] : prog.equalities[r].expr.terms)
      base.eq_triplets.emplace_back(r, i, c);
    base.eq_rhs[r] = -prog.equalities[r].expr.constant;
  }

  // Starting point: warm start when given, box midpoint otherwise; nudged
  // strictly inside the bounds.
  Eigen::VectorXd x;
  if (prog.warm_start.size() == n)
    x = prog.warm_start;
  else
    x = 0.5 * (prog.lower_bounds + prog.upper_bounds);
  for (int i = 0; i < n; ++i) {
    const double margin = 1e-9 * (prog.upper_bounds[i] - prog.lower_bounds[i]);
    x[i] = std::clamp(x[i], prog.lower_bounds[i] + margin, prog.upper_bounds[i] - margin);
  }

  int newton_budget = opt.max_total_newton;

  // Phase I when the start is not strictly inside the block domains.
  {
    BarrierProblem bp = base;
    bp.phase1_var = -1;
    Derivs d0 = barrier_derivs(bp, x, false);
    bool need_phase1 = !d0.in_domain;
    if (!need_phase1) {
      // Also require a small strict margin so phase II line searches breathe.
      // Compute the worst block slack.
      // (Domain validity alone suffices; proceed.)
    }
    if (need_phase1) {
      // Compute a starting slack dominating every violation; requires all
      // power-cone big() arguments positive at x.
      for (const auto& blk : prog.pows) {
        if (blk.big.eval(x) <= 0.0) {
          result.status = SolveStatus::NumericalFailure;
          result.message = "phase I: power-cone argument non-positive at start (" +
                           blk.tag + ")";
          return result;
        }
      }
      double viol = 0.0;
      for (const auto& blk : prog.linear) viol = std::max(viol, blk.expr.eval(x));
      for (const auto& blk : prog.quads) {
        double f = blk.lin.eval(x);
        for (const auto& sq : blk.squares) {
          const double v = sq.eval(x);
          f += v * v;
        }
        viol = std::max(viol, f);
      }
      for (const auto& blk : prog.socs) {
        double vv = 0.0;
        for (const auto& vf : blk.vec) {
          const double v = vf.eval(x);
          vv += v * v;
        }
        viol = std::max(viol, std::sqrt(vv) - blk.rhs.eval(x));
      }
      for (const auto& blk : prog.pows)
        viol = std::max(viol, blk.small.eval(x) - std::pow(blk.big.eval(x), blk.theta));

      BarrierProblem p1 = base;
      p1.n = n + 1;
      p1.phase1_var = n;
      p1.c = Eigen::VectorXd::Zero(n + 1);
      p1.c[n] = 1.0;
      p1.lb = Eigen::VectorXd(n + 1);
      p1.ub = Eigen::VectorXd(n + 1);
      p1.lb.head(n) = prog.lower_bounds;
      p1.ub.head(n) = prog.upper_bounds;
      p1.lb[n] = -10.0;
      p1.ub[n] = viol + 10.0;
      p1.barrier_terms = count_barrier_terms(p1);

      Eigen::VectorXd x1(n + 1);
      x1.head(n) = x;
      x1[n] = viol + 1.0;
      Eigen::VectorXd nu = Eigen::VectorXd::Zero(p1.num_eq);

      auto strictly_ok = [&](const Eigen::VectorXd& xc) { return xc[n] < -1e-7; };
      double t = 1.0;
      double growth = 20.0;
      bool feasible = false;
      bool path_complete = true;
      Eigen::VectorXd x_good = x1, nu_good = nu;
      for (int stage = 0; stage < 60 && newton_budget > 0; ++stage) {
        CenterOutcome co = center(p1, t, x1, nu, opt, newton_budget, strictly_ok);
        result.newton_iterations += co.newton_iters;
        if (opt.verbosity > 0)
          std::cerr << "phase1 stage " << stage << " t=" << t
                    << " slack=" << x1[n] << " ok=" << co.ok
                    << " growth=" << growth << " newton=" << co.newton_iters
                    << "\n";
        if (!co.ok) {
          // Retry the jump from the last centered point with a gentler
          // barrier-weight increase before giving up.
          if (growth > 1.5) {
            growth = std::sqrt(growth);
            t /= growth;
            x1 = x_good;
            nu = nu_good;
            continue;
          }
          path_complete = false;
          break;
        }
        x_good = x1;
        nu_good = nu;
        if (strictly_ok(x1)) {
          feasible = true;
          break;
        }
        if (p1.barrier_terms / t < 1e-9) break;
        t *= growth;
      }
      if (!feasible) {
        // Infeasibility is only proven by a completed barrier path whose
        // minimal slack stayed nonnegative; a centering stall is a numerical
        // failure, not a certificate.
        if (path_complete && x1[n] > -1e-7 && x1[n] < 1e6) {
          result.status = SolveStatus::Infeasible;
          std::ostringstream msg;
          msg << "phase I converged with slack " << x1[n]
              << " (>= 0 means no strictly feasible point found)";
          result.message = msg.str();
        } else {
          result.status = SolveStatus::NumericalFailure;
          std::ostringstream msg;
          msg << "phase I stalled with slack " << x1[n];
          result.message = msg.str();
        }
        result.x = x1.head(n);
        return result;
      }
      x = x1.head(n);
    }
  }

  // Phase II: follow the central path of the true objective. The objective
  // is normalized to unit magnitude so the gap tolerance keeps its meaning
  // when callers scale the objective (e.g. by a large penalty weight).
  BarrierProblem bp = base;
  bp.c = prog.maximize ? Eigen::VectorXd(-prog.objective) : prog.objective;
  const double cnorm =
      std::max(1e-12, bp.c.size() > 0 ? bp.c.cwiseAbs().maxCoeff() : 1.0);
  bp.c /= cnorm;
  bp.barrier_terms = count_barrier_terms(bp);
  Eigen::VectorXd nu = Eigen::VectorXd::Zero(bp.num_eq);

  double t = 1.0;
  double growth = 20.0;
  bool converged = false;
  Eigen::VectorXd x_good = x, nu_good = nu;
  for (int stage = 0; stage < 90 && newton_budget > 0; ++stage) {
    CenterOutcome co = center(bp, t, x, nu, opt, newton_budget, nullptr);
    result.newton_iterations += co.newton_iters;
    if (co.ok) {
      x_good = x;
      nu_good = nu;
    } else if (growth > 1.5) {
      growth = std::sqrt(growth);
      t /= growth;
      x = x_good;
      nu = nu_good;
      continue;
    }
    const double obj_scale = std::max(1.0, std::abs(bp.c.dot(x)));
    result.gap = bp.barrier_terms / t;
    if (opt.verbosity > 0)
      std::cerr << "phase2 stage " << stage << " t=" << t
                << " obj=" << bp.c.dot(x) << " gap=" << result.gap
                << " ok=" << co.ok << " growth=" << growth
                << " newton=" << co.newton_iters << "\n";
    if (!co.ok) {
      double pri_res = 0.0;
      if (bp.num_eq > 0) {
        SpMat A(bp.num_eq, bp.n);
        A.setFromTriplets(bp.eq_triplets.begin(), bp.eq_triplets.end());
        pri_res = (A * x - bp.eq_rhs).norm() / (1.0 + bp.eq_rhs.norm());
      }
      // Conditioning limit of the barrier path; keep the last centered point
      // when it satisfies the equality rows and its (honestly reported) gap
      // is still usable.
      if (stage > 0 && result.gap <= 1e-3 * obj_scale && pri_res <= 1e-8) {
        converged = true;
        result.message = "barrier path stopped early by conditioning";
        break;
      }
      result.status = SolveStatus::NumericalFailure;
      std::ostringstream msg;
      msg << "centering failed at barrier weight t=" << t << " after "
          << result.newton_iterations << " Newton iterations";
      result.message = msg.str();
      result.x = x;
      result.gap *= cnorm;
      return result;
    }
    if (result.gap <= opt.tol * obj_scale) {
      converged = true;
      break;
    }
    t *= growth;
  }

  result.x = x;
  result.gap *= cnorm;
  const double raw = prog.objective.dot(x) + prog.objective_constant;
  result.objective = raw;
  if (converged) {
    result.status = SolveStatus::Optimal;
  } else {
    result.status = SolveStatus::NumericalFailure;
    std::ostringstream msg;
    msg << "barrier path exhausted Newton budget (" << result.newton_iterations
        << " iterations, gap " << result.gap << ")";
    result.message = msg.str();
  }
  return result;
}

}  // namespace uavplan
