#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace uavplan {

// Sparse affine functional a'x + b.
struct AffineForm {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  AffineForm& add(int var, double coef) {
    if (coef != 0.0) terms.emplace_back(var, coef);
    return *this;
  }
  double eval(const Eigen::VectorXd& x) const {
    double v = constant;
    for (const auto& [i, c] : terms) v += c * x[i];
    return v;
  }
};

// Every block carries a provenance tag naming its source constraint.
struct LinearBlock {  // expr(x) <= 0
  AffineForm expr;
  std::string tag;
};

struct EqBlock {  // expr(x) == 0
  AffineForm expr;
  std::string tag;
};

struct QuadBlock {  // sum_m squares_m(x)^2 + lin(x) <= 0
  std::vector<AffineForm> squares;
  AffineForm lin;
  std::string tag;
};

struct SocBlock {  // ||vec(x)|| <= rhs(x)
  std::vector<AffineForm> vec;
  AffineForm rhs;
  std::string tag;
};

struct PowBlock {  // small(x) <= big(x)^theta, big(x) > 0, theta in (0,1)
  AffineForm small;
  AffineForm big;
  double theta = 0.5;
  std::string tag;
};

struct CountGroup {
  std::string name;
  long count = 0;
};

// Paper-level bookkeeping, independent of the conic reification below it.
struct ModelingCounts {
  std::vector<CountGroup> variable_groups;
  std::vector<CountGroup> constraint_groups;
  long variables() const;
  long constraints() const;
};

struct ConicProgram {
  int num_vars = 0;
  bool maximize = true;
  Eigen::VectorXd objective;       // c in c'x
  double objective_constant = 0.0;
  Eigen::VectorXd lower_bounds;    // finite box on every variable
  Eigen::VectorXd upper_bounds;
  Eigen::VectorXd warm_start;      // empty when absent

  std::vector<LinearBlock> linear;
  std::vector<EqBlock> equalities;
  std::vector<QuadBlock> quads;
  std::vector<SocBlock> socs;
  std::vector<PowBlock> pows;

  ModelingCounts modeling;
  std::vector<std::string> var_names;  // optional, debug only

  void resize(int n, double lo = -1e6, double hi = 1e6);
  bool has_tag(const std::string& tag_prefix) const;

  // One block per line with provenance tag; stable across runs.
  void dump(std::ostream& os) const;
};

enum class SolveStatus { Optimal, Infeasible, NumericalFailure };

struct SolveResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  Eigen::VectorXd x;
  double objective = 0.0;   // in the program's sense (includes constant)
  double gap = 0.0;         // duality-gap bound from the barrier path
  int newton_iterations = 0;
  std::string message;
};

}  // namespace uavplan
