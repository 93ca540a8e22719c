#include "uavplan/conic.hpp"

#include <ostream>

namespace uavplan {

long ModelingCounts::variables() const {
  long n = 0;
  for (const auto& g : variable_groups) n += g.count;
  return n;
}

long ModelingCounts::constraints() const {
  long n = 0;
  for (const auto& g : constraint_groups) n += g.count;
  return n;
}

void ConicProgram::resize(int n, double lo, double hi) {
  num_vars = n;
  objective = Eigen::VectorXd::Zero(n);
  lower_bounds = Eigen::VectorXd::Constant(n, lo);
  upper_bounds = Eigen::VectorXd::Constant(n, hi);
}

bool ConicProgram::has_tag(const std::string& p) const {
  auto match = [&](const std::string& t) { return t.rfind(p, 0) == 0; };
  for (const auto& b : linear)
    if (match(b.tag)) return true;
  for (const auto& b : equalities)
    if (match(b.tag)) return true;
  for (const auto& b : quads)
    if (match(b.tag)) return true;
  for (const auto& b : socs)
    if (match(b.tag)) return true;
  for (const auto& b : pows)
    if (match(b.tag)) return true;
  return false;
}

namespace {

void dump_affine(std::ostream& os, const AffineForm& a,
                 const std::vector<std::string>& names) {
  bool first = true;
  for (const auto& [i, c] : a.terms) {
    os << (first ? "" : " + ") << c << "*";
    if (i < static_cast<int>(names.size()))
      os << names[i];
    else
      os << "x" << i;
    first = false;
  }
  if (a.constant != 0.0 || first) os << (first ? "" : " + ") << a.constant;
}

}  // namespace

void ConicProgram::dump(std::ostream& os) const {
  os << "vars " << num_vars << (maximize ? " maximize\n" : " minimize\n");
  for (const auto& b : equalities) {
    os << "[" << b.tag << "] eq: ";
    dump_affine(os, b.expr, var_names);
    os << " == 0\n";
  }
  for (const auto& b : linear) {
    os << "[" << b.tag << "] lin: ";
    dump_affine(os, b.expr, var_names);
    os << " <= 0\n";
  }
  for (const auto& b : quads) {
    os << "[" << b.tag << "] quad: " << b.squares.size() << " squares + ";
    dump_affine(os, b.lin, var_names);
    os << " <= 0\n";
  }
  for (const auto& b : socs) {
    os << "[" << b.tag << "] soc: ||" << b.vec.size() << "-vec|| <= ";
    dump_affine(os, b.rhs, var_names);
    os << "\n";
  }
  for (const auto& b : pows) {
    os << "[" << b.tag << "] pow: ";
    dump_affine(os, b.small, var_names);
    os << " <= (";
    dump_affine(os, b.big, var_names);
    os << ")^" << b.theta << "\n";
  }
}

}  // namespace uavplan
