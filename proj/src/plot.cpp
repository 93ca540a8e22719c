#include "uavplan/plot.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace uavplan {

namespace {

const char* kPathColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                             "#ff7f0e", "#8c564b"};

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(8) << v;
  return os.str();
}

}  // namespace

void emit_trajectory_overlay(const std::vector<PlotPath>& paths,
                             const Scenario& s, const std::string& path) {
  double xlo = std::min(s.uav.start.x(), s.uav.goal.x());
  double xhi = std::max(s.uav.start.x(), s.uav.goal.x());
  double ylo = std::min(s.uav.start.y(), s.uav.goal.y());
  double yhi = std::max(s.uav.start.y(), s.uav.goal.y());
  auto grow = [&](const Vec2& p) {
    xlo = std::min(xlo, p.x());
    xhi = std::max(xhi, p.x());
    ylo = std::min(ylo, p.y());
    yhi = std::max(yhi, p.y());
  };
  grow(s.gateway);
  for (const auto& d : s.devices) grow(d.position);
  for (const auto& p : paths)
    for (const auto& pt : p.points) grow(pt);
  const double pad = 0.05 * std::max({xhi - xlo, yhi - ylo, 1.0});
  xlo -= pad;
  xhi += pad;
  ylo -= pad;
  yhi += pad;

  // SVG y grows downward; flip so the plot reads like map coordinates.
  auto X = [&](double x) { return x - xlo; };
  auto Y = [&](double y) { return yhi - y; };

  std::ofstream out(path);
  if (!out) throw std::runtime_error("plot: cannot write " + path);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 "
      << num(xhi - xlo) << ' ' << num(yhi - ylo) << "\">\n";
  const double r = 0.01 * std::max(xhi - xlo, yhi - ylo);

  for (const auto& d : s.devices)
    out << "  <circle class=\"device\" cx=\"" << num(X(d.position.x()))
        << "\" cy=\"" << num(Y(d.position.y())) << "\" r=\"" << num(r)
        << "\" fill=\"#444\"><title>device " << d.id << "</title></circle>\n";
  out << "  <rect class=\"gateway\" x=\"" << num(X(s.gateway.x()) - r)
      << "\" y=\"" << num(Y(s.gateway.y()) - r) << "\" width=\"" << num(2 * r)
      << "\" height=\"" << num(2 * r) << "\" fill=\"#000\"/>\n";
  out << "  <circle class=\"start\" cx=\"" << num(X(s.uav.start.x()))
      << "\" cy=\"" << num(Y(s.uav.start.y())) << "\" r=\"" << num(1.3 * r)
      << "\" fill=\"none\" stroke=\"#090\"/>\n";
  out << "  <circle class=\"goal\" cx=\"" << num(X(s.uav.goal.x()))
      << "\" cy=\"" << num(Y(s.uav.goal.y())) << "\" r=\"" << num(1.3 * r)
      << "\" fill=\"none\" stroke=\"#900\"/>\n";

  for (std::size_t p = 0; p < paths.size(); ++p) {
    const char* color = kPathColors[p % (sizeof(kPathColors) / sizeof(char*))];
    out << "  <polyline class=\"path\" data-label=\"" << paths[p].label
        << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
        << num(0.3 * r) << "\" points=\"";
    for (std::size_t i = 0; i < paths[p].points.size(); ++i) {
      if (i) out << ' ';
      out << num(X(paths[p].points[i].x())) << ','
          << num(Y(paths[p].points[i].y()));
    }
    out << "\"/>\n";
    for (const auto& pt : paths[p].points)
      out << "  <circle class=\"wp\" cx=\"" << num(X(pt.x())) << "\" cy=\""
          << num(Y(pt.y())) << "\" r=\"" << num(0.5 * r) << "\" fill=\"" << color
          << "\"/>\n";
  }
  out << "</svg>\n";
}

void emit_trajectory_plot(const RunReport& rep, const Scenario& s,
                          const std::string& path) {
  if (rep.iterate.q.empty())
    throw std::invalid_argument("plot: report has no trajectory");
  emit_trajectory_overlay({{"trajectory", rep.iterate.q}}, s, path);
}

}  // namespace uavplan
