#pragma once

#include <string>
#include <vector>

#include "uavplan/drivers.hpp"
#include "uavplan/scenario.hpp"

namespace uavplan {

struct PlotPath {
  std::string label;
  std::vector<Vec2> points;
};

// Standalone SVG: device positions, gateway, start/goal, and one polyline per
// path with a marker (class "wp") at every slot position.
void emit_trajectory_overlay(const std::vector<PlotPath>& paths,
                             const Scenario& s, const std::string& path);

void emit_trajectory_plot(const RunReport& rep, const Scenario& s,
                          const std::string& path);

}  // namespace uavplan
