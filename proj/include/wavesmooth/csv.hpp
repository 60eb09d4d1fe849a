#pragma once

// Text formats: trajectory CSV, controller log CSV, variance grid tables.
//
// Trajectory CSV:
//   vehicle_id,lane,t,y,v
//   av,1,0.000,0.000,8.122
// Rows are grouped by vehicle_id (sorted) and increasing in t within a
// vehicle; t, y and v are written with three decimals.

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavesmooth/analysis.hpp"
#include "wavesmooth/simulator.hpp"
#include "wavesmooth/trajectory.hpp"

namespace wavesmooth {

/// Malformed input; `line` is 1-based (0 when not tied to a line).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& message);
  const std::size_t line;
};

TrajectorySet parse_trajectory_csv(std::istream& in);
void write_trajectory_csv(std::ostream& out, const TrajectorySet& set);

TrajectorySet read_trajectory_file(const std::string& path);

void write_controller_log_csv(std::ostream& out, const std::vector<ControllerLogRow>& rows);

/// Same layout as the published table: header row of front extents, one row
/// per behind extent, integer percentages.
void write_variance_grid_csv(std::ostream& out, const VarianceGrid& grid);
void write_variance_grid_text(std::ostream& out, const VarianceGrid& grid);

}  // namespace wavesmooth
