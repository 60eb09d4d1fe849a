#pragma once

// Run configuration in a small INI dialect:
//
//   # comment
//   [scenario]
//   topology = ring
//   vehicles = 22
//   av_index = 0
//   cut_in = 120 10 20        ; repeatable: t gap speed
//
// Sections: scenario, sensor, sim, controller, human, grid, plan.
// Unknown sections and keys are rejected with their line number.

#include <istream>
#include <optional>
#include <string>

#include "wavesmooth/analysis.hpp"
#include "wavesmooth/controller.hpp"
#include "wavesmooth/simulator.hpp"

namespace wavesmooth {

struct RunConfig {
  Scenario scenario;
  SimConfig sim;
  ControllerParams controller;
  HumanDriverParams human;
  GridParams grid;
  std::optional<PlanProfile> plan;
};

/// Throws ParseError (see csv.hpp) on syntax errors, unknown keys and
/// invalid values.
RunConfig parse_config(std::istream& in);
RunConfig read_config_file(const std::string& path);

}  // namespace wavesmooth
