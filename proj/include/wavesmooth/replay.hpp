#pragma once

// Offline replay: runs the controller on recorded trajectories and logs what
// it would have commanded at every AV sample. The recorded motion is not
// altered.

#include <optional>
#include <vector>

#include "wavesmooth/controller.hpp"
#include "wavesmooth/simulator.hpp"
#include "wavesmooth/trajectory.hpp"

namespace wavesmooth {

struct ReplayOptions {
  ControllerParams controller;
  SensorModel sensor;
  double leader_length = 4.5;  // subtracted from the spacing to get the gap
  /// Ring circumference when positions are reported modulo a length.
  std::optional<double> ring_length;
  std::optional<PlanProfile> plan;
  std::uint64_t seed = 0;
};

/// The leader of the AV at each sample is the nearest vehicle ahead in the same
/// lane that has a sample at the same time.
std::vector<ControllerLogRow> replay(const TrajectorySet& set, std::size_t av, const ReplayOptions& options);

}  // namespace wavesmooth
