#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace wavesmooth {

enum class VehicleKind { kHuman, kControlledAv, kScriptedLeader, kUnknown };

const char* to_string(VehicleKind kind);

/// Sampled (t, y, v) series of one vehicle on the common time grid.
struct Trajectory {
  std::string id;
  int lane = 1;
  VehicleKind kind = VehicleKind::kUnknown;
  std::vector<double> t;
  std::vector<double> y;
  std::vector<double> v;

  [[nodiscard]] std::size_t size() const { return t.size(); }
  [[nodiscard]] bool empty() const { return t.empty(); }
};

struct TrajectorySet {
  std::vector<Trajectory> trajectories;
  double dt = 0.0;
  std::optional<std::size_t> av_index;

  /// Index of the trajectory with the given id.
  [[nodiscard]] std::optional<std::size_t> find(const std::string& id) const;
  [[nodiscard]] std::size_t sample_count() const;
  /// Earliest and latest sample time over all trajectories.
  [[nodiscard]] std::pair<double, double> time_span() const;
};

}  // namespace wavesmooth
