#include "wavesmooth/trajectory.hpp"

#include <algorithm>
#include <limits>

namespace wavesmooth {

const char* to_string(VehicleKind kind) {
  switch (kind) {
    case VehicleKind::kHuman:
      return "human";
    case VehicleKind::kControlledAv:
      return "av";
    case VehicleKind::kScriptedLeader:
      return "leader";
    case VehicleKind::kUnknown:
      return "unknown";
  }
  return "unknown";
}

std::optional<std::size_t> TrajectorySet::find(const std::string& id) const {
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    if (trajectories[i].id == id) return i;
  }
  return std::nullopt;
}

std::size_t TrajectorySet::sample_count() const {
  std::size_t n = 0;
  for (const Trajectory& tr : trajectories) n += tr.size();
  return n;
}

std::pair<double, double> TrajectorySet::time_span() const {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const Trajectory& tr : trajectories) {
    if (tr.empty()) continue;
    lo = std::min(lo, tr.t.front());
    hi = std::max(hi, tr.t.back());
  }
  return {lo, hi};
}

}  // namespace wavesmooth
