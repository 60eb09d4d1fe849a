#pragma once

// Time-space diagram: time on x, position on y, one polyline per vehicle.

#include <optional>
#include <string>

#include "wavesmooth/trajectory.hpp"

namespace wavesmooth {

enum class DiagramColor {
  kSpeed,  // red (0 m/s) through yellow to green (35 m/s)
  kSide,   // black behind the AV, blue ahead of it
};

struct DiagramOptions {
  DiagramColor color = DiagramColor::kSpeed;
  std::optional<std::size_t> av;  // drawn last, thick magenta stroke
  /// Optional viewport; samples outside are not drawn.
  std::optional<double> t_min, t_max, y_min, y_max;
  /// Jumps backwards larger than this break the polyline (ring wrap).
  double wrap_jump = 50.0;
  int width = 1000;
  int height = 600;
};

/// "#rrggbb" for a speed on the red-yellow-green ramp, clamped to [0, 35].
std::string speed_color(double v);

/// Deterministic SVG document.
std::string time_space_svg(const TrajectorySet& set, const DiagramOptions& options);

}  // namespace wavesmooth
