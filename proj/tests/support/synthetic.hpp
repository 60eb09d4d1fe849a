#pragma once

// Synthetic trajectory sets with known ground truth for the analysis tests.

#include <cmath>
#include <string>

#include <fmt/format.h>

#include "wavesmooth/trajectory.hpp"

namespace synthetic {

/// A slow band [lower(t), lower(t) + width] drifting upstream at band_speed
/// (negative) through free-flowing traffic. Vehicles move at v_slow inside the
/// band and at v_fast elsewhere.
struct BandWave {
  std::size_t vehicles = 60;
  std::size_t av = 30;
  double spacing = 40.0;
  double v_fast = 30.0;
  double v_slow = 2.0;
  double band_speed = -5.0;
  double band_origin = 5400.0;  // lower edge at t = 0
  double band_width = 300.0;
  double duration = 260.0;
  double dt = 0.1;

  [[nodiscard]] double lower(double t) const { return band_origin + band_speed * t; }
  [[nodiscard]] double upper(double t) const { return lower(t) + band_width; }

  [[nodiscard]] wavesmooth::TrajectorySet build() const {
    wavesmooth::TrajectorySet set;
    set.dt = dt;
    set.av_index = av;
    const auto steps = static_cast<std::size_t>(std::llround(duration / dt));
    for (std::size_t i = 0; i < vehicles; ++i) {
      wavesmooth::Trajectory tr;
      tr.id = i == av ? std::string("av") : fmt::format("h{:03d}", i);
      tr.kind = i == av ? wavesmooth::VehicleKind::kControlledAv : wavesmooth::VehicleKind::kHuman;
      double y = spacing * static_cast<double>(i);
      for (std::size_t k = 0; k <= steps; ++k) {
        const double t = dt * static_cast<double>(k);
        const double v = (y >= lower(t) && y <= upper(t)) ? v_slow : v_fast;
        tr.t.push_back(t);
        tr.y.push_back(y);
        tr.v.push_back(v);
        y += v * dt;
      }
      set.trajectories.push_back(std::move(tr));
    }
    return set;
  }
};

/// Constant-speed vehicles: speeds[i] for all samples, positions spaced 50 m
/// apart, AV at index av.
inline wavesmooth::TrajectorySet constant_speeds(const std::vector<double>& speeds, std::size_t av,
                                                 std::size_t samples = 11, double dt = 1.0) {
  wavesmooth::TrajectorySet set;
  set.dt = dt;
  set.av_index = av;
  for (std::size_t i = 0; i < speeds.size(); ++i) {
    wavesmooth::Trajectory tr;
    tr.id = fmt::format("c{:02d}", i);
    for (std::size_t k = 0; k < samples; ++k) {
      const double t = dt * static_cast<double>(k);
      tr.t.push_back(t);
      tr.y.push_back(50.0 * static_cast<double>(i) - 50.0 * static_cast<double>(av) + speeds[i] * t);
      tr.v.push_back(speeds[i]);
    }
    set.trajectories.push_back(std::move(tr));
  }
  return set;
}

}  // namespace synthetic
