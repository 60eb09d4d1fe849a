#pragma once

// Trajectory analytics: distance boxes around the AV, wave-border detection
// on time-binned sub-box averages, pooled speed variance and the
// front/behind percentage grid.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wavesmooth/trajectory.hpp"

namespace wavesmooth {

class AnalysisError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridParams {
  double box_width = 200.0;  // m
  double t_bin = 10.0;       // s
  double extent_front = 1500.0;
  double extent_behind = 700.0;
  double speed_threshold = 4.0;  // m/s
  /// Centred moving-average window over sub-boxes and frontier points.
  /// 1 disables smoothing.
  std::size_t smoothing_window = 3;
};

enum class Side { kFront, kBehind };

const char* to_string(Side side);

struct Box {
  Side side = Side::kFront;
  int index = 1;  // 1 = nearest to the AV
  double lo = 0.0;  // distance band (lo, hi], metres from the AV
  double hi = 0.0;
  std::vector<std::size_t> members;  // trajectory indices
};

struct BoxGrid {
  GridParams params;
  std::size_t av = 0;
  double t_origin = 0.0;  // left edge of sub-box 0
  std::vector<Box> front;
  std::vector<Box> behind;
  /// Signed distance to the AV (positive = ahead) at the first co-existing
  /// timestamp, per trajectory; nullopt for the AV and for vehicles that never
  /// co-exist with it.
  std::vector<std::optional<double>> distance;
};

/// Signed distance of each trajectory to the AV at their first common sample
/// time. Throws AnalysisError when no trajectory overlaps the AV in time.
std::vector<std::optional<double>> distances_to_av(const TrajectorySet& set, std::size_t av);

BoxGrid assign_boxes(const TrajectorySet& set, std::size_t av, const GridParams& params);

struct SubBoxAverage {
  std::size_t bin = 0;
  double t = 0.0;
  double y = 0.0;
  double v = 0.0;
  std::size_t samples = 0;
};

struct SubBoxSeries {
  std::vector<SubBoxAverage> averages;  // non-empty sub-boxes in time order
  std::vector<std::size_t> skipped_bins;  // empty sub-boxes
};

/// Centred moving average; the window shrinks symmetrically at the ends, so
/// linear sequences are preserved.
std::vector<double> centered_moving_average(std::span<const double> values, std::size_t window);

SubBoxSeries subbox_averages(const TrajectorySet& set, const Box& box, double t_origin, double t_bin,
                             std::size_t smoothing_window);

struct FrontierPoint {
  Side side = Side::kFront;
  int box = 1;
  int wave = 0;  // ordinal of the crossing within its box
  double t = 0.0;
  double y = 0.0;
};

struct WaveBoundary {
  std::vector<FrontierPoint> start_frontier;
  std::vector<FrontierPoint> end_frontier;
  std::vector<std::pair<Side, int>> boxes_without_crossing;
};

WaveBoundary wave_boundaries(const TrajectorySet& set, const BoxGrid& grid, double speed_threshold);

/// Predicate selecting samples: (trajectory index, sample index).
using SampleFilter = std::function<bool(std::size_t, std::size_t)>;

/// Population variance of all selected speed samples of the given members.
/// Throws AnalysisError with fewer than two samples.
double pooled_speed_variance(const TrajectorySet& set, std::span<const std::size_t> members,
                             const SampleFilter& filter = {});
double pooled_speed_variance(const TrajectorySet& set, const SampleFilter& filter = {});

/// Samples between paired start/end frontier times of the box each
/// trajectory belongs to.
SampleFilter wave_region(const BoxGrid& grid, const WaveBoundary& boundary, const TrajectorySet& set);

/// 100 (behind - front) / front; nullopt when var_front is zero.
std::optional<double> percent_change(double var_front, double var_behind);

/// "-52%", "+5%", "0%", or "n/a".
std::string format_percent(std::optional<double> pct);

enum class RegionKind { kAll, kWave };

struct DistanceVariance {
  Side side;
  int box;
  std::optional<double> variance;
};

struct VarianceReport {
  double variance_front = 0.0;
  double variance_behind = 0.0;
  std::optional<double> pct_change;
  std::size_t vehicles_front = 0;
  std::size_t vehicles_behind = 0;
  RegionKind region = RegionKind::kAll;
  std::vector<DistanceVariance> per_distance;
};

VarianceReport variance_report(const TrajectorySet& set, std::size_t av, double front_extent, double behind_extent,
                               RegionKind region, const GridParams& params);

/// Rows: behind extents; columns: front extents. NaN marks an empty cell.
struct VarianceGrid {
  std::vector<double> behind;
  std::vector<double> front;
  Eigen::MatrixXd percent;
};

/// Column order of the published front/behind table: 1400 m ... 200 m.
std::vector<double> table_front_axis();
/// Row order of the published table: 200 m ... 1400 m.
std::vector<double> table_behind_axis();

VarianceGrid variance_grid(const TrajectorySet& set, std::size_t av, const std::vector<double>& front_distances,
                           const std::vector<double>& behind_distances);

}  // namespace wavesmooth
