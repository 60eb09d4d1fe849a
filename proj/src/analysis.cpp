#include "wavesmooth/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>

#include <fmt/format.h>

namespace wavesmooth {

namespace {

constexpr double kTimeMatch = 1e-6;

std::size_t bin_of(double t, double origin, double width) {
  return static_cast<std::size_t>(std::floor((t - origin) / width + 1e-9));
}

std::size_t band_index(double distance, double width) {
  const auto idx = static_cast<std::size_t>(std::ceil(distance / width - 1e-12));
  return std::max<std::size_t>(idx, 1);
}

std::optional<double> checked_variance(const TrajectorySet& set, std::span<const std::size_t> members,
                                       const SampleFilter& filter) {
  try {
    return pooled_speed_variance(set, members, filter);
  } catch (const AnalysisError&) {
    return std::nullopt;
  }
}

}  // namespace

const char* to_string(Side side) { return side == Side::kFront ? "front" : "behind"; }

std::vector<std::optional<double>> distances_to_av(const TrajectorySet& set, std::size_t av) {
  if (av >= set.trajectories.size()) throw AnalysisError("AV index out of range");
  const Trajectory& ref = set.trajectories[av];
  if (ref.empty()) throw AnalysisError("AV trajectory is empty");

  std::vector<std::optional<double>> out(set.trajectories.size());
  bool any = false;
  for (std::size_t i = 0; i < set.trajectories.size(); ++i) {
    if (i == av) continue;
    const Trajectory& tr = set.trajectories[i];
    std::size_t a = 0;
    std::size_t b = 0;
    while (a < tr.size() && b < ref.size()) {
      const double d = tr.t[a] - ref.t[b];
      if (std::fabs(d) <= kTimeMatch) {
        out[i] = tr.y[a] - ref.y[b];
        any = true;
        break;
      }
      if (d < 0.0) {
        ++a;
      } else {
        ++b;
      }
    }
  }
  if (!any) throw AnalysisError("no trajectory overlaps the AV in time");
  return out;
}

BoxGrid assign_boxes(const TrajectorySet& set, std::size_t av, const GridParams& params) {
  if (!(params.box_width > 0.0) || !(params.t_bin > 0.0)) throw AnalysisError("box width and t_bin must be positive");
  BoxGrid grid;
  grid.params = params;
  grid.av = av;
  grid.t_origin = set.time_span().first;
  grid.distance = distances_to_av(set, av);

  const auto make_boxes = [&](Side side, double extent) {
    std::vector<Box> boxes;
    const auto count = static_cast<std::size_t>(std::ceil(extent / params.box_width - 1e-12));
    for (std::size_t i = 1; i <= count; ++i) {
      Box b;
      b.side = side;
      b.index = static_cast<int>(i);
      b.lo = static_cast<double>(i - 1) * params.box_width;
      b.hi = std::min(static_cast<double>(i) * params.box_width, extent);
      boxes.push_back(std::move(b));
    }
    return boxes;
  };
  grid.front = make_boxes(Side::kFront, params.extent_front);
  grid.behind = make_boxes(Side::kBehind, params.extent_behind);

  for (std::size_t i = 0; i < grid.distance.size(); ++i) {
    if (!grid.distance[i]) continue;
    const double d = *grid.distance[i];
    const bool ahead = d >= 0.0;
    const double extent = ahead ? params.extent_front : params.extent_behind;
    if (std::fabs(d) > extent) continue;
    std::vector<Box>& side = ahead ? grid.front : grid.behind;
    const std::size_t idx = band_index(std::fabs(d), params.box_width);
    if (idx <= side.size()) side[idx - 1].members.push_back(i);
  }
  return grid;
}

std::vector<double> centered_moving_average(std::span<const double> values, std::size_t window) {
  const std::size_t n = values.size();
  std::vector<double> out(values.begin(), values.end());
  if (window <= 1 || n == 0) return out;
  const std::size_t half = window / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = std::min({half, i, n - 1 - i});
    double sum = 0.0;
    for (std::size_t j = i - r; j <= i + r; ++j) sum += values[j];
    out[i] = sum / static_cast<double>(2 * r + 1);
  }
  return out;
}

SubBoxSeries subbox_averages(const TrajectorySet& set, const Box& box, double t_origin, double t_bin,
                             std::size_t smoothing_window) {
  if (box.members.empty()) throw AnalysisError(fmt::format("{} box {} is empty", to_string(box.side), box.index));
  struct Acc {
    double t = 0.0;
    double y = 0.0;
    double v = 0.0;
    std::size_t n = 0;
  };
  std::map<std::size_t, Acc> bins;
  for (std::size_t m : box.members) {
    const Trajectory& tr = set.trajectories[m];
    for (std::size_t k = 0; k < tr.size(); ++k) {
      if (tr.t[k] < t_origin - kTimeMatch) continue;
      Acc& acc = bins[bin_of(tr.t[k], t_origin, t_bin)];
      acc.t += tr.t[k];
      acc.y += tr.y[k];
      acc.v += tr.v[k];
      ++acc.n;
    }
  }

  SubBoxSeries series;
  std::optional<std::size_t> prev;
  for (const auto& [bin, acc] : bins) {
    if (prev) {
      for (std::size_t b = *prev + 1; b < bin; ++b) series.skipped_bins.push_back(b);
    }
    prev = bin;
    const auto n = static_cast<double>(acc.n);
    series.averages.push_back({bin, acc.t / n, acc.y / n, acc.v / n, acc.n});
  }

  if (smoothing_window > 1 && series.averages.size() > 1) {
    std::vector<double> v;
    std::vector<double> y;
    for (const SubBoxAverage& a : series.averages) {
      v.push_back(a.v);
      y.push_back(a.y);
    }
    const std::vector<double> vs = centered_moving_average(v, smoothing_window);
    const std::vector<double> ys = centered_moving_average(y, smoothing_window);
    for (std::size_t i = 0; i < series.averages.size(); ++i) {
      series.averages[i].v = vs[i];
      series.averages[i].y = ys[i];
    }
  }
  return series;
}

WaveBoundary wave_boundaries(const TrajectorySet& set, const BoxGrid& grid, double speed_threshold) {
  WaveBoundary out;

  // spatial order: farthest behind ... nearest behind, nearest front ... farthest front
  std::vector<const Box*> ordered;
  for (auto it = grid.behind.rbegin(); it != grid.behind.rend(); ++it) ordered.push_back(&*it);
  for (const Box& b : grid.front) ordered.push_back(&b);

  for (const Box* box : ordered) {
    bool crossed = false;
    int starts = 0;
    int ends = 0;
    if (!box->members.empty()) {
      const SubBoxSeries series =
          subbox_averages(set, *box, grid.t_origin, grid.params.t_bin, grid.params.smoothing_window);
      for (std::size_t i = 1; i < series.averages.size(); ++i) {
        const SubBoxAverage& prev = series.averages[i - 1];
        const SubBoxAverage& cur = series.averages[i];
        if (prev.v > speed_threshold && cur.v <= speed_threshold) {
          out.start_frontier.push_back({box->side, box->index, starts++, cur.t, cur.y});
          crossed = true;
        } else if (prev.v <= speed_threshold && cur.v > speed_threshold) {
          out.end_frontier.push_back({box->side, box->index, ends++, cur.t, cur.y});
          crossed = true;
        }
      }
    }
    if (!crossed) out.boxes_without_crossing.emplace_back(box->side, box->index);
  }

  // Points with the same ordinal belong to the same wave; each such frontier
  // is smoothed along the spatial box order.
  const auto smooth = [&](std::vector<FrontierPoint>& frontier) {
    if (grid.params.smoothing_window <= 1) return;
    int waves = 0;
    for (const FrontierPoint& p : frontier) waves = std::max(waves, p.wave + 1);
    for (int w = 0; w < waves; ++w) {
      std::vector<std::size_t> idx;
      std::vector<double> t;
      std::vector<double> y;
      for (std::size_t i = 0; i < frontier.size(); ++i) {
        if (frontier[i].wave != w) continue;
        idx.push_back(i);
        t.push_back(frontier[i].t);
        y.push_back(frontier[i].y);
      }
      const std::vector<double> ts = centered_moving_average(t, grid.params.smoothing_window);
      const std::vector<double> ys = centered_moving_average(y, grid.params.smoothing_window);
      for (std::size_t j = 0; j < idx.size(); ++j) {
        frontier[idx[j]].t = ts[j];
        frontier[idx[j]].y = ys[j];
      }
    }
  };
  smooth(out.start_frontier);
  smooth(out.end_frontier);
  return out;
}

double pooled_speed_variance(const TrajectorySet& set, std::span<const std::size_t> members,
                             const SampleFilter& filter) {
  std::vector<double> speeds;
  for (std::size_t m : members) {
    const Trajectory& tr = set.trajectories.at(m);
    for (std::size_t k = 0; k < tr.size(); ++k) {
      if (!filter || filter(m, k)) speeds.push_back(tr.v[k]);
    }
  }
  if (speeds.size() < 2) throw AnalysisError("pooled speed variance needs at least two samples");
  const Eigen::Map<const Eigen::ArrayXd> v(speeds.data(), static_cast<Eigen::Index>(speeds.size()));
  return (v - v.mean()).square().mean();
}

double pooled_speed_variance(const TrajectorySet& set, const SampleFilter& filter) {
  std::vector<std::size_t> all(set.trajectories.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return pooled_speed_variance(set, all, filter);
}

SampleFilter wave_region(const BoxGrid& grid, const WaveBoundary& boundary, const TrajectorySet& set) {
  using Interval = std::pair<double, double>;
  const double inf = std::numeric_limits<double>::infinity();
  auto intervals = std::make_shared<std::map<std::pair<Side, int>, std::vector<Interval>>>();

  const auto points_of = [](const std::vector<FrontierPoint>& frontier, Side side, int box) {
    std::vector<double> ts;
    for (const FrontierPoint& p : frontier) {
      if (p.side == side && p.box == box) ts.push_back(p.t);
    }
    std::sort(ts.begin(), ts.end());
    return ts;
  };

  const auto build = [&](const std::vector<Box>& boxes) {
    for (const Box& b : boxes) {
      const std::vector<double> starts = points_of(boundary.start_frontier, b.side, b.index);
      const std::vector<double> ends = points_of(boundary.end_frontier, b.side, b.index);
      std::vector<Interval>& out = (*intervals)[{b.side, b.index}];
      std::size_t e = 0;
      // an end before the first start: the wave was already present
      if (!ends.empty() && (starts.empty() || ends.front() < starts.front())) {
        out.emplace_back(-inf, ends.front());
        e = 1;
      }
      for (double s : starts) {
        while (e < ends.size() && ends[e] < s) ++e;
        if (e < ends.size()) {
          out.emplace_back(s, ends[e]);
          ++e;
        } else {
          out.emplace_back(s, inf);
        }
      }
    }
  };
  build(grid.front);
  build(grid.behind);

  std::vector<const std::vector<Interval>*> of_traj(set.trajectories.size(), nullptr);
  const auto attach = [&](const std::vector<Box>& boxes) {
    for (const Box& b : boxes) {
      for (std::size_t m : b.members) of_traj[m] = &(*intervals)[{b.side, b.index}];
    }
  };
  attach(grid.front);
  attach(grid.behind);

  return [intervals, of_traj, &set](std::size_t traj, std::size_t sample) {
    const auto* ivs = traj < of_traj.size() ? of_traj[traj] : nullptr;
    if (ivs == nullptr) return false;
    const double t = set.trajectories[traj].t[sample];
    return std::any_of(ivs->begin(), ivs->end(), [t](const Interval& iv) { return t >= iv.first && t <= iv.second; });
  };
}

std::optional<double> percent_change(double var_front, double var_behind) {
  if (!(var_front > 0.0)) return std::nullopt;
  return 100.0 * (var_behind - var_front) / var_front;
}

std::string format_percent(std::optional<double> pct) {
  if (!pct || std::isnan(*pct)) return "n/a";
  const long rounded = std::lround(*pct);
  if (rounded == 0) return "0%";
  return fmt::format("{:+d}%", rounded);
}

VarianceReport variance_report(const TrajectorySet& set, std::size_t av, double front_extent, double behind_extent,
                               RegionKind region, const GridParams& params) {
  GridParams gp = params;
  gp.extent_front = front_extent;
  gp.extent_behind = behind_extent;
  const BoxGrid grid = assign_boxes(set, av, gp);

  SampleFilter filter;
  if (region == RegionKind::kWave) {
    filter = wave_region(grid, wave_boundaries(set, grid, gp.speed_threshold), set);
  }

  std::vector<std::size_t> front;
  std::vector<std::size_t> behind;
  for (const Box& b : grid.front) front.insert(front.end(), b.members.begin(), b.members.end());
  for (const Box& b : grid.behind) behind.insert(behind.end(), b.members.begin(), b.members.end());

  if (front.empty() || behind.empty()) {
    throw AnalysisError(fmt::format("no vehicles within {:g} m {} the AV at the first co-existing time",
                                    front.empty() ? front_extent : behind_extent,
                                    front.empty() ? "ahead of" : "behind"));
  }

  VarianceReport report;
  report.region = region;
  report.vehicles_front = front.size();
  report.vehicles_behind = behind.size();
  report.variance_front = pooled_speed_variance(set, front, filter);
  report.variance_behind = pooled_speed_variance(set, behind, filter);
  report.pct_change = percent_change(report.variance_front, report.variance_behind);
  for (const Box& b : grid.front) report.per_distance.push_back({b.side, b.index, checked_variance(set, b.members, filter)});
  for (const Box& b : grid.behind) {
    report.per_distance.push_back({b.side, b.index, checked_variance(set, b.members, filter)});
  }
  return report;
}

std::vector<double> table_front_axis() { return {1400, 1200, 1000, 800, 600, 400, 200}; }

std::vector<double> table_behind_axis() { return {200, 400, 600, 800, 1000, 1200, 1400}; }

VarianceGrid variance_grid(const TrajectorySet& set, std::size_t av, const std::vector<double>& front_distances,
                           const std::vector<double>& behind_distances) {
  const std::vector<std::optional<double>> dist = distances_to_av(set, av);
  const auto members_within = [&](bool ahead, double extent) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      if (!dist[i]) continue;
      const double d = *dist[i];
      if (ahead ? (d >= 0.0 && d <= extent) : (d < 0.0 && -d <= extent)) out.push_back(i);
    }
    return out;
  };

  VarianceGrid grid;
  grid.front = front_distances;
  grid.behind = behind_distances;
  grid.percent = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(behind_distances.size()),
                                           static_cast<Eigen::Index>(front_distances.size()),
                                           std::numeric_limits<double>::quiet_NaN());
  std::vector<std::optional<double>> front_var;
  for (double f : front_distances) front_var.push_back(checked_variance(set, members_within(true, f), {}));
  for (std::size_t r = 0; r < behind_distances.size(); ++r) {
    const std::optional<double> vb = checked_variance(set, members_within(false, behind_distances[r]), {});
    for (std::size_t c = 0; c < front_distances.size(); ++c) {
      if (!vb || !front_var[c]) continue;
      if (const auto pct = percent_change(*front_var[c], *vb)) {
        grid.percent(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *pct;
      }
    }
  }
  return grid;
}

}  // namespace wavesmooth
