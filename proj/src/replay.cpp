#include "wavesmooth/replay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace wavesmooth {

namespace {

constexpr double kTimeMatch = 1e-6;

std::optional<std::size_t> sample_at(const Trajectory& tr, double t) {
  if (tr.empty() || t < tr.t.front() - kTimeMatch || t > tr.t.back() + kTimeMatch) return std::nullopt;
  const auto it = std::lower_bound(tr.t.begin(), tr.t.end(), t - kTimeMatch);
  if (it == tr.t.end() || std::fabs(*it - t) > kTimeMatch) return std::nullopt;
  return static_cast<std::size_t>(it - tr.t.begin());
}

}  // namespace

std::vector<ControllerLogRow> replay(const TrajectorySet& set, std::size_t av, const ReplayOptions& options) {
  if (av >= set.trajectories.size()) throw std::invalid_argument("AV index out of range");
  const Trajectory& ego = set.trajectories[av];
  std::mt19937_64 rng(options.seed);
  std::bernoulli_distribution loss(std::clamp(options.sensor.loss_probability, 0.0, 1.0));

  Controller controller(options.controller, options.plan);
  std::vector<ControllerLogRow> log;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (std::size_t k = 0; k < ego.size(); ++k) {
    const double t = ego.t[k];
    const double v = ego.v[k];
    const double dt = k + 1 < ego.size() ? ego.t[k + 1] - ego.t[k] : (k > 0 ? ego.t[k] - ego.t[k - 1] : set.dt);

    double best = std::numeric_limits<double>::infinity();
    double v_lead = 0.0;
    for (std::size_t j = 0; j < set.trajectories.size(); ++j) {
      const Trajectory& other = set.trajectories[j];
      if (j == av || other.lane != ego.lane) continue;
      const auto s = sample_at(other, t);
      if (!s) continue;
      double d = other.y[*s] - ego.y[k];
      if (options.ring_length) {
        d = std::fmod(d, *options.ring_length);
        if (d < 0.0) d += *options.ring_length;
      }
      if (d > 0.0 && d < best) {
        best = d;
        v_lead = other.v[*s];
      }
    }

    SensorReading r;
    r.t = t;
    r.v = v;
    r.position = ego.y[k];
    r.a = k > 0 ? (ego.v[k] - ego.v[k - 1]) / (ego.t[k] - ego.t[k - 1]) : 0.0;
    const double gap = best - options.leader_length;
    bool in_dropout = false;
    for (const DropoutInterval& d : options.sensor.dropouts) in_dropout = in_dropout || (t >= d.t_begin && t < d.t_end);
    const bool lost = options.sensor.loss_probability > 0.0 && loss(rng);
    r.valid = std::isfinite(best) && gap <= options.sensor.range_max && !in_dropout && !lost;
    if (r.valid) {
      r.h = gap;
      r.v_lead = v_lead;
      r.v_rel = v_lead - v;
    } else {
      r.h = nan;
      r.v_lead = nan;
      r.v_rel = nan;
    }
    if (!controller.state().engaged) controller.engage(v);
    if (!controller.state().engaged) {
      log.push_back({t, r.valid ? gap : nan, v, r.v_lead, nan, nan, nan, nan, "manual", r.valid});
      continue;
    }
    const Command cmd = controller.step(r, dt);
    log.push_back({t, cmd.h, v, cmd.v_lead, cmd.a_safe, cmd.a_target, cmd.a_mpc, cmd.a_cmd, to_string(cmd.mode),
                   cmd.signal_valid});
  }
  return log;
}

}  // namespace wavesmooth
