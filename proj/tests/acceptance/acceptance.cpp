// Acceptance suite: one line per criterion, non-zero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "oracle/reference_controller.hpp"
#include "support/fixtures.hpp"
#include "support/synthetic.hpp"
#include "wavesmooth/analysis.hpp"
#include "wavesmooth/controller.hpp"
#include "wavesmooth/csv.hpp"
#include "wavesmooth/simulator.hpp"

using namespace wavesmooth;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // runtime limit, <= 0 for none
  std::function<Outcome()> body;
};

bool close_rel(double got, double want, double tol) {
  if (got == want) return true;  // covers matching infinities
  if (!std::isfinite(got) || !std::isfinite(want)) return false;
  return std::fabs(got - want) <= tol * std::max({1.0, std::fabs(got), std::fabs(want)});
}

double window_variance(const TrajectorySet& set, double t0, double t1) {
  return pooled_speed_variance(set, [&](std::size_t i, std::size_t k) {
    const double t = set.trajectories[i].t[k];
    return t >= t0 - 1e-9 && t <= t1 + 1e-9;
  });
}

// ---------------------------------------------------------------------------

Outcome formula_oracle() {
  const ControllerParams p;
  const oracle::RefParams r;
  std::mt19937_64 rng(20240101);
  std::uniform_real_distribution<double> hd(0.0, 150.0);
  std::uniform_real_distribution<double> vd(0.0, 35.0);
  std::uniform_real_distribution<double> ad(-8.0, 3.0);
  std::uniform_real_distribution<double> brake(-8.0, -0.06);

  struct Op {
    const char* name;
    std::function<std::pair<double, double>()> eval;
    int mismatches = 0;
  };
  std::vector<Op> ops = {
      {"safe_speed", [&] {
         const double h = hd(rng), vl = vd(rng);
         return std::pair{safe_speed(h, vl, p), oracle::v_safe(h, vl, r)};
       }},
      {"safe_speed_rate", [&] {
         const double h = hd(rng), v = vd(rng), vl = vd(rng), al = ad(rng);
         return std::pair{safe_speed_rate(h, v, vl, al, p), oracle::v_safe_dot(h, v, vl, al, r)};
       }},
      {"safe_accel", [&] {
         const double v = vd(rng), vs = vd(rng), rate = ad(rng);
         return std::pair{safe_accel(v, vs, rate, p), oracle::a_safe(v, vs, rate, r)};
       }},
      {"target_speed_local", [&] {
         const double vbar = vd(rng), h = hd(rng), v = vd(rng);
         return std::pair{target_speed_local(vbar, h, v, p), oracle::v_target_local(vbar, h, v, r)};
       }},
      {"target_speed_planning", [&] {
         const double down = vd(rng), vl = vd(rng);
         return std::pair{target_speed_planning(down, vl, p), oracle::v_target_planning(down, vl, r)};
       }},
      {"target_accel", [&] {
         const double v = vd(rng), vt = vd(rng);
         return std::pair{target_accel(v, vt, p), oracle::a_target(v, vt, r)};
       }},
      {"mpc_min_brake", [&] {
         const double h = hd(rng) + p.s0 + 0.1, v = vd(rng), vl = vd(rng), al = brake(rng);
         return std::pair{mpc_min_brake(h, v, vl, al, p), oracle::a_min_brake(h, v, vl, al, r)};
       }},
      {"mpc_accel", [&] {
         const double h = hd(rng), v = vd(rng), vl = vd(rng), al = ad(rng);
         return std::pair{mpc_accel(h, v, vl, al, p), oracle::a_mpc(h, v, vl, al, r)};
       }},
      {"command_accel", [&] {
         SensorReading s;
         s.h = hd(rng);
         s.v = vd(rng);
         s.v_lead = vd(rng);
         s.v_rel = s.v_lead - s.v;
         ControllerState state;
         try_engage(state, s.v, p);
         const Command c = command_accel(s, state, nullptr, 0.05, p);
         // first valid reading: v_bar_lead = v_lead, barrier at the leader's worst-case braking
         const double vs = oracle::v_safe(s.h, s.v_lead, r);
         const double as = oracle::a_safe(s.v, vs, oracle::v_safe_dot(s.h, s.v, s.v_lead, r.a_l_min, r), r);
         const double at = oracle::a_target(s.v, oracle::v_target_local(s.v_lead, s.h, s.v, r), r);
         const double am = oracle::a_mpc(s.h, s.v, s.v_lead, 0.0, r);
         const double want = oracle::a_cmd(as, at, am, r);
         const bool parts = close_rel(c.a_safe, as, 1e-9) && close_rel(c.a_target, at, 1e-9);
         return std::pair{parts ? c.a_cmd : std::numeric_limits<double>::quiet_NaN(), want};
       }},
  };

  Outcome out;
  std::string failures;
  for (Op& op : ops) {
    for (int i = 0; i < 1000; ++i) {
      const auto [got, want] = op.eval();
      if (!close_rel(got, want, 1e-9)) ++op.mismatches;
    }
    if (op.mismatches > 0) {
      out.pass = false;
      failures += fmt::format(" {}:{}", op.name, op.mismatches);
    }
  }
  out.detail = fmt::format("{} ops x 1000 inputs, rel tol 1e-9, mismatches:{}", ops.size(),
                           failures.empty() ? " none" : failures);
  return out;
}

// ---------------------------------------------------------------------------

Outcome safety_barrier() {
  const ControllerParams p;
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> hd(p.s0 + 0.05, 120.0);
  std::uniform_real_distribution<double> vd(0.0, 35.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t n = 10000;
  const double leader_length = HumanDriverParams{}.l_veh;

  std::vector<RunSpec> runs;
  runs.reserve(n);
  std::size_t on_boundary = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double h = hd(rng);
    const double vl = vd(rng);
    const double vs = safe_speed(h, vl, p);
    // a quarter of the runs start exactly on the barrier v = v_safe
    double v = std::min(35.0, vs);
    if (unit(rng) >= 0.25) {
      v *= unit(rng);
    } else if (v == vs) {
      ++on_boundary;
    }
    RunSpec spec;
    Scenario& sc = spec.scenario;
    sc.topology = Topology::kOpen;
    sc.length = 1000.0;
    VehicleSpec av;
    av.id = "av";
    av.kind = VehicleKind::kControlledAv;
    av.v0 = v;
    VehicleSpec lead;
    lead.id = "lead";
    lead.kind = VehicleKind::kScriptedLeader;
    lead.y0 = h + leader_length;
    lead.v0 = vl;
    sc.vehicles = {av, lead};
    sc.leader_profile = vl > 0.0 ? SpeedScript({{0.0, vl}, {vl / std::fabs(p.a_l_min), 0.0}}) : SpeedScript({{0.0, 0.0}});
    sc.duration = vl / std::fabs(p.a_l_min) + 35.0 / std::fabs(p.a_min) + 2.0;
    spec.config.dt = 0.05;
    spec.config.integrator = Integrator::kRk4;
    spec.controller = p;
    runs.push_back(std::move(spec));
  }

  Outcome out;
  std::vector<SimulationResult> results;
  try {
    results = run_batch(runs);
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail = fmt::format("simulation failed: {}", e.what());
    return out;
  }
  double worst = std::numeric_limits<double>::infinity();
  std::size_t violations = 0;
  for (const SimulationResult& res : results) {
    const Trajectory& a = res.trajectories.trajectories[*res.trajectories.find("av")];
    const Trajectory& l = res.trajectories.trajectories[*res.trajectories.find("lead")];
    double run_min = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < a.size(); ++k) run_min = std::min(run_min, l.y[k] - a.y[k] - leader_length);
    worst = std::min(worst, run_min);
    if (run_min < p.s0 - 0.01) ++violations;
  }
  out.pass = violations == 0;
  out.detail = fmt::format("{} runs ({} start on v = v_safe), min gap {:.4f} m (need >= {:.2f}), violations {}", n,
                           on_boundary, worst, p.s0 - 0.01, violations);
  return out;
}

// ---------------------------------------------------------------------------

Outcome mpc_continuity() {
  const ControllerParams p;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> hd(p.s0 + 1.0, 150.0);
  std::uniform_real_distribution<double> vd(0.5, 35.0);
  std::uniform_real_distribution<double> dec(-8.0, -p.eps_a - 0.01);
  std::uniform_real_distribution<double> acc(p.eps_a + 0.01, p.a_max);
  const double approach = 1e-8;

  const auto p1 = [&](double h, double v, double vl, double al) {
    return mpc_min_brake(h, v, vl, al, p) - al * v / vl;
  };

  double worst_p1 = 0.0;
  double worst_p2 = 0.0;
  std::size_t p1_crossings = 0;
  std::size_t p2_crossings = 0;

  // P1 = 0 along a_lead, with (h, v, v_lead) fixed. P1 only vanishes when v > v_lead,
  // where the boundary separates the minimal-brake and closing branches.
  for (int i = 0; i < 2000; ++i) {
    const double h = hd(rng);
    const double vl = vd(rng);
    const double v = vd(rng);
    const int grid = 200;
    double prev_al = -8.0;
    double prev = p1(h, v, vl, prev_al);
    for (int g = 1; g <= grid; ++g) {
      const double al = -8.0 + (8.0 - p.eps_a - 1e-6) * g / grid;
      const double cur = p1(h, v, vl, al);
      if ((prev > 0.0) != (cur > 0.0)) {
        double lo = prev_al;
        double hi = al;
        for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
          const double mid = 0.5 * (lo + hi);
          ((p1(h, v, vl, mid) > 0.0) == (prev > 0.0) ? lo : hi) = mid;
        }
        const double root = 0.5 * (lo + hi);
        const double jump = std::fabs(mpc_accel(h, v, vl, root + approach, p) - mpc_accel(h, v, vl, root - approach, p));
        worst_p1 = std::max(worst_p1, jump);
        ++p1_crossings;
      }
      prev_al = al;
      prev = cur;
    }
  }

  // P2 = 0 along v, with (h, v_lead, a_lead) fixed, on both the braking and the speed-up side
  for (int i = 0; i < 4000; ++i) {
    const double h = hd(rng);
    const double vl = vd(rng);
    const double al = i % 2 == 0 ? acc(rng) : dec(rng);
    if (al < -p.eps_a && !(p1(h, vl + approach, vl, al) <= 0.0 && p1(h, vl - approach, vl, al) <= 0.0)) continue;
    const double jump = std::fabs(mpc_accel(h, vl + approach, vl, al, p) - mpc_accel(h, vl - approach, vl, al, p));
    worst_p2 = std::max(worst_p2, jump);
    ++p2_crossings;
  }

  Outcome out;
  out.pass = p1_crossings > 0 && p2_crossings > 0 && worst_p1 <= 1e-6 && worst_p2 <= 1e-6;
  out.detail = fmt::format("P1=0: {} crossings, max jump {:.2e}; P2=0: {} crossings, max jump {:.2e} (limit 1e-6)",
                           p1_crossings, worst_p1, p2_crossings, worst_p2);
  return out;
}

// ---------------------------------------------------------------------------

RingSetup ring_setup(std::optional<std::size_t> av, double duration) {
  RingSetup s;
  s.av_index = av;
  s.duration = duration;
  return s;
}

Outcome wave_generation() {
  const SimulationResult res = run(make_ring_scenario(ring_setup(std::nullopt, 300.0)), SimConfig{}, ControllerParams{});
  const double window = 60.0;
  double first = -1.0;
  double peak = 0.0;
  for (double t = window; t <= 300.0 + 1e-9; t += 10.0) {
    const double var = window_variance(res.trajectories, t - window, t);
    peak = std::max(peak, var);
    if (first < 0.0 && var >= 4.0) first = t;
  }
  Outcome out;
  out.pass = first >= 0.0;
  out.detail = first >= 0.0
                   ? fmt::format("trailing 60 s variance reaches 4 m^2/s^2 at t = {:g} s (peak {:.2f})", first, peak)
                   : fmt::format("variance never reached 4 m^2/s^2 (peak {:.2f})", peak);
  return out;
}

Outcome smoothing_analog() {
  std::vector<RunSpec> runs(2);
  runs[0].scenario = make_ring_scenario(ring_setup(std::nullopt, 600.0));
  runs[1].scenario = make_ring_scenario(ring_setup(std::size_t{0}, 600.0));
  const std::vector<SimulationResult> res = run_batch(runs);
  const double human = window_variance(res[0].trajectories, 300.0, 600.0);
  const double with_av = window_variance(res[1].trajectories, 300.0, 600.0);
  const double reduction = 100.0 * (human - with_av) / human;
  Outcome out;
  out.pass = reduction >= 40.0;
  out.detail = fmt::format("variance over [300, 600] s: human ring {:.2f}, with AV {:.2f}, reduction {:.1f}% (need >= 40%)",
                           human, with_av, reduction);
  return out;
}

// ---------------------------------------------------------------------------

Outcome open_road_analog() {
  std::vector<RunSpec> runs(2);
  OpenRoadSetup setup;
  runs[0].scenario = make_open_road_scenario(setup);
  setup.with_av = false;
  runs[1].scenario = make_open_road_scenario(setup);
  const std::vector<SimulationResult> res = run_batch(runs);

  const auto behind_variance = [](const TrajectorySet& set) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < set.trajectories.size(); ++i) {
      if (set.trajectories[i].id.rfind('b', 0) == 0) members.push_back(i);
    }
    return pooled_speed_variance(set, members);
  };
  const double with_av = behind_variance(res[0].trajectories);
  const double human = behind_variance(res[1].trajectories);
  const double reduction = 100.0 * (human - with_av) / human;

  const TrajectorySet& set = res[0].trajectories;
  const VarianceGrid grid = variance_grid(set, *set.find("av"), table_front_axis(), table_behind_axis());
  std::size_t monotone_breaks = 0;
  std::size_t cells = 0;
  for (Eigen::Index c = 0; c < grid.percent.cols(); ++c) {
    std::optional<long> prev;
    for (Eigen::Index r = 0; r < grid.percent.rows(); ++r) {
      const double pct = grid.percent(r, c);
      if (std::isnan(pct)) continue;
      ++cells;
      const long magnitude = -std::lround(pct);
      if (prev && magnitude > *prev) ++monotone_breaks;
      prev = magnitude;
    }
  }
  std::ostringstream col;
  for (Eigen::Index r = 0; r < grid.percent.rows(); ++r) {
    col << (r ? " " : "") << format_percent(std::isnan(grid.percent(r, grid.percent.cols() - 1))
                                                ? std::nullopt
                                                : std::optional<double>(grid.percent(r, grid.percent.cols() - 1)));
  }
  Outcome out;
  out.pass = reduction >= 30.0 && monotone_breaks == 0 && cells > 0;
  out.detail = fmt::format(
      "behind-AV variance {:.2f} vs {:.2f} all-human, reduction {:.1f}% (need >= 30%); grid: {} cells, {} "
      "increases of reduction magnitude with distance (200m column: {})",
      with_av, human, reduction, cells, monotone_breaks, col.str());
  return out;
}

// ---------------------------------------------------------------------------

Outcome published_values() {
  const std::string a = format_percent(percent_change(19.6, 9.4));
  const std::string b = format_percent(percent_change(1.73, 1.08));
  const VarianceGrid grid = fixtures::table1_grid();
  std::ostringstream csv;
  write_variance_grid_csv(csv, grid);
  std::ostringstream text;
  write_variance_grid_text(text, grid);
  const bool csv_ok = csv.str() == fixtures::slurp(fixtures::path("tests/fixtures/table1.csv"));
  const bool text_ok = text.str() == fixtures::slurp(fixtures::path("tests/fixtures/table1.txt"));
  Outcome out;
  out.pass = a == "-52%" && b == "-38%" && csv_ok && text_ok;
  out.detail = fmt::format("percent_change(19.6, 9.4) = {}, percent_change(1.73, 1.08) = {}, table CSV {}, table text {}",
                           a, b, csv_ok ? "byte-exact" : "DIFFERS", text_ok ? "byte-exact" : "DIFFERS");
  return out;
}

// ---------------------------------------------------------------------------

Outcome frontier_recovery() {
  const synthetic::BandWave wave;
  const TrajectorySet set = wave.build();
  const GridParams gp;
  const BoxGrid boxes = assign_boxes(set, wave.av, gp);
  const WaveBoundary w = wave_boundaries(set, boxes, 4.0);

  // distance from a frontier point to the true edge, in units of the sub-box
  const auto offset = [&](const FrontierPoint& pt, bool start) {
    double best = std::numeric_limits<double>::infinity();
    for (double dt = -gp.t_bin; dt <= gp.t_bin + 1e-9; dt += 0.01) {
      const double edge = start ? wave.lower(pt.t + dt) : wave.upper(pt.t + dt);
      if (std::fabs(pt.y - edge) <= gp.box_width) best = std::min(best, std::fabs(dt) / gp.t_bin);
    }
    return best;
  };
  std::size_t misses = 0;
  for (const FrontierPoint& pt : w.start_frontier) misses += offset(pt, true) > 1.0 ? 1 : 0;
  for (const FrontierPoint& pt : w.end_frontier) misses += offset(pt, false) > 1.0 ? 1 : 0;
  Outcome out;
  out.pass = !w.start_frontier.empty() && !w.end_frontier.empty() && misses == 0;
  out.detail = fmt::format("{} start and {} end frontier points, {} outside one sub-box ({:g} m, {:g} s) of the true edge",
                           w.start_frontier.size(), w.end_frontier.size(), misses, gp.box_width, gp.t_bin);
  return out;
}

// ---------------------------------------------------------------------------

Outcome signal_loss() {
  OpenRoadSetup setup;
  setup.humans_ahead = 4;
  setup.humans_behind = 8;
  setup.duration = 300.0;
  Scenario sc = make_open_road_scenario(setup);
  sc.sensor.dropouts = {{100.0, 110.0}};
  const SimConfig cfg;
  const ControllerParams p;
  Outcome out;
  SimulationResult res;
  try {
    res = run(sc, cfg, p);
  } catch (const std::exception& e) {
    out.pass = false;
    out.detail = fmt::format("run aborted: {}", e.what());
    return out;
  }

  std::size_t non_finite = 0;
  std::size_t lost_rows = 0;
  double worst_ramp = 0.0;
  const double expected = p.h_correction * cfg.dt;
  const auto& log = res.controller_log;
  for (std::size_t k = 0; k < log.size(); ++k) {
    if (!std::isfinite(log[k].a_cmd)) ++non_finite;
    if (log[k].signal_valid || k == 0) continue;
    ++lost_rows;
    worst_ramp = std::max(worst_ramp, std::fabs((log[k].h - log[k - 1].h) - expected));
  }

  const TrajectorySet& set = res.trajectories;
  const Trajectory& av = set.trajectories[*set.find("av")];
  const Trajectory& ahead = set.trajectories[*set.find("f01")];
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < av.size(); ++k) min_gap = std::min(min_gap, ahead.y[k] - av.y[k] - setup.human.l_veh);

  const std::size_t expected_rows = static_cast<std::size_t>(std::lround(10.0 / cfg.dt));
  out.pass = non_finite == 0 && lost_rows == expected_rows && worst_ramp <= 1e-9 && min_gap >= p.s0 - 0.01;
  out.detail = fmt::format(
      "{} lost steps (expected {}), gap estimate ramp error {:.1e} m/step against {:g} m/step, {} non-finite commands, "
      "min gap {:.3f} m (need >= {:.2f})",
      lost_rows, expected_rows, worst_ramp, expected, non_finite, min_gap, p.s0 - 0.01);
  return out;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "formula oracle", 5.0, formula_oracle},
      {2, "safety barrier", 60.0, safety_barrier},
      {3, "MPC continuity", 1.0, mpc_continuity},
      {4, "ring wave generation", 10.0, wave_generation},
      {5, "ring smoothing", 10.0, smoothing_analog},
      {6, "open-road smoothing", 30.0, open_road_analog},
      {7, "published values", 0.0, published_values},
      {8, "frontier recovery", 5.0, frontier_recovery},
      {9, "signal-loss robustness", 0.0, signal_loss},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.body();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = fmt::format("exception: {}", e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.budget_s <= 0.0 || seconds < c.budget_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failed;
    const std::string timing = c.budget_s > 0.0 ? fmt::format("{:.2f} s < {:g} s{}", seconds, c.budget_s, in_time ? "" : " EXCEEDED")
                                                : fmt::format("{:.2f} s", seconds);
    std::printf("%s criterion %d (%s): %s [%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), timing.c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
