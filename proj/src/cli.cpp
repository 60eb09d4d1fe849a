#include "wavesmooth/cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "wavesmooth/analysis.hpp"
#include "wavesmooth/config.hpp"
#include "wavesmooth/csv.hpp"
#include "wavesmooth/replay.hpp"
#include "wavesmooth/simulator.hpp"
#include "wavesmooth/svg.hpp"

namespace wavesmooth {

namespace {

void emit(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& write) {
  if (path.empty() || path == "-") {
    write(fallback);
    return;
  }
  std::ofstream file(path);
  if (!file) throw ParseError(0, fmt::format("cannot write '{}'", path));
  write(file);
}

std::size_t resolve_av(const TrajectorySet& set, const std::string& id) {
  const auto idx = set.find(id);
  if (!idx) throw ParseError(0, fmt::format("no vehicle with id '{}' in the trajectory file", id));
  return *idx;
}

struct Common {
  std::string trajectories;
  std::string av = "av";
  std::string config;
  std::string output;
};

GridParams grid_from(const Common& c) { return c.config.empty() ? GridParams{} : read_config_file(c.config).grid; }

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Wave-smoothing controller: simulation and trajectory analysis", "wavesmooth"};
  app.require_subcommand(1);

  // simulate
  std::string sim_config;
  std::string sim_dir = ".";
  std::optional<std::uint64_t> sim_seed;
  auto* simulate = app.add_subcommand("simulate", "Run a scenario and write trajectories and the controller log");
  simulate->add_option("config", sim_config, "Scenario configuration file")->required();
  simulate->add_option("-o,--output-dir", sim_dir, "Directory for trajectories.csv and controller_log.csv");
  simulate->add_option("--seed", sim_seed, "Override the random seed");

  // wave-bounds
  Common wb;
  std::optional<double> wb_threshold;
  auto* wave = app.add_subcommand("wave-bounds", "Detect wave start and end frontiers around the AV");
  wave->add_option("trajectories", wb.trajectories, "Trajectory CSV")->required();
  wave->add_option("--av", wb.av, "Vehicle id of the AV");
  wave->add_option("--config", wb.config, "Configuration file supplying [grid] settings");
  wave->add_option("--threshold", wb_threshold, "Speed threshold (m/s)");
  wave->add_option("-o,--output", wb.output, "Output CSV (default stdout)");

  // variance
  Common var;
  double var_front = 1400.0;
  double var_behind = 400.0;
  std::string var_region = "all";
  bool var_per_box = false;
  auto* variance = app.add_subcommand("variance", "Pooled speed variance in front of and behind the AV");
  variance->add_option("trajectories", var.trajectories, "Trajectory CSV")->required();
  variance->add_option("--av", var.av, "Vehicle id of the AV");
  variance->add_option("--front", var_front, "Distance ahead of the AV (m)")->check(CLI::NonNegativeNumber);
  variance->add_option("--behind", var_behind, "Distance behind the AV (m)")->check(CLI::NonNegativeNumber);
  variance->add_option("--region", var_region, "Samples used: all or wave")->check(CLI::IsMember({"all", "wave"}));
  variance->add_option("--config", var.config, "Configuration file supplying [grid] settings");
  variance->add_flag("--per-box", var_per_box, "Also print the variance of each distance box");

  // variance-grid
  Common vg;
  std::string vg_format = "csv";
  auto* grid = app.add_subcommand("variance-grid", "Front/behind variance change table");
  grid->add_option("trajectories", vg.trajectories, "Trajectory CSV")->required();
  grid->add_option("--av", vg.av, "Vehicle id of the AV");
  grid->add_option("--format", vg_format, "csv or text")->check(CLI::IsMember({"csv", "text"}));
  grid->add_option("-o,--output", vg.output, "Output file (default stdout)");

  // diagram
  Common dg;
  std::string dg_color = "speed";
  std::optional<double> dg_t_min, dg_t_max, dg_y_min, dg_y_max;
  bool dg_no_av = false;
  auto* diagram = app.add_subcommand("diagram", "Time-space diagram as SVG");
  diagram->add_option("trajectories", dg.trajectories, "Trajectory CSV")->required();
  diagram->add_option("--av", dg.av, "Vehicle id of the AV, drawn on top");
  diagram->add_flag("--no-av", dg_no_av, "Do not highlight an AV");
  diagram->add_option("--color", dg_color, "speed or side")->check(CLI::IsMember({"speed", "side"}));
  diagram->add_option("--t-min", dg_t_min);
  diagram->add_option("--t-max", dg_t_max);
  diagram->add_option("--y-min", dg_y_min);
  diagram->add_option("--y-max", dg_y_max);
  diagram->add_option("-o,--output", dg.output, "Output SVG (default stdout)");

  // replay
  Common rp;
  auto* replay_cmd = app.add_subcommand("replay", "Run the controller offline on recorded trajectories");
  replay_cmd->add_option("trajectories", rp.trajectories, "Trajectory CSV")->required();
  replay_cmd->add_option("--av", rp.av, "Vehicle id whose leader is observed");
  replay_cmd->add_option("--config", rp.config, "Configuration file ([controller], [sensor], [human], [plan])");
  replay_cmd->add_option("-o,--output", rp.output, "Controller log CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) {
      RunConfig cfg = read_config_file(sim_config);
      if (sim_seed) cfg.sim.seed = *sim_seed;
      const SimulationResult result = run(cfg.scenario, cfg.sim, cfg.controller, cfg.plan ? &*cfg.plan : nullptr);
      std::filesystem::create_directories(sim_dir);
      const std::string traj_path = (std::filesystem::path(sim_dir) / "trajectories.csv").string();
      emit(traj_path, out, [&](std::ostream& o) { write_trajectory_csv(o, result.trajectories); });
      out << fmt::format("wrote {} ({} vehicles, {} rows)\n", traj_path, result.trajectories.trajectories.size(),
                         result.trajectories.sample_count());
      if (result.trajectories.av_index) {
        const std::string log_path = (std::filesystem::path(sim_dir) / "controller_log.csv").string();
        emit(log_path, out, [&](std::ostream& o) { write_controller_log_csv(o, result.controller_log); });
        out << fmt::format("wrote {} ({} rows)\n", log_path, result.controller_log.size());
      }
      out << fmt::format("pooled speed variance: {:.4f}\n", pooled_speed_variance(result.trajectories));
      return kExitOk;
    }

    if (wave->parsed()) {
      const TrajectorySet set = read_trajectory_file(wb.trajectories);
      const std::size_t av = resolve_av(set, wb.av);
      GridParams params = grid_from(wb);
      if (wb_threshold) params.speed_threshold = *wb_threshold;
      const BoxGrid boxes = assign_boxes(set, av, params);
      const WaveBoundary wbd = wave_boundaries(set, boxes, params.speed_threshold);
      emit(wb.output, out, [&](std::ostream& o) {
        o << "frontier,wave,side,box,t,y\n";
        for (const auto* list : {&wbd.start_frontier, &wbd.end_frontier}) {
          const char* name = list == &wbd.start_frontier ? "start" : "end";
          for (const FrontierPoint& p : *list) {
            o << fmt::format("{},{},{},{},{:.3f},{:.3f}\n", name, p.wave, to_string(p.side), p.box, p.t, p.y);
          }
        }
      });
      for (const auto& [side, box] : wbd.boxes_without_crossing) {
        err << fmt::format("warning: no threshold crossing in {} box {}\n", to_string(side), box);
      }
      return kExitOk;
    }

    if (variance->parsed()) {
      const TrajectorySet set = read_trajectory_file(var.trajectories);
      const std::size_t av = resolve_av(set, var.av);
      const RegionKind region = var_region == "wave" ? RegionKind::kWave : RegionKind::kAll;
      const VarianceReport r = variance_report(set, av, var_front, var_behind, region, grid_from(var));
      out << fmt::format("region: {}\n", var_region);
      out << fmt::format("front  {:>6g} m  {:>3} vehicles  variance {:.4f}\n", var_front, r.vehicles_front,
                         r.variance_front);
      out << fmt::format("behind {:>6g} m  {:>3} vehicles  variance {:.4f}\n", var_behind, r.vehicles_behind,
                         r.variance_behind);
      out << fmt::format("change: {}\n", format_percent(r.pct_change));
      if (var_per_box) {
        for (const DistanceVariance& d : r.per_distance) {
          out << fmt::format("{} box {}: {}\n", to_string(d.side), d.box,
                             d.variance ? fmt::format("{:.4f}", *d.variance) : std::string("n/a"));
        }
      }
      return kExitOk;
    }

    if (grid->parsed()) {
      const TrajectorySet set = read_trajectory_file(vg.trajectories);
      const std::size_t av = resolve_av(set, vg.av);
      const VarianceGrid g = variance_grid(set, av, table_front_axis(), table_behind_axis());
      emit(vg.output, out, [&](std::ostream& o) {
        if (vg_format == "csv") {
          write_variance_grid_csv(o, g);
        } else {
          write_variance_grid_text(o, g);
        }
      });
      return kExitOk;
    }

    if (diagram->parsed()) {
      const TrajectorySet set = read_trajectory_file(dg.trajectories);
      DiagramOptions opt;
      opt.color = dg_color == "side" ? DiagramColor::kSide : DiagramColor::kSpeed;
      if (!dg_no_av) {
        const auto idx = set.find(dg.av);
        if (!idx && diagram->count("--av") > 0) throw ParseError(0, fmt::format("no vehicle with id '{}'", dg.av));
        opt.av = idx;
      }
      opt.t_min = dg_t_min;
      opt.t_max = dg_t_max;
      opt.y_min = dg_y_min;
      opt.y_max = dg_y_max;
      emit(dg.output, out, [&](std::ostream& o) { o << time_space_svg(set, opt); });
      return kExitOk;
    }

    if (replay_cmd->parsed()) {
      const TrajectorySet set = read_trajectory_file(rp.trajectories);
      const std::size_t av = resolve_av(set, rp.av);
      ReplayOptions opt;
      if (!rp.config.empty()) {
        const RunConfig cfg = read_config_file(rp.config);
        opt.controller = cfg.controller;
        opt.sensor = cfg.scenario.sensor;
        opt.leader_length = cfg.human.l_veh;
        opt.plan = cfg.plan;
        opt.seed = cfg.sim.seed;
        if (cfg.scenario.topology == Topology::kRing) opt.ring_length = cfg.scenario.length;
      }
      const std::vector<ControllerLogRow> log = replay(set, av, opt);
      emit(rp.output, out, [&](std::ostream& o) { write_controller_log_csv(o, log); });
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace wavesmooth
