#pragma once

// Single-lane platoon simulator: human drivers, at most one controlled AV and
// an optional scripted leader, on a ring or an open road. All accelerations
// of a step are computed from the state at the start of the step.

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wavesmooth/controller.hpp"
#include "wavesmooth/integrator.hpp"
#include "wavesmooth/traffic_model.hpp"
#include "wavesmooth/trajectory.hpp"

namespace wavesmooth {

enum class Topology { kRing, kOpen };

/// Piecewise-linear speed script v(t) through (t, v) knots, held constant
/// outside the knot range.
class SpeedScript {
 public:
  struct Knot {
    double t;
    double v;
  };

  SpeedScript() = default;
  explicit SpeedScript(std::vector<Knot> knots);

  [[nodiscard]] bool empty() const { return knots_.empty(); }
  [[nodiscard]] const std::vector<Knot>& knots() const { return knots_; }
  [[nodiscard]] double speed(double t) const;
  [[nodiscard]] double accel(double t) const;
  /// Exact distance travelled over [0, t] (t >= 0).
  [[nodiscard]] double distance(double t) const;

 private:
  std::vector<Knot> knots_;
};

/// Cruise at v_cruise, then three times: brake to v_low over 15 s, hold 20 s,
/// recover over 15 s, cruise for `gap` seconds.
SpeedScript three_pulse_profile(double v_cruise = 28.0, double v_low = 3.0, double first_pulse = 60.0,
                                double gap = 90.0);

struct VehicleSpec {
  std::string id;
  int lane = 1;
  VehicleKind kind = VehicleKind::kHuman;
  double y0 = 0.0;
  double v0 = 0.0;
  HumanDriverParams params;
};

struct CutInEvent {
  double t = 0.0;
  double gap = 0.0;    // bumper gap ahead of the AV, m
  double speed = 0.0;  // m/s
};

struct DropoutInterval {
  double t_begin = 0.0;
  double t_end = 0.0;
};

struct SensorModel {
  double range_max = std::numeric_limits<double>::infinity();
  std::vector<DropoutInterval> dropouts;
  double loss_probability = 0.0;  // per-step Bernoulli loss
};

struct Scenario {
  Topology topology = Topology::kRing;
  double length = 260.0;
  std::vector<VehicleSpec> vehicles;  // ordered rear to front
  SpeedScript leader_profile;
  std::vector<CutInEvent> cut_ins;
  HumanDriverParams cut_in_params;
  SensorModel sensor;
  double duration = 300.0;

  /// Throws std::invalid_argument on ordering, overlap or AV-count problems.
  void validate() const;
};

struct SimConfig {
  double dt = 0.05;
  Integrator integrator = Integrator::kEuler;
  std::uint64_t seed = 0;
};

class CollisionError : public std::runtime_error {
 public:
  CollisionError(const std::string& follower, const std::string& leader, double t, const std::string& detail);

  const std::string follower;
  const std::string leader;
  const double t;
};

/// Mutable simulation state. Positions are kept unwrapped on the ring.
class World {
 public:
  explicit World(const Scenario& scenario);

  [[nodiscard]] Topology topology() const { return topology_; }
  [[nodiscard]] double length() const { return length_; }
  [[nodiscard]] double time() const { return t_; }
  [[nodiscard]] std::size_t size() const { return vehicles_.size(); }
  [[nodiscard]] const VehicleSpec& vehicle(std::size_t i) const { return vehicles_[i]; }
  [[nodiscard]] const Eigen::VectorXd& positions() const { return y_; }
  [[nodiscard]] const Eigen::VectorXd& speeds() const { return v_; }
  [[nodiscard]] const Eigen::VectorXd& accelerations() const { return a_; }
  [[nodiscard]] std::optional<std::size_t> av_index() const;

  [[nodiscard]] std::optional<std::size_t> leader_of(std::size_t i) const;
  /// Position difference to the leader (+inf without a leader).
  [[nodiscard]] double spacing(std::size_t i) const;
  /// Bumper-to-bumper gap: spacing minus the leader's length.
  [[nodiscard]] double gap(std::size_t i) const;
  /// Position as reported: modulo length on the ring.
  [[nodiscard]] double reported_position(std::size_t i) const;

  /// Advances by dt. The AV (if any) holds av_accel over the step; the
  /// scripted leader follows its script exactly.
  void step(double dt, Integrator method, double av_accel);

  /// Inserts a human vehicle event.gap metres ahead of the AV.
  /// Returns the new vehicle's index.
  std::size_t insert_cut_in(const CutInEvent& event, const HumanDriverParams& params, const std::string& id);

  /// Throws CollisionError if any bumper gap is <= 0.
  void check_collisions() const;

 private:
  Eigen::VectorXd derivative(double t, const Eigen::VectorXd& x, double av_accel) const;

  Topology topology_;
  double length_;
  double t_ = 0.0;
  std::vector<VehicleSpec> vehicles_;
  SpeedScript leader_profile_;
  double leader_y0_ = 0.0;
  Eigen::VectorXd y_;
  Eigen::VectorXd v_;
  Eigen::VectorXd a_;
};

/// Leader measurement seen by the AV's front sensor at the world's time.
SensorReading sense(const World& world, std::size_t av_index, const SensorModel& sensor, std::mt19937_64& rng);

/// Advances the world by one step; the AV (if any) holds av_accel.
void integrate_step(World& world, double dt, Integrator method, double av_accel = 0.0);

/// Inserts the event's vehicle ahead of the AV. Throws std::invalid_argument
/// when the inserted gap is non-positive or there is no room before the
/// AV's current leader.
std::size_t apply_cut_in(World& world, const CutInEvent& event, const HumanDriverParams& params,
                         const std::string& id);

struct ControllerLogRow {
  double t;
  double h;
  double v;
  double v_lead;
  double a_safe;
  double a_target;
  double a_mpc;
  double a_cmd;
  std::string mode;
  bool signal_valid;
};

struct SimulationResult {
  TrajectorySet trajectories;
  std::vector<ControllerLogRow> controller_log;
};

SimulationResult run(const Scenario& scenario, const SimConfig& config, const ControllerParams& controller,
                     const PlanProfile* plan = nullptr);

struct RunSpec {
  Scenario scenario;
  SimConfig config;
  ControllerParams controller;
  std::optional<PlanProfile> plan;
};

/// Runs independent simulations on up to `threads` workers (0 = hardware
/// concurrency). Results are in input order; the first error is rethrown.
std::vector<SimulationResult> run_batch(const std::vector<RunSpec>& runs, unsigned threads = 0);

// ---------------------------------------------------------------------------
// Scenario builders

struct RingSetup {
  std::size_t vehicles = 22;
  double length = 260.0;
  std::optional<std::size_t> av_index;  // vehicle replaced by the AV
  std::size_t perturbed_index = 11;
  double perturbation = 0.01;  // relative speed reduction
  double duration = 300.0;
  HumanDriverParams human = unstable_ring_preset();
};

Scenario make_ring_scenario(const RingSetup& setup);

struct OpenRoadSetup {
  std::size_t humans_ahead = 16;   // between the AV and the scripted leader
  std::size_t humans_behind = 24;
  bool with_av = true;  // false: the AV slot is a human vehicle
  SpeedScript leader_profile = three_pulse_profile();
  double duration = 600.0;
  HumanDriverParams human = open_road_preset();
};

Scenario make_open_road_scenario(const OpenRoadSetup& setup);

}  // namespace wavesmooth
