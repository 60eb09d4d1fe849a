#include "wavesmooth/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include <fmt/format.h>

namespace wavesmooth {

// ---------------------------------------------------------------------------
// SpeedScript

SpeedScript::SpeedScript(std::vector<Knot> knots) : knots_(std::move(knots)) {
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!(knots_[i].t > knots_[i - 1].t)) throw std::invalid_argument("speed script knots must increase in time");
  }
  for (const Knot& k : knots_) {
    if (!(k.v >= 0.0)) throw std::invalid_argument("speed script speeds must be non-negative");
  }
}

double SpeedScript::speed(double t) const {
  if (knots_.empty()) return 0.0;
  if (t <= knots_.front().t) return knots_.front().v;
  if (t >= knots_.back().t) return knots_.back().v;
  auto hi = std::upper_bound(knots_.begin(), knots_.end(), t, [](double x, const Knot& k) { return x < k.t; });
  auto lo = hi - 1;
  const double w = (t - lo->t) / (hi->t - lo->t);
  return lo->v + w * (hi->v - lo->v);
}

double SpeedScript::accel(double t) const {
  if (knots_.size() < 2 || t < knots_.front().t || t >= knots_.back().t) return 0.0;
  auto hi = std::upper_bound(knots_.begin(), knots_.end(), t, [](double x, const Knot& k) { return x < k.t; });
  auto lo = hi - 1;
  return (hi->v - lo->v) / (hi->t - lo->t);
}

double SpeedScript::distance(double t) const {
  if (knots_.empty() || t <= 0.0) return 0.0;
  // piecewise-linear speed: integrate segment by segment from 0
  double total = 0.0;
  double from = 0.0;
  auto segment = [&](double a, double b) {
    if (b <= a) return;
    total += 0.5 * (speed(a) + speed(b)) * (b - a);
  };
  for (const Knot& k : knots_) {
    if (k.t <= from) continue;
    if (k.t >= t) break;
    segment(from, k.t);
    from = k.t;
  }
  segment(from, t);
  return total;
}

SpeedScript three_pulse_profile(double v_cruise, double v_low, double first_pulse, double gap) {
  std::vector<SpeedScript::Knot> knots{{0.0, v_cruise}};
  double t = first_pulse;
  for (int pulse = 0; pulse < 3; ++pulse) {
    knots.push_back({t, v_cruise});
    knots.push_back({t + 15.0, v_low});
    knots.push_back({t + 35.0, v_low});
    knots.push_back({t + 50.0, v_cruise});
    t += 50.0 + gap;
  }
  return SpeedScript(std::move(knots));
}

// ---------------------------------------------------------------------------
// Scenario

void Scenario::validate() const {
  if (vehicles.empty()) throw std::invalid_argument("scenario has no vehicles");
  if (!(duration > 0.0)) throw std::invalid_argument("scenario duration must be positive");
  if (topology == Topology::kRing && !(length > 0.0)) throw std::invalid_argument("ring length must be positive");
  std::size_t avs = 0;
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    const VehicleSpec& veh = vehicles[i];
    if (veh.kind == VehicleKind::kControlledAv) ++avs;
    if (veh.kind == VehicleKind::kScriptedLeader) {
      if (topology == Topology::kRing) throw std::invalid_argument("a ring cannot have a scripted leader");
      if (i + 1 != vehicles.size()) throw std::invalid_argument("the scripted leader must be the front vehicle");
      if (leader_profile.empty()) throw std::invalid_argument("scripted leader without a speed profile");
    }
    if (veh.kind == VehicleKind::kUnknown) throw std::invalid_argument("vehicle '" + veh.id + "' has no kind");
    if (!(veh.v0 >= 0.0)) throw std::invalid_argument("vehicle '" + veh.id + "' has negative speed");
    if (i > 0 && !(veh.y0 - vehicles[i - 1].y0 > veh.params.l_veh)) {
      throw std::invalid_argument("vehicles '" + vehicles[i - 1].id + "' and '" + veh.id + "' overlap or are unordered");
    }
  }
  if (avs > 1) throw std::invalid_argument("at most one controlled AV is supported");
  if (topology == Topology::kRing) {
    if (vehicles.front().y0 < 0.0 || vehicles.back().y0 >= length) {
      throw std::invalid_argument("ring positions must lie in [0, length)");
    }
    if (!(vehicles.front().y0 + length - vehicles.back().y0 > vehicles.front().params.l_veh)) {
      throw std::invalid_argument("ring wrap-around gap is not positive");
    }
  }
  for (const CutInEvent& e : cut_ins) {
    if (!(e.gap > 0.0)) throw std::invalid_argument("cut-in gap must be positive");
  }
}

// ---------------------------------------------------------------------------
// World

CollisionError::CollisionError(const std::string& follower_id, const std::string& leader_id, double time,
                               const std::string& detail)
    : std::runtime_error(
          fmt::format("collision: '{}' reached '{}' at t={:.3f} s{}", follower_id, leader_id, time, detail)),
      follower(follower_id),
      leader(leader_id),
      t(time) {}

World::World(const Scenario& scenario)
    : topology_(scenario.topology),
      length_(scenario.length),
      vehicles_(scenario.vehicles),
      leader_profile_(scenario.leader_profile) {
  const auto n = static_cast<Eigen::Index>(vehicles_.size());
  y_.resize(n);
  v_.resize(n);
  a_ = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y_(i) = vehicles_[i].y0;
    v_(i) = vehicles_[i].v0;
    if (vehicles_[i].kind == VehicleKind::kScriptedLeader) {
      leader_y0_ = vehicles_[i].y0;
      v_(i) = leader_profile_.speed(0.0);
    }
  }
}

std::optional<std::size_t> World::av_index() const {
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    if (vehicles_[i].kind == VehicleKind::kControlledAv) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> World::leader_of(std::size_t i) const {
  if (topology_ == Topology::kRing) {
    if (vehicles_.size() < 2) return std::nullopt;
    return (i + 1) % vehicles_.size();
  }
  if (i + 1 < vehicles_.size()) return i + 1;
  return std::nullopt;
}

double World::spacing(std::size_t i) const {
  const auto lead = leader_of(i);
  if (!lead) return std::numeric_limits<double>::infinity();
  const auto li = static_cast<Eigen::Index>(*lead);
  const auto ii = static_cast<Eigen::Index>(i);
  double s = y_(li) - y_(ii);
  if (topology_ == Topology::kRing && *lead == 0) s += length_;
  return s;
}

double World::gap(std::size_t i) const {
  const auto lead = leader_of(i);
  if (!lead) return std::numeric_limits<double>::infinity();
  return spacing(i) - vehicles_[*lead].params.l_veh;
}

double World::reported_position(std::size_t i) const {
  const double y = y_(static_cast<Eigen::Index>(i));
  if (topology_ == Topology::kRing) {
    const double wrapped = std::fmod(y, length_);
    return wrapped < 0.0 ? wrapped + length_ : wrapped;
  }
  return y;
}

Eigen::VectorXd World::derivative(double t, const Eigen::VectorXd& x, double av_accel) const {
  const auto n = static_cast<Eigen::Index>(vehicles_.size());
  Eigen::VectorXd y = x.head(n);
  Eigen::VectorXd v = x.tail(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (vehicles_[i].kind == VehicleKind::kScriptedLeader) {
      y(i) = leader_y0_ + leader_profile_.distance(t);
      v(i) = leader_profile_.speed(t);
    }
  }
  Eigen::VectorXd dx(2 * n);
  dx.head(n) = v;
  for (Eigen::Index i = 0; i < n; ++i) {
    const VehicleSpec& veh = vehicles_[i];
    double acc = 0.0;
    switch (veh.kind) {
      case VehicleKind::kScriptedLeader:
        acc = leader_profile_.accel(t);
        break;
      case VehicleKind::kControlledAv:
        acc = av_accel;
        break;
      default: {
        const auto lead = leader_of(static_cast<std::size_t>(i));
        if (!lead) {
          acc = free_road_accel(v(i), veh.params);
          break;
        }
        const auto li = static_cast<Eigen::Index>(*lead);
        double s = y(li) - y(i);
        if (topology_ == Topology::kRing && *lead == 0) s += length_;
        if (!(s - vehicles_[li].params.l_veh > 0.0)) {
          throw CollisionError(veh.id, vehicles_[li].id, t, " (during integration)");
        }
        acc = human_accel(s, v(i), v(li), veh.params);
      }
    }
    dx(n + i) = acc;
  }
  return dx;
}

void World::step(double dt, Integrator method, double av_accel) {
  const auto n = static_cast<Eigen::Index>(vehicles_.size());
  Eigen::VectorXd x(2 * n);
  x << y_, v_;
  const auto f = [this, av_accel](double t, const Eigen::VectorXd& state) { return derivative(t, state, av_accel); };
  a_ = f(t_, x).tail(n);
  const Eigen::VectorXd next = integrate_step(method, f, x, t_, dt);
  y_ = next.head(n);
  v_ = next.tail(n).cwiseMax(0.0);
  t_ += dt;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (vehicles_[i].kind == VehicleKind::kScriptedLeader) {
      y_(i) = leader_y0_ + leader_profile_.distance(t_);
      v_(i) = leader_profile_.speed(t_);
    }
  }
}

std::size_t World::insert_cut_in(const CutInEvent& event, const HumanDriverParams& params, const std::string& id) {
  const auto av = av_index();
  if (!av) throw std::invalid_argument("cut-in requires a controlled AV");
  if (!(event.gap > 0.0)) throw std::invalid_argument("cut-in gap must be positive");
  const auto ai = static_cast<Eigen::Index>(*av);
  const double y_new = y_(ai) + event.gap + params.l_veh;
  if (const auto lead = leader_of(*av)) {
    double y_lead = y_(static_cast<Eigen::Index>(*lead));
    if (topology_ == Topology::kRing && *lead == 0) y_lead += length_;
    if (!(y_lead - vehicles_[*lead].params.l_veh - y_new > 0.0)) {
      throw std::invalid_argument(fmt::format("cut-in at gap {:.2f} m does not fit before the AV's leader", event.gap));
    }
  }
  const std::size_t at = *av + 1;
  VehicleSpec spec;
  spec.id = id;
  spec.lane = vehicles_[*av].lane;
  spec.kind = VehicleKind::kHuman;
  spec.y0 = y_new;
  spec.v0 = event.speed;
  spec.params = params;
  vehicles_.insert(vehicles_.begin() + static_cast<std::ptrdiff_t>(at), spec);

  const auto n = static_cast<Eigen::Index>(vehicles_.size());
  const auto ins = static_cast<Eigen::Index>(at);
  auto grow = [&](Eigen::VectorXd& vec, double value) {
    Eigen::VectorXd out(n);
    out.head(ins) = vec.head(ins);
    out(ins) = value;
    out.tail(n - ins - 1) = vec.tail(n - ins - 1);
    vec = std::move(out);
  };
  grow(y_, y_new);
  grow(v_, event.speed);
  grow(a_, 0.0);
  return at;
}

void World::check_collisions() const {
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    const auto lead = leader_of(i);
    if (lead && !(gap(i) > 0.0)) throw CollisionError(vehicles_[i].id, vehicles_[*lead].id, t_, "");
  }
}

// ---------------------------------------------------------------------------

SensorReading sense(const World& world, std::size_t av_index, const SensorModel& sensor, std::mt19937_64& rng) {
  SensorReading r;
  const auto ai = static_cast<Eigen::Index>(av_index);
  r.t = world.time();
  r.v = world.speeds()(ai);
  r.a = world.accelerations()(ai);
  r.position = world.reported_position(av_index);

  bool dropped = false;
  if (sensor.loss_probability > 0.0) {
    std::bernoulli_distribution loss(sensor.loss_probability);
    dropped = loss(rng);
  }
  for (const DropoutInterval& d : sensor.dropouts) {
    if (r.t >= d.t_begin && r.t < d.t_end) dropped = true;
  }
  const auto lead = world.leader_of(av_index);
  const double h = world.gap(av_index);
  r.valid = lead.has_value() && h <= sensor.range_max && !dropped;
  if (r.valid) {
    r.h = h;
    r.v_lead = world.speeds()(static_cast<Eigen::Index>(*lead));
    r.v_rel = r.v_lead - r.v;
  } else {
    r.h = std::numeric_limits<double>::quiet_NaN();
    r.v_lead = std::numeric_limits<double>::quiet_NaN();
    r.v_rel = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

void integrate_step(World& world, double dt, Integrator method, double av_accel) {
  world.step(dt, method, av_accel);
  world.check_collisions();
}

std::size_t apply_cut_in(World& world, const CutInEvent& event, const HumanDriverParams& params,
                         const std::string& id) {
  return world.insert_cut_in(event, params, id);
}

// ---------------------------------------------------------------------------

namespace {

std::string collision_dump(const TrajectorySet& set, const std::vector<std::string>& ids, double t_end) {
  std::ostringstream out;
  out << "\nlast 5 s before the collision:";
  for (const std::string& id : ids) {
    const auto idx = set.find(id);
    if (!idx) continue;
    const Trajectory& tr = set.trajectories[*idx];
    out << "\n  " << id << ":";
    for (std::size_t k = 0; k < tr.size(); ++k) {
      if (tr.t[k] < t_end - 5.0) continue;
      if (k % 10 != 0 && k + 1 != tr.size()) continue;
      out << fmt::format(" (t={:.2f} y={:.2f} v={:.2f})", tr.t[k], tr.y[k], tr.v[k]);
    }
  }
  return out.str();
}

}  // namespace

SimulationResult run(const Scenario& scenario, const SimConfig& config, const ControllerParams& params,
                     const PlanProfile* plan) {
  scenario.validate();
  if (!(config.dt > 0.0)) throw std::invalid_argument("dt must be positive");

  World world(scenario);
  std::mt19937_64 rng(config.seed);

  std::optional<Controller> controller;
  if (const auto av = world.av_index()) {
    controller.emplace(params, plan ? std::optional<PlanProfile>(*plan) : std::nullopt);
    controller->engage(world.speeds()(static_cast<Eigen::Index>(*av)));
  }

  SimulationResult result;
  TrajectorySet& out = result.trajectories;
  out.dt = config.dt;
  std::vector<std::size_t> track;  // world index -> trajectory index
  for (std::size_t i = 0; i < world.size(); ++i) {
    const VehicleSpec& veh = world.vehicle(i);
    out.trajectories.push_back(Trajectory{veh.id, veh.lane, veh.kind, {}, {}, {}});
    track.push_back(i);
  }
  out.av_index = world.av_index();

  const auto record = [&](std::size_t i) {
    Trajectory& tr = out.trajectories[track[i]];
    tr.t.push_back(world.time());
    tr.y.push_back(world.reported_position(i));
    tr.v.push_back(world.speeds()(static_cast<Eigen::Index>(i)));
  };
  for (std::size_t i = 0; i < world.size(); ++i) record(i);

  std::vector<CutInEvent> events = scenario.cut_ins;
  std::stable_sort(events.begin(), events.end(), [](const CutInEvent& a, const CutInEvent& b) { return a.t < b.t; });
  std::size_t next_event = 0;

  const auto steps = static_cast<long long>(std::llround(scenario.duration / config.dt));
  for (long long k = 0; k < steps; ++k) {
    const double t = world.time();
    while (next_event < events.size() && events[next_event].t <= t + 1e-9) {
      const std::string id = fmt::format("cut{:02d}", next_event);
      const std::size_t at = apply_cut_in(world, events[next_event], scenario.cut_in_params, id);
      track.insert(track.begin() + static_cast<std::ptrdiff_t>(at), out.trajectories.size());
      out.trajectories.push_back(Trajectory{id, world.vehicle(at).lane, VehicleKind::kHuman, {}, {}, {}});
      record(at);
      ++next_event;
    }

    double av_accel = 0.0;
    if (const auto av = world.av_index()) {
      const auto ai = static_cast<Eigen::Index>(*av);
      const double v = world.speeds()(ai);
      if (!controller->state().engaged) controller->engage(v);
      if (controller->state().engaged) {
        const SensorReading reading = sense(world, *av, scenario.sensor, rng);
        const Command cmd = controller->step(reading, config.dt);
        av_accel = cmd.a_cmd;
        result.controller_log.push_back({t, cmd.h, v, cmd.v_lead, cmd.a_safe, cmd.a_target, cmd.a_mpc, cmd.a_cmd,
                                         to_string(cmd.mode), cmd.signal_valid});
      } else {
        const auto lead = world.leader_of(*av);
        const HumanDriverParams& hp = world.vehicle(*av).params;
        av_accel = lead ? human_accel(world.spacing(*av), v, world.speeds()(static_cast<Eigen::Index>(*lead)), hp)
                        : free_road_accel(v, hp);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        result.controller_log.push_back({t, world.gap(*av), v, nan, nan, nan, nan, av_accel, "manual", false});
      }
    }

    try {
      integrate_step(world, config.dt, config.integrator, av_accel);
    } catch (const CollisionError& e) {
      throw CollisionError(e.follower, e.leader, e.t, collision_dump(out, {e.follower, e.leader}, e.t));
    }
    for (std::size_t i = 0; i < world.size(); ++i) record(i);
  }
  return result;
}

std::vector<SimulationResult> run_batch(const std::vector<RunSpec>& runs, unsigned threads) {
  std::vector<SimulationResult> results(runs.size());
  std::vector<std::exception_ptr> errors(runs.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(runs.size(), 1)));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < runs.size(); i = next++) {
      try {
        const RunSpec& r = runs[i];
        results[i] = run(r.scenario, r.config, r.controller, r.plan ? &*r.plan : nullptr);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < threads; ++w) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

// ---------------------------------------------------------------------------
// Builders

Scenario make_ring_scenario(const RingSetup& setup) {
  if (setup.vehicles < 2) throw std::invalid_argument("a ring needs at least two vehicles");
  Scenario sc;
  sc.topology = Topology::kRing;
  sc.length = setup.length;
  sc.duration = setup.duration;
  sc.cut_in_params = setup.human;
  const double spacing = setup.length / static_cast<double>(setup.vehicles);
  const double v_eq = optimal_velocity(spacing, setup.human);
  for (std::size_t i = 0; i < setup.vehicles; ++i) {
    VehicleSpec veh;
    veh.id = fmt::format("v{:02d}", i);
    veh.kind = VehicleKind::kHuman;
    veh.y0 = static_cast<double>(i) * spacing;
    veh.v0 = v_eq;
    veh.params = setup.human;
    if (setup.av_index && *setup.av_index == i) {
      veh.id = "av";
      veh.kind = VehicleKind::kControlledAv;
    }
    if (i == setup.perturbed_index) veh.v0 *= 1.0 - setup.perturbation;
    sc.vehicles.push_back(std::move(veh));
  }
  return sc;
}

Scenario make_open_road_scenario(const OpenRoadSetup& setup) {
  Scenario sc;
  sc.topology = Topology::kOpen;
  sc.duration = setup.duration;
  sc.leader_profile = setup.leader_profile;
  sc.cut_in_params = setup.human;
  const double v0 = setup.leader_profile.speed(0.0);
  const double spacing = equilibrium_spacing(v0, setup.human);
  const std::size_t total = setup.humans_behind + 1 + setup.humans_ahead + 1;
  sc.length = spacing * static_cast<double>(total);
  for (std::size_t i = 0; i < total; ++i) {
    VehicleSpec veh;
    veh.kind = VehicleKind::kHuman;
    veh.y0 = static_cast<double>(i) * spacing;
    veh.v0 = v0;
    veh.params = setup.human;
    if (i < setup.humans_behind) {
      veh.id = fmt::format("b{:02d}", setup.humans_behind - i);
    } else if (i == setup.humans_behind) {
      veh.id = "av";
      if (setup.with_av) veh.kind = VehicleKind::kControlledAv;
    } else if (i + 1 < total) {
      veh.id = fmt::format("f{:02d}", i - setup.humans_behind);
    } else {
      veh.id = "lead";
      veh.kind = VehicleKind::kScriptedLeader;
    }
    sc.vehicles.push_back(std::move(veh));
  }
  return sc;
}

}  // namespace wavesmooth
