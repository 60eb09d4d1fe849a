#pragma once

// Longitudinal AV controller: a_cmd = min(a_safe, a_target, a_mpc), clamped to
// the actuator range, with leader-signal-loss handling.
//
// The closed-form laws are scalar-templated free functions so they can be
// evaluated at extended precision (finite-difference checks) as well as in
// the simulator. The stateful part lives in ControllerState / command_accel.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wavesmooth {

/// How the planning-mode target clip is evaluated.
///  kLiteral: max(max(v_down, alpha0 v_lead), min(alpha1 v_lead, v_ref))
///  kClamp:   min(max(v_down, alpha0 v_lead), min(alpha1 v_lead, v_ref))
enum class PlanningClip { kLiteral, kClamp };

/// Leader acceleration fed to the dv_safe/dt barrier term.
///  kWorstCase: the leader's maximal braking a_l_min (robust to sensing lag)
///  kEstimated: the filtered finite-difference estimate of a_lead
enum class BarrierLeadAccel { kWorstCase, kEstimated };

template <typename Scalar>
struct ControllerParamsT {
  Scalar a_min = Scalar(-6);    // ego maximal braking, m/s^2
  Scalar a_l_min = Scalar(-8);  // assumed leader maximal braking, m/s^2
  Scalar s0 = Scalar(4);        // minimum gap, m
  Scalar k = Scalar(1);         // proportional gain, 1/s
  Scalar c1 = Scalar(1);        // catching-up weight
  Scalar c2 = Scalar(1);        // gap-surplus scaling
  Scalar delta1 = Scalar(1.8);  // target time gap, s
  Scalar tau = Scalar(60);      // running-mean window, s
  Scalar alpha0 = Scalar(0.8);
  Scalar alpha1 = Scalar(1.2);
  Scalar v_ref = Scalar(31.3);  // 70 mph
  Scalar a_max = Scalar(1.5);
  Scalar k2 = Scalar(0.1);            // speed-up branch gain, s/m
  Scalar h_correction = Scalar(2);    // gap ramp during signal loss, m/s
  Scalar eps_v = Scalar(0.1);
  Scalar eps_a = Scalar(0.05);
  Scalar eps_h = Scalar(0.01);
  Scalar lead_accel_time_constant = Scalar(0.5);  // s
  Scalar plan_max_age = Scalar(60);               // s
  Scalar engage_min_speed = Scalar(8.94);         // 20 mph
  bool engagement_gate = false;
  PlanningClip planning_clip = PlanningClip::kLiteral;
  BarrierLeadAccel barrier_lead_accel = BarrierLeadAccel::kWorstCase;
};

using ControllerParams = ControllerParamsT<double>;

/// Throws std::invalid_argument naming the first violated bound.
void validate(const ControllerParams& params);

// ---------------------------------------------------------------------------
// Safety module

/// Highest speed from which the ego can still stop behind a leader that brakes
/// at a_l_min until standstill. Zero inside the unsafe zone.
template <typename Scalar>
Scalar safe_speed(Scalar h, Scalar v_lead, const ControllerParamsT<Scalar>& p) {
  using std::abs;
  using std::sqrt;
  const Scalar radicand = h - p.s0 + v_lead * v_lead / (Scalar(2) * abs(p.a_l_min));
  if (!(radicand > Scalar(0))) return Scalar(0);
  return sqrt(Scalar(2) * abs(p.a_min) * radicand);
}

/// Chain-rule time derivative of safe_speed with dh/dt = v_lead - v.
/// Zeroed once v_safe falls to eps_v (the 1/v_safe term is singular there).
template <typename Scalar>
Scalar safe_speed_rate(Scalar h, Scalar v, Scalar v_lead, Scalar a_lead,
                       const ControllerParamsT<Scalar>& p) {
  using std::abs;
  const Scalar vs = safe_speed(h, v_lead, p);
  if (vs <= p.eps_v) return Scalar(0);
  const Scalar v_rel = v_lead - v;
  return abs(p.a_min) * (v_rel + v_lead * a_lead / abs(p.a_l_min)) / vs;
}

template <typename Scalar>
Scalar safe_accel(Scalar v, Scalar v_safe, Scalar dv_safe_dt, const ControllerParamsT<Scalar>& p) {
  return -p.k * (v - v_safe) + dv_safe_dt;
}

// ---------------------------------------------------------------------------
// Target module

template <typename Scalar>
Scalar target_speed_local(Scalar v_bar_lead, Scalar h, Scalar v, const ControllerParamsT<Scalar>& p) {
  using std::max;
  const Scalar surplus = max(Scalar(0), p.c2 * (h - p.delta1 * v));
  const Scalar den = max(Scalar(1), v);
  return v_bar_lead + p.c1 * surplus / (den * den);
}

/// With upper_clip = false the alpha1 * v_lead bound is dropped (used while
/// the leader signal is lost).
template <typename Scalar>
Scalar target_speed_planning(Scalar v_down, Scalar v_lead, const ControllerParamsT<Scalar>& p,
                             bool upper_clip = true) {
  using std::max;
  using std::min;
  const Scalar lower = max(v_down, p.alpha0 * v_lead);
  const Scalar lead_bound = upper_clip ? p.alpha1 * v_lead : std::numeric_limits<Scalar>::infinity();
  const Scalar upper = min(lead_bound, p.v_ref);
  if (p.planning_clip == PlanningClip::kClamp) return min(lower, upper);
  return max(lower, upper);
}

template <typename Scalar>
Scalar target_accel(Scalar v, Scalar v_target, const ControllerParamsT<Scalar>& p) {
  return -p.k * (v - v_target);
}

// ---------------------------------------------------------------------------
// MPC module

/// Raised when mpc_min_brake is called outside the deceleration branch.
class BranchSelectionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Smallest constant deceleration that keeps the ego from reaching s0 should
/// the leader hold a_lead until it stops. Only defined for a_lead < -eps_a.
template <typename Scalar>
Scalar mpc_min_brake(Scalar h, Scalar v, Scalar v_lead, Scalar a_lead, const ControllerParamsT<Scalar>& p) {
  if (!(a_lead < -p.eps_a)) {
    throw BranchSelectionError("mpc_min_brake requires a decelerating leader (a_lead < -eps_a)");
  }
  // stationary-leader guard: the leader's remaining stopping distance is zero
  const Scalar lead_stop = v_lead < p.eps_v ? Scalar(0) : v_lead * v_lead / (Scalar(2) * -a_lead);
  const Scalar room = h - p.s0 + lead_stop;
  if (!(room > Scalar(0))) return -std::numeric_limits<Scalar>::infinity();
  return -(v * v / Scalar(2)) / room;
}

template <typename Scalar>
Scalar mpc_accel(Scalar h, Scalar v, Scalar v_lead, Scalar a_lead, const ControllerParamsT<Scalar>& p) {
  using std::min;
  if (h <= p.s0 + p.eps_h) return p.a_min;
  const Scalar p2 = v_lead - v;
  const Scalar dv = v - v_lead;
  const Scalar closing = a_lead - dv * dv / (Scalar(2) * (h - p.s0));
  if (a_lead < -p.eps_a) {
    const Scalar min_brake = mpc_min_brake(h, v, v_lead, a_lead, p);
    const Scalar proportional = v_lead < p.eps_v ? min_brake : a_lead * v / v_lead;
    const Scalar p1 = min_brake - proportional;
    if (p1 > Scalar(0)) return min_brake;
    if (p2 >= Scalar(0)) return proportional;
    return closing;
  }
  if (p2 < Scalar(0)) return closing;
  return min(p.a_max, a_lead * (Scalar(1) + p.k2 * (v_lead - v)));
}

// ---------------------------------------------------------------------------
// Controller memory

/// Leader-speed history over the trailing tau seconds, with the trapezoidal
/// integral maintained incrementally.
class LeadSpeedWindow {
 public:
  struct Sample {
    double t;
    double v;
  };

  /// Appends a sample (t must be strictly increasing) and drops samples
  /// older than window seconds.
  void push(double t, double v, double window);
  void clear();

  [[nodiscard]] bool empty() const { return samples_.empty(); }
  [[nodiscard]] std::size_t size() const { return samples_.size(); }
  [[nodiscard]] const std::deque<Sample>& samples() const { return samples_; }
  [[nodiscard]] double integral() const { return integral_; }
  [[nodiscard]] double span() const;

 private:
  std::deque<Sample> samples_;
  double integral_ = 0.0;
};

/// Raised when the running mean is requested before any leader sample.
class NotInitializedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mean leader speed over [t0, t] for t - t0 <= tau, else over [t - tau, t].
/// t must match the newest buffered sample.
double lead_speed_running_mean(const LeadSpeedWindow& buffer, double t, const ControllerParams& params);

/// First-order low-pass of the leader-speed finite difference.
class LeadAccelFilter {
 public:
  void update(double t, double v_lead, double time_constant);
  void reset();
  [[nodiscard]] std::size_t samples() const { return samples_; }
  [[nodiscard]] double value() const { return value_; }

 private:
  std::size_t samples_ = 0;
  double last_t_ = 0.0;
  double last_v_ = 0.0;
  double value_ = 0.0;
};

struct LeadAccelEstimate {
  double value = 0.0;
  bool cold = true;  // fewer than two samples seen
};

LeadAccelEstimate estimate_lead_accel(const LeadAccelFilter& filter);

struct SensorReading {
  double t = 0.0;
  double v = 0.0;
  double v_lead = 0.0;
  double h = 0.0;
  double v_rel = 0.0;
  double a = 0.0;  // measured ego acceleration, logged only
  bool valid = true;
  /// Ego arc-length position, used for position-binned plans. NaN if unknown.
  double position = std::numeric_limits<double>::quiet_NaN();
};

struct ControllerState {
  LeadSpeedWindow lead_speed_buffer;
  LeadAccelFilter lead_accel_filter;
  double held_v_lead = 0.0;
  double held_h = 0.0;
  double t_last_valid = -std::numeric_limits<double>::infinity();
  double a_lead_est = 0.0;
  bool has_valid = false;
  bool signal_lost = false;
  bool engaged = false;
};

/// Downstream speed recommendation, binned by position or by time.
struct PlanProfile {
  enum class Axis { kPosition, kTime };
  struct Bin {
    double lo;
    double hi;
    double v_down;
  };

  Axis axis = Axis::kPosition;
  std::vector<Bin> bins;
  double issued_at = 0.0;

  /// Throws std::invalid_argument on overlapping/inverted bins or v_down < 0.
  void validate() const;
  [[nodiscard]] std::optional<double> lookup(double position, double t) const;
};

/// Signal-loss hold: keeps v_lead, ramps the gap estimate by dt * h_correction.
void apply_signal_loss(ControllerState& state, double dt, const ControllerParams& params);

enum class TargetMode { kLocal, kPlanning, kFreeRoad };

const char* to_string(TargetMode mode);

/// One control step's output together with the module limits that formed it.
struct Command {
  double a_cmd = 0.0;
  double a_safe = 0.0;
  double a_target = 0.0;
  double a_mpc = 0.0;
  double v_target = 0.0;
  double h = 0.0;       // gap used (held estimate during signal loss)
  double v_lead = 0.0;  // leader speed used
  TargetMode mode = TargetMode::kLocal;
  bool signal_valid = true;
};

class NotEngagedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class NonFiniteInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Engages the controller unless the engagement gate is on and v is below
/// engage_min_speed. Returns the resulting engagement flag.
bool try_engage(ControllerState& state, double v, const ControllerParams& params);

/// Runs one control step and updates the controller memory.
Command command_accel(const SensorReading& reading, ControllerState& state, const PlanProfile* plan,
                      double dt, const ControllerParams& params);

/// Convenience owner of params + state for a single vehicle.
class Controller {
 public:
  explicit Controller(ControllerParams params, std::optional<PlanProfile> plan = std::nullopt);

  bool engage(double v) { return try_engage(state_, v, params_); }
  void disengage() { state_.engaged = false; }
  Command step(const SensorReading& reading, double dt);

  [[nodiscard]] const ControllerParams& params() const { return params_; }
  [[nodiscard]] const ControllerState& state() const { return state_; }

 private:
  ControllerParams params_;
  std::optional<PlanProfile> plan_;
  ControllerState state_;
};

}  // namespace wavesmooth
