#include "wavesmooth/controller.hpp"

#include <cmath>
#include <string>

namespace wavesmooth {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("invalid controller parameter: ") + what);
}

void require_finite(double value, const char* field) {
  if (!std::isfinite(value)) {
    throw NonFiniteInputError(std::string("non-finite sensor field '") + field + "'");
  }
}

double time_tolerance(double t) { return 1e-9 * std::max(1.0, std::fabs(t)); }

}  // namespace

void validate(const ControllerParams& p) {
  require(p.a_min < 0.0, "a_min < 0");
  require(p.a_l_min < 0.0, "a_l_min < 0");
  require(p.s0 > 0.0, "s0 > 0");
  require(p.k > 0.0, "k > 0");
  require(p.c1 >= 0.0, "c1 >= 0");
  require(p.c2 >= 0.0, "c2 >= 0");
  require(p.delta1 > 0.0, "delta1 > 0");
  require(p.tau > 0.0, "tau > 0");
  require(p.alpha0 > 0.0 && p.alpha0 < 1.0, "0 < alpha0 < 1");
  require(p.alpha1 > 1.0, "alpha1 > 1");
  require(p.a_max > 0.0, "a_max > 0");
  require(p.h_correction > 0.0, "h_correction > 0");
  require(p.eps_v > 0.0 && p.eps_a > 0.0 && p.eps_h > 0.0, "eps guards > 0");
  require(p.lead_accel_time_constant > 0.0, "lead_accel_time_constant > 0");
  require(p.plan_max_age > 0.0, "plan_max_age > 0");
}

// ---------------------------------------------------------------------------

void LeadSpeedWindow::push(double t, double v, double window) {
  if (!samples_.empty()) {
    const Sample& last = samples_.back();
    if (!(t > last.t)) throw std::invalid_argument("lead speed samples must have increasing time");
    integral_ += 0.5 * (v + last.v) * (t - last.t);
  }
  samples_.push_back({t, v});
  const double oldest = t - window - time_tolerance(t);
  while (samples_.size() >= 2 && samples_.front().t < oldest) {
    const Sample& a = samples_[0];
    const Sample& b = samples_[1];
    integral_ -= 0.5 * (a.v + b.v) * (b.t - a.t);
    samples_.pop_front();
  }
}

void LeadSpeedWindow::clear() {
  samples_.clear();
  integral_ = 0.0;
}

double LeadSpeedWindow::span() const {
  if (samples_.empty()) return 0.0;
  return samples_.back().t - samples_.front().t;
}

double lead_speed_running_mean(const LeadSpeedWindow& buffer, double t, const ControllerParams& params) {
  if (buffer.empty()) throw NotInitializedError("lead speed buffer is empty: controller not initialized");
  if (std::fabs(buffer.samples().back().t - t) > time_tolerance(t)) {
    throw std::invalid_argument("running mean requested at a time other than the newest sample");
  }
  const double span = buffer.span();
  if (span <= 0.0) return buffer.samples().back().v;
  (void)params;  // window length is enforced when samples are pushed
  return buffer.integral() / span;
}

// ---------------------------------------------------------------------------

void LeadAccelFilter::update(double t, double v_lead, double time_constant) {
  if (samples_ > 0) {
    const double dt = t - last_t_;
    if (dt > 0.0) {
      const double raw = (v_lead - last_v_) / dt;
      const double gain = 1.0 - std::exp(-dt / time_constant);
      value_ += gain * (raw - value_);
    }
  }
  last_t_ = t;
  last_v_ = v_lead;
  ++samples_;
}

void LeadAccelFilter::reset() { *this = LeadAccelFilter{}; }

LeadAccelEstimate estimate_lead_accel(const LeadAccelFilter& filter) {
  if (filter.samples() < 2) return {0.0, true};
  return {filter.value(), false};
}

// ---------------------------------------------------------------------------

void PlanProfile::validate() const {
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const Bin& b = bins[i];
    if (!(b.hi > b.lo)) throw std::invalid_argument("plan bin has empty or inverted interval");
    if (!(b.v_down >= 0.0)) throw std::invalid_argument("plan bin has negative v_down");
    for (std::size_t j = 0; j < i; ++j) {
      if (b.lo < bins[j].hi && bins[j].lo < b.hi) throw std::invalid_argument("plan bins overlap");
    }
  }
}

std::optional<double> PlanProfile::lookup(double position, double t) const {
  const double key = axis == Axis::kPosition ? position : t;
  if (std::isnan(key)) return std::nullopt;
  for (const Bin& b : bins) {
    if (key >= b.lo && key < b.hi) return b.v_down;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

void apply_signal_loss(ControllerState& state, double dt, const ControllerParams& params) {
  state.held_h += dt * params.h_correction;
  state.signal_lost = true;
}

const char* to_string(TargetMode mode) {
  switch (mode) {
    case TargetMode::kLocal:
      return "local";
    case TargetMode::kPlanning:
      return "planning";
    case TargetMode::kFreeRoad:
      return "free";
  }
  return "?";
}

bool try_engage(ControllerState& state, double v, const ControllerParams& params) {
  if (params.engagement_gate && v < params.engage_min_speed) return state.engaged;
  state.engaged = true;
  return true;
}

Command command_accel(const SensorReading& reading, ControllerState& state, const PlanProfile* plan,
                      double dt, const ControllerParams& params) {
  if (!state.engaged) throw NotEngagedError("controller is not engaged");
  require_finite(reading.t, "t");
  require_finite(reading.v, "v");
  require_finite(reading.a, "a");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("dt must be positive and finite");
  if (reading.valid) {
    require_finite(reading.h, "h");
    require_finite(reading.v_lead, "v_lead");
    require_finite(reading.v_rel, "v_rel");
  }

  const double v = reading.v;
  Command out;
  out.signal_valid = reading.valid;

  if (reading.valid) {
    state.held_h = reading.h;
    state.held_v_lead = reading.v_lead;
    state.t_last_valid = reading.t;
    state.has_valid = true;
    state.signal_lost = false;
  } else if (state.has_valid) {
    apply_signal_loss(state, dt, params);
  } else {
    // No leader has ever been seen: cruise toward v_ref.
    out.mode = TargetMode::kFreeRoad;
    out.v_target = params.v_ref;
    out.a_target = target_accel(v, params.v_ref, params);
    out.a_safe = std::numeric_limits<double>::infinity();
    out.a_mpc = std::numeric_limits<double>::infinity();
    out.h = std::numeric_limits<double>::infinity();
    out.v_lead = std::numeric_limits<double>::quiet_NaN();
    out.a_cmd = std::clamp(out.a_target, params.a_min, params.a_max);
    return out;
  }

  const double h = state.held_h;
  const double v_lead = state.held_v_lead;
  out.h = h;
  out.v_lead = v_lead;

  state.lead_speed_buffer.push(reading.t, v_lead, params.tau);
  state.lead_accel_filter.update(reading.t, v_lead, params.lead_accel_time_constant);
  state.a_lead_est = estimate_lead_accel(state.lead_accel_filter).value;

  const double v_safe = safe_speed(h, v_lead, params);
  const double barrier_a_lead =
      params.barrier_lead_accel == BarrierLeadAccel::kWorstCase ? params.a_l_min : state.a_lead_est;
  out.a_safe = safe_accel(v, v_safe, safe_speed_rate(h, v, v_lead, barrier_a_lead, params), params);

  std::optional<double> v_down;
  if (plan != nullptr && reading.t - plan->issued_at < params.plan_max_age) {
    v_down = plan->lookup(reading.position, reading.t);
  }
  if (v_down) {
    out.mode = TargetMode::kPlanning;
    out.v_target = target_speed_planning(*v_down, v_lead, params, !state.signal_lost);
  } else {
    out.mode = TargetMode::kLocal;
    const double v_bar = lead_speed_running_mean(state.lead_speed_buffer, reading.t, params);
    out.v_target = target_speed_local(v_bar, h, v, params);
  }
  out.a_target = target_accel(v, out.v_target, params);
  out.a_mpc = mpc_accel(h, v, v_lead, state.a_lead_est, params);

  if (h <= params.s0 + params.eps_h) {
    out.a_cmd = params.a_min;
  } else {
    const double raw = std::min({out.a_safe, out.a_target, out.a_mpc});
    out.a_cmd = std::clamp(raw, params.a_min, params.a_max);
  }
  return out;
}

Controller::Controller(ControllerParams params, std::optional<PlanProfile> plan)
    : params_(params), plan_(std::move(plan)) {
  validate(params_);
  if (plan_) plan_->validate();
}

Command Controller::step(const SensorReading& reading, double dt) {
  return command_accel(reading, state_, plan_ ? &*plan_ : nullptr, dt, params_);
}

}  // namespace wavesmooth
