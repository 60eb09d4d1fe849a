#pragma once

// Human car-following law: follow-the-leader plus optimal-velocity relaxation,
//   dv/dt = a (v_lead - v) / s^2 + b (V(s) - v),
// with s the position difference to the leader (front bumper to front bumper).

#include <cmath>
#include <stdexcept>

namespace wavesmooth {

template <typename Scalar>
struct HumanDriverParamsT {
  Scalar a_ftl = Scalar(20);    // m^2/s
  Scalar b_ov = Scalar(0.5);    // 1/s
  Scalar v_max = Scalar(9.75);  // m/s
  Scalar d0 = Scalar(2.5);      // m
  Scalar l_veh = Scalar(4.5);   // m
};

using HumanDriverParams = HumanDriverParamsT<double>;

/// Parameters under which uniform flow on the 22-vehicle, 260 m ring is
/// linearly string-unstable. The follow-the-leader gain is raised from the
/// struct default so the resulting stop-and-go waves stay collision-free.
inline HumanDriverParams unstable_ring_preset() {
  HumanDriverParams p;
  p.a_ftl = 50.0;
  return p;
}

/// Highway parameters: stable near 28 m/s cruising, unstable through the
/// mid-speed range crossed during stop-and-go pulses.
inline HumanDriverParams open_road_preset() {
  HumanDriverParams p;
  p.a_ftl = 20.0;
  p.b_ov = 0.8;
  p.v_max = 30.0;
  p.d0 = 15.0;
  p.l_veh = 4.5;
  return p;
}

void validate(const HumanDriverParams& params);

/// Bando-style tanh profile: 0 at s = l_veh, v_max as s -> infinity.
template <typename Scalar>
Scalar optimal_velocity(Scalar s, const HumanDriverParamsT<Scalar>& p) {
  using std::tanh;
  const Scalar t2 = tanh(Scalar(2));
  const Scalar value = p.v_max * (tanh((s - p.l_veh) / p.d0 - Scalar(2)) + t2) / (Scalar(1) + t2);
  return value > Scalar(0) ? value : Scalar(0);
}

/// Spacing that yields V(s) = v, for 0 < v < v_max.
template <typename Scalar>
Scalar equilibrium_spacing(Scalar v, const HumanDriverParamsT<Scalar>& p) {
  using std::atanh;
  using std::tanh;
  if (!(v > Scalar(0) && v < p.v_max)) throw std::domain_error("equilibrium speed must lie in (0, v_max)");
  const Scalar t2 = tanh(Scalar(2));
  const Scalar x = atanh(v / p.v_max * (Scalar(1) + t2) - t2);
  return p.l_veh + p.d0 * (x + Scalar(2));
}

class NonPositiveGapError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// s is the front-to-front spacing to the leader, the argument of V.
template <typename Scalar>
Scalar human_accel(Scalar s, Scalar v, Scalar v_lead, const HumanDriverParamsT<Scalar>& p) {
  if (!(s > Scalar(0))) throw NonPositiveGapError("human_accel requires a positive spacing");
  return p.a_ftl * (v_lead - v) / (s * s) + p.b_ov * (optimal_velocity(s, p) - v);
}

/// Acceleration with no vehicle ahead: pure relaxation toward v_max.
template <typename Scalar>
Scalar free_road_accel(Scalar v, const HumanDriverParamsT<Scalar>& p) {
  return p.b_ov * (p.v_max - v);
}

}  // namespace wavesmooth
