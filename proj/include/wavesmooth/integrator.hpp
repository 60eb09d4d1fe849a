#pragma once

// Fixed-step explicit integrators over Eigen state vectors.
// `f(t, x)` returns dx/dt with the same shape as x.

#include <Eigen/Core>

namespace wavesmooth {

enum class Integrator { kEuler, kRk4 };

template <typename Derived, typename System>
typename Derived::PlainObject euler_step(const System& f, const Eigen::MatrixBase<Derived>& x,
                                         typename Derived::Scalar t, typename Derived::Scalar dt) {
  return x + dt * f(t, x.eval());
}

template <typename Derived, typename System>
typename Derived::PlainObject rk4_step(const System& f, const Eigen::MatrixBase<Derived>& x,
                                       typename Derived::Scalar t, typename Derived::Scalar dt) {
  using Scalar = typename Derived::Scalar;
  using State = typename Derived::PlainObject;
  const Scalar half = dt / Scalar(2);
  const State x0 = x;
  const State k1 = f(t, x0);
  const State k2 = f(t + half, (x0 + half * k1).eval());
  const State k3 = f(t + half, (x0 + half * k2).eval());
  const State k4 = f(t + dt, (x0 + dt * k3).eval());
  return x0 + (dt / Scalar(6)) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4);
}

template <typename Derived, typename System>
typename Derived::PlainObject integrate_step(Integrator method, const System& f,
                                             const Eigen::MatrixBase<Derived>& x,
                                             typename Derived::Scalar t, typename Derived::Scalar dt) {
  return method == Integrator::kRk4 ? rk4_step(f, x, t, dt) : euler_step(f, x, t, dt);
}

}  // namespace wavesmooth
