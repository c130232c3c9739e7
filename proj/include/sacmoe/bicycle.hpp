#pragma once

#include <algorithm>
#include <cmath>

namespace sacmoe {

struct BicycleState {
  double x = 0, y = 0;  // position (m)
  double theta = 0;     // heading (rad), kept unwrapped
  double v = 0;         // speed (m/s)
};

struct BicycleAction {
  double a_long = 0;  // longitudinal acceleration command (m/s^2)
  double psi = 0;     // steering angle (rad)
};

struct BicycleParams {
  double wheelbase = 2.5;  // m
  double a_max = 4.0;      // m/s^2
  double psi_max = 0.4;    // rad
  double v_min = 0.0;
  double v_max = 15.0;  // m/s
  double dt = 0.05;     // s
  double gravity = 9.81;
};

inline BicycleAction clamp_action(const BicycleAction& a, const BicycleParams& p) {
  return {std::clamp(a.a_long, -p.a_max, p.a_max), std::clamp(a.psi, -p.psi_max, p.psi_max)};
}

// Nominal kinematic bicycle with multiplicative perturbation terms on the
// heading and speed rates, scaled by the latent gain mu. mu = 0 recovers the
// nominal model exactly.
inline BicycleState bicycle_derivative(const BicycleState& s, const BicycleAction& a, double mu,
                                       const BicycleParams& p) {
  BicycleState d;
  d.x = s.v * std::cos(s.theta);
  d.y = s.v * std::sin(s.theta);
  d.theta = s.v / p.wheelbase * std::tan(a.psi);
  d.v = a.a_long;
  d.theta -= (0.05 * std::exp(a.psi) + 0.15 * a.a_long * std::tanh(s.theta)) * mu;
  d.v -= (0.1 * a.a_long * std::cos(s.theta) + 0.3 * s.v * std::sin(a.psi)) * mu;
  return d;
}

// Racing surface model: the friction coefficient mu_f scales the admissible
// acceleration envelope. Longitudinal command is clipped to +-mu_f*a_max by
// the caller; here the realized heading rate is limited so the lateral
// demand v*theta_dot never exceeds mu_f*g (understeer). Lower friction
// strictly shrinks the feasible acceleration set.
inline BicycleState bicycle_derivative_friction(const BicycleState& s, const BicycleAction& a,
                                                double mu_f, const BicycleParams& p) {
  BicycleState d;
  d.x = s.v * std::cos(s.theta);
  d.y = s.v * std::sin(s.theta);
  d.theta = s.v / p.wheelbase * std::tan(a.psi);
  d.v = a.a_long;
  const double lat_limit = mu_f * p.gravity;
  const double lat = s.v * d.theta;
  if (std::abs(lat) > lat_limit && s.v > 1e-6) {
    d.theta = std::copysign(lat_limit / s.v, d.theta);
  }
  return d;
}

// Classic explicit RK4 over one control interval.
template <typename Deriv>
BicycleState rk4_step(const BicycleState& s, Deriv f, double dt) {
  auto advance = [](const BicycleState& s0, const BicycleState& k, double h) {
    BicycleState r;
    r.x = s0.x + h * k.x;
    r.y = s0.y + h * k.y;
    r.theta = s0.theta + h * k.theta;
    r.v = s0.v + h * k.v;
    return r;
  };
  BicycleState k1 = f(s);
  BicycleState k2 = f(advance(s, k1, dt / 2));
  BicycleState k3 = f(advance(s, k2, dt / 2));
  BicycleState k4 = f(advance(s, k3, dt));
  BicycleState out;
  out.x = s.x + dt / 6 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
  out.y = s.y + dt / 6 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y);
  out.theta = s.theta + dt / 6 * (k1.theta + 2 * k2.theta + 2 * k3.theta + k4.theta);
  out.v = s.v + dt / 6 * (k1.v + 2 * k2.v + 2 * k3.v + k4.v);
  return out;
}

}  // namespace sacmoe
