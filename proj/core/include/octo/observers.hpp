#pragma once

#include <Eigen/Core>

#include "octo/geom.hpp"

namespace octo::observers {

using RowVec3 = Eigen::RowVector3d;

// Voltage drop observer. Estimates the scalar lift loss df from the
// translational momentum balance using the known direction theta_vector(eta):
//   aux'  = -zeta (G + F + Theta df_hat)
//   df_hat = aux + zeta m v
// so that the estimation error obeys e' = -(zeta Theta) e - df'.
struct VdoState {
  RowVec3 zeta = RowVec3(0.0, 0.0, 2.0);  // 1/s
  double mass = 2.0;                      // kg
  double aux = 0.0;                       // N
  double estimate = 0.0;                  // N
};

// Chooses aux so that the initial estimate equals `estimate` at velocity v.
VdoState vdo_init(const RowVec3& zeta, double mass, const Vec3& velocity,
                  double estimate = 0.0);

// One forward-Euler step over an interval of length dt. `velocity` is the
// velocity at the end of the interval; `thrust_force`, `gravity_force` and
// `eta` describe the interval itself. Throws GainConditionError when
// zeta * Theta(eta) <= 0.
VdoState vdo_update(const VdoState& st, const Vec3& velocity,
                    const Vec3& thrust_force, const Vec3& gravity_force,
                    const geom::EulerAngles& eta, double dt);

// df_hat * Theta(eta).
Vec3 vdo_force_estimate(const VdoState& st, const geom::EulerAngles& eta);

// zeta * Theta(eta); the instantaneous convergence rate of the VDO.
double vdo_gain_projection(const RowVec3& zeta, const geom::EulerAngles& eta);

// Minimum of zeta * Theta over |roll|, |pitch| <= tilt_limit and every yaw.
double vdo_min_gain_projection(const RowVec3& zeta, double tilt_limit);

// Momentum-based nonlinear disturbance observer estimating the full force
// vector:
//   z' = -L (z + L m v + F + G),  dF_hat = z + L m v.
struct NdoState {
  Mat3 gain = 2.0 * Mat3::Identity();
  double mass = 2.0;
  Vec3 aux = Vec3::Zero();
  Vec3 estimate = Vec3::Zero();
};

NdoState ndo_init(const Mat3& gain, double mass, const Vec3& velocity,
                  const Vec3& estimate = Vec3::Zero());

NdoState ndo_update(const NdoState& st, const Vec3& velocity,
                    const Vec3& thrust_force, const Vec3& gravity_force,
                    double dt);

// Fixed-time sliding-mode observer for the body torque disturbance.
struct SmoGains {
  double l1 = 6.0;
  double l2 = 4.0;
  double l3 = 2.0;
  double t0 = 1.0;          // s, convergence budget before the estimate is trusted
  double epsilon = 1e-9;    // floor on |e1| in the switching denominators
};

struct SmoState {
  SmoGains gains;
  Vec3 mu = Vec3::Zero();   // angular-velocity estimate, rad/s
  Vec3 xi1 = Vec3::Zero();
  Vec3 xi2 = Vec3::Zero();  // rad/s^2, J^{-1} tau_dis estimate
};

SmoState smo_init(const SmoGains& gains, const Vec3& omega);

SmoState smo_update(const SmoState& st, const Vec3& omega, const Mat3& inertia,
                    const Vec3& torque, double dt);

// J xi2.
Vec3 smo_torque_estimate(const SmoState& st, const Mat3& inertia);

// Position-error integrator used by the integrator-augmented baseline.
struct IntegratorState {
  Mat3 gain = Mat3::Identity();  // N / (m s)
  double clamp = 10.0;           // m s, per-axis bound on the integral
  Vec3 integral = Vec3::Zero();
};

IntegratorState integrator_update(const IntegratorState& st,
                                  const Vec3& position_error, double dt);

// gain * integral, in newtons.
Vec3 integrator_force(const IntegratorState& st);

}  // namespace octo::observers
