#include "octo/observers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>

#include "octo/errors.hpp"

namespace octo::observers {

// ---------------------------------------------------------------------------
// VDO

double vdo_gain_projection(const RowVec3& zeta, const geom::EulerAngles& eta) {
  return zeta.dot(geom::theta_vector(eta));
}

double vdo_min_gain_projection(const RowVec3& zeta, double tilt_limit) {
  // For fixed roll/pitch the yaw terms combine into a*cos(yaw) + b*sin(yaw),
  // whose minimum over yaw is -hypot(a, b). Roll and pitch are gridded.
  constexpr int kSteps = 180;
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= kSteps; ++i) {
    const double roll = -tilt_limit + 2.0 * tilt_limit * i / kSteps;
    for (int j = 0; j <= kSteps; ++j) {
      const double pitch = -tilt_limit + 2.0 * tilt_limit * j / kSteps;
      const double cr = std::cos(roll), sr = std::sin(roll);
      const double cp = std::cos(pitch), sp = std::sin(pitch);
      const double a = zeta(0) * sp * cr - zeta(1) * sr;
      const double b = zeta(0) * sr + zeta(1) * sp * cr;
      worst = std::min(worst, zeta(2) * cp * cr - std::hypot(a, b));
    }
  }
  return worst;
}

VdoState vdo_init(const RowVec3& zeta, double mass, const Vec3& velocity,
                  double estimate) {
  VdoState st;
  st.zeta = zeta;
  st.mass = mass;
  st.estimate = estimate;
  st.aux = estimate - mass * zeta.dot(velocity);
  return st;
}

VdoState vdo_update(const VdoState& st, const Vec3& velocity,
                    const Vec3& thrust_force, const Vec3& gravity_force,
                    const geom::EulerAngles& eta, double dt) {
  const Vec3 theta = geom::theta_vector(eta);
  const double rate = st.zeta.dot(theta);
  if (!(rate > 0.0)) {
    throw GainConditionError("VDO gain projection zeta*Theta = " +
                             std::to_string(rate) + " is not positive");
  }
  VdoState next = st;
  next.aux -= dt * st.zeta.dot(gravity_force + thrust_force + theta * st.estimate);
  next.estimate = next.aux + st.mass * st.zeta.dot(velocity);
  return next;
}

Vec3 vdo_force_estimate(const VdoState& st, const geom::EulerAngles& eta) {
  return st.estimate * geom::theta_vector(eta);
}

// ---------------------------------------------------------------------------
// NDO

NdoState ndo_init(const Mat3& gain, double mass, const Vec3& velocity,
                  const Vec3& estimate) {
  NdoState st;
  st.gain = gain;
  st.mass = mass;
  st.estimate = estimate;
  st.aux = estimate - mass * (gain * velocity);
  return st;
}

NdoState ndo_update(const NdoState& st, const Vec3& velocity,
                    const Vec3& thrust_force, const Vec3& gravity_force,
                    double dt) {
  NdoState next = st;
  next.aux -= dt * (st.gain * (st.estimate + thrust_force + gravity_force));
  next.estimate = next.aux + st.mass * (st.gain * velocity);
  return next;
}

// ---------------------------------------------------------------------------
// SMO

SmoState smo_init(const SmoGains& gains, const Vec3& omega) {
  SmoState st;
  st.gains = gains;
  st.mu = omega;
  return st;
}

SmoState smo_update(const SmoState& st, const Vec3& omega, const Mat3& inertia,
                    const Vec3& torque, double dt) {
  const SmoGains& g = st.gains;
  const Vec3 e1 = st.mu - omega;
  const double norm = std::max(e1.norm(), g.epsilon);

  SmoState next = st;
  next.xi1 = -g.l1 * e1 / std::sqrt(norm) - g.l2 * e1 * e1.norm() + st.xi2;
  const Vec3 model = inertia.llt().solve(torque - omega.cross(inertia * omega));
  next.mu = st.mu + dt * (model + next.xi1);
  next.xi2 = st.xi2 - dt * g.l3 * e1 / norm;
  return next;
}

Vec3 smo_torque_estimate(const SmoState& st, const Mat3& inertia) {
  return inertia * st.xi2;
}

// ---------------------------------------------------------------------------
// Integrator

IntegratorState integrator_update(const IntegratorState& st,
                                  const Vec3& position_error, double dt) {
  IntegratorState next = st;
  next.integral = (st.integral + position_error * dt).cwiseMax(-st.clamp).cwiseMin(st.clamp);
  return next;
}

Vec3 integrator_force(const IntegratorState& st) { return st.gain * st.integral; }

}  // namespace octo::observers
