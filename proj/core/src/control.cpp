#include "octo/control.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "octo/errors.hpp"

namespace octo::control {

using vehicle::ControlInput;
using vehicle::VehicleState;

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kBaseline: return "baseline";
    case Variant::kIntegrator: return "integrator";
    case Variant::kVdo: return "vdo";
    case Variant::kNdo: return "ndo";
  }
  return "unknown";
}

std::optional<Variant> parse_variant(std::string_view name) {
  for (Variant v : {Variant::kBaseline, Variant::kIntegrator, Variant::kVdo, Variant::kNdo}) {
    if (name == to_string(v)) return v;
  }
  return std::nullopt;
}

std::string_view to_string(TorqueEstimator e) {
  switch (e) {
    case TorqueEstimator::kSmo: return "smo";
    case TorqueEstimator::kNone: return "none";
    case TorqueEstimator::kOracle: return "oracle";
  }
  return "unknown";
}

std::optional<TorqueEstimator> parse_torque_estimator(std::string_view name) {
  for (TorqueEstimator e :
       {TorqueEstimator::kSmo, TorqueEstimator::kNone, TorqueEstimator::kOracle}) {
    if (name == to_string(e)) return e;
  }
  return std::nullopt;
}

bool is_positive_diagonal(const Mat3& m) {
  if (!m.allFinite()) return false;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i == j ? !(m(i, j) > 0.0) : m(i, j) != 0.0) return false;
    }
  }
  return true;
}

ThrustLimits default_thrust_limits(double mass, double gravity) {
  return {geom::kPi / 4.0, 0.1 * mass * gravity, 2.5 * mass * gravity};
}

Vec3 translational_control(const Setpoint& sp, const VehicleState& s,
                           const Vec3& disturbance_estimate,
                           const TranslationalGains& gains, double mass,
                           double gravity) {
  const Vec3 e_p = sp.position - s.position;
  const Vec3 e_v = sp.velocity - s.velocity;
  const Vec3 a_d = gains.kp * e_p + gains.kv * e_v -
                   gravity * Vec3::UnitZ() + sp.acceleration;
  return mass * a_d - disturbance_estimate;
}

AttitudeCommand attitude_from_force(const Vec3& desired_force, double yaw,
                                    const ThrustLimits& limits) {
  const double norm = desired_force.norm();
  if (!std::isfinite(norm) || norm < limits.thrust_min) {
    throw DegenerateThrust("desired force magnitude " + std::to_string(norm) +
                           " N is below the minimum thrust " +
                           std::to_string(limits.thrust_min) + " N");
  }
  AttitudeCommand cmd;
  Vec3 b_z = -desired_force / norm;
  if (std::acos(std::clamp(b_z.z(), -1.0, 1.0)) > limits.tilt_max) {
    cmd.tilt_clamped = true;
    const double horizontal = std::hypot(b_z.x(), b_z.y());
    if (horizontal < 1e-12) {
      b_z = Vec3::UnitZ();
    } else {
      const double s = std::sin(limits.tilt_max) / horizontal;
      b_z = Vec3(b_z.x() * s, b_z.y() * s, std::cos(limits.tilt_max));
    }
  }
  const double thrust = -desired_force.dot(b_z);
  cmd.thrust = std::clamp(thrust, limits.thrust_min, limits.thrust_max);
  cmd.thrust_clamped = cmd.thrust != thrust;

  // Undo the yaw rotation; what remains is (s_p c_r, -s_r, c_p c_r).
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  const Vec3 b(cy * b_z.x() + sy * b_z.y(), -sy * b_z.x() + cy * b_z.y(), b_z.z());
  cmd.eta.roll = std::asin(std::clamp(-b.y(), -1.0, 1.0));
  cmd.eta.pitch = std::atan2(b.x(), b.z());
  cmd.eta.yaw = geom::wrap_pi(yaw);
  return cmd;
}

RotationalOutput rotational_control(const geom::EulerAngles& eta_d,
                                    const Vec3& omega_d, const VehicleState& s,
                                    const Vec3& torque_estimate,
                                    const RotationalGains& gains,
                                    const Mat3& inertia, double dt,
                                    const Vec3& integral, bool integrate) {
  const geom::EulerAngles eta = s.euler();
  RotationalOutput out;
  out.eta_error = Vec3(geom::wrap_pi(eta_d.roll - eta.roll),
                       geom::wrap_pi(eta_d.pitch - eta.pitch),
                       geom::wrap_pi(eta_d.yaw - eta.yaw));
  const Vec3 q_d = omega_d + geom::euler_rate_matrix_inverse(eta) * (gains.k_eta * out.eta_error);
  out.rate_error = q_d - s.omega;
  out.integral = integrate ? Vec3(integral + out.rate_error * dt) : integral;
  const Vec3 alpha_d = gains.k_pp * out.rate_error + gains.k_ii * out.integral;
  const Vec3 body = inertia * alpha_d + s.omega.cross(inertia * s.omega);
  out.torque = vehicle::quantize_torque(body) - vehicle::quantize_torque(torque_estimate);
  return out;
}

// ---------------------------------------------------------------------------
// ControllerConfig

void ControllerConfig::validate() const {
  auto require_diag = [](const Mat3& m, const char* name) {
    if (!is_positive_diagonal(m)) {
      throw ConfigError(std::string(name) + " must be positive diagonal");
    }
  };
  require_diag(translational.kp, "control.kp");
  require_diag(translational.kv, "control.kv");
  require_diag(rotational.k_eta, "control.k_eta");
  require_diag(rotational.k_pp, "control.k_pp");
  require_diag(rotational.k_ii, "control.k_ii");
  require_diag(ndo_gain, "observers.ndo.gain");
  require_diag(integrator_gain, "observers.integrator.gain");
  if (!(integrator_clamp > 0.0)) throw ConfigError("observers.integrator.clamp must be > 0");
  if (!(smo.l1 > 0.0 && smo.l2 > 0.0 && smo.l3 > 0.0)) {
    throw ConfigError("observers.smo gains l1, l2, l3 must be > 0");
  }
  if (!(smo.t0 >= 0.0)) throw ConfigError("observers.smo.t0 must be >= 0");
  if (!(smo.epsilon > 0.0)) throw ConfigError("observers.smo.epsilon must be > 0");
  if (!(tilt_max > 0.0 && tilt_max < geom::kPi / 2.0)) {
    throw ConfigError("control.tilt_max must be in (0, 90) deg");
  }
  if (!(thrust_min_factor > 0.0 && thrust_max_factor > thrust_min_factor)) {
    throw ConfigError("control thrust factors must satisfy 0 < min < max");
  }
  if (!(translational_rate_hz > 0.0 && rotational_rate_hz >= translational_rate_hz)) {
    throw ConfigError("control rates must satisfy 0 < translational <= rotational");
  }
  if (!(rate_feedforward_cutoff_hz > 0.0)) {
    throw ConfigError("control.rate_feedforward_cutoff_hz must be > 0");
  }
  if (!vdo_zeta.allFinite()) throw ConfigError("observers.vdo.zeta must be finite");
  const double worst = observers::vdo_min_gain_projection(vdo_zeta, tilt_max);
  if (!(worst > 0.0)) {
    throw ConfigError("observers.vdo.zeta: zeta*Theta reaches " + std::to_string(worst) +
                      " inside the tilt envelope; it must stay positive");
  }
}

// ---------------------------------------------------------------------------
// CascadeController

namespace {

std::int64_t ticks_per_period(double rate_hz, double physics_dt, const char* name) {
  const double ratio = 1.0 / (rate_hz * physics_dt);
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * ratio) {
    throw ConfigError(std::string(name) + " period is not a multiple of the physics step");
  }
  return static_cast<std::int64_t>(rounded);
}

}  // namespace

CascadeController::CascadeController(ControllerConfig config,
                                     vehicle::VehicleParams params,
                                     double physics_dt)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  if (!(physics_dt > 0.0)) throw ConfigError("physics dt must be > 0");
  translational_every_ = ticks_per_period(config_.translational_rate_hz, physics_dt,
                                          "translational loop");
  rotational_every_ = ticks_per_period(config_.rotational_rate_hz, physics_dt,
                                       "rotational loop");
  if (translational_every_ % rotational_every_ != 0) {
    throw ConfigError("translational period must be a multiple of the rotational period");
  }
  translational_dt_ = static_cast<double>(translational_every_) * physics_dt;
  rotational_dt_ = static_cast<double>(rotational_every_) * physics_dt;
  const double weight = params_.mass * params_.gravity;
  limits_ = {config_.tilt_max, config_.thrust_min_factor * weight,
             config_.thrust_max_factor * weight};
  reset(0.0, VehicleState{}, Setpoint{});
}

void CascadeController::set_torque_oracle(
    std::shared_ptr<const vehicle::TorqueDisturbance> oracle) {
  oracle_ = std::move(oracle);
}

void CascadeController::reset(double /*t*/, const VehicleState& s, const Setpoint& sp) {
  vdo_ = observers::vdo_init(config_.vdo_zeta, params_.mass, s.velocity);
  ndo_ = observers::ndo_init(config_.ndo_gain, params_.mass, s.velocity);
  smo_ = observers::smo_init(config_.smo, s.omega);
  integrator_ = {config_.integrator_gain, config_.integrator_clamp, Vec3::Zero()};

  eta_d_ = geom::EulerAngles{0.0, 0.0, sp.yaw};
  thrust_d_ = params_.mass * params_.gravity;
  omega_d_.setZero();
  eta_rate_filtered_.setZero();
  have_previous_eta_d_ = false;
  rate_integral_.setZero();
  last_applied_ = {thrust_d_, Vec3::Zero()};
  thrust_force_sum_.setZero();
  thrust_force_samples_ = 0;
  have_interval_ = false;
  translational_count_ = 0;
  rotational_count_ = 0;
  telemetry_ = Telemetry{};
}

std::optional<ControlInput> CascadeController::step(std::int64_t tick, double t,
                                                    const VehicleState& s,
                                                    const Setpoint& sp) {
  if (translational_due(tick)) translational_tick(t, s, sp);
  if (rotational_due(tick)) return rotational_tick(t, s);
  return std::nullopt;
}

void CascadeController::update_force_observers(const VehicleState& s) {
  if (!have_interval_ || thrust_force_samples_ == 0) return;
  const Vec3 thrust_force = thrust_force_sum_ / thrust_force_samples_;
  const Vec3 gravity_force(0.0, 0.0, params_.mass * params_.gravity);
  vdo_ = observers::vdo_update(vdo_, s.velocity, thrust_force, gravity_force,
                               interval_eta_, translational_dt_);
  ndo_ = observers::ndo_update(ndo_, s.velocity, thrust_force, gravity_force,
                               translational_dt_);
}

void CascadeController::translational_tick(double /*t*/, const VehicleState& s,
                                           const Setpoint& sp) {
  ++translational_count_;
  update_force_observers(s);

  const geom::EulerAngles eta = s.euler();
  const Vec3 e_p = sp.position - s.position;
  Vec3 estimate = Vec3::Zero();
  switch (config_.variant) {
    case Variant::kBaseline:
      break;
    case Variant::kIntegrator:
      integrator_ = observers::integrator_update(integrator_, e_p, translational_dt_);
      estimate = -observers::integrator_force(integrator_);
      break;
    case Variant::kVdo:
      estimate = observers::vdo_force_estimate(vdo_, eta);
      break;
    case Variant::kNdo:
      estimate = ndo_.estimate;
      break;
  }

  const Vec3 force = translational_control(sp, s, estimate, config_.translational,
                                           params_.mass, params_.gravity);
  const AttitudeCommand cmd = attitude_from_force(force, sp.yaw, limits_);

  if (config_.rate_feedforward) {
    if (have_previous_eta_d_) {
      const Vec3 raw(geom::wrap_pi(cmd.eta.roll - eta_d_.roll) / translational_dt_,
                     geom::wrap_pi(cmd.eta.pitch - eta_d_.pitch) / translational_dt_,
                     geom::wrap_pi(cmd.eta.yaw - eta_d_.yaw) / translational_dt_);
      const double keep = std::exp(-2.0 * geom::kPi * config_.rate_feedforward_cutoff_hz *
                                   translational_dt_);
      eta_rate_filtered_ = keep * eta_rate_filtered_ + (1.0 - keep) * raw;
    }
    omega_d_ = geom::euler_rate_matrix_inverse(cmd.eta) * eta_rate_filtered_;
  }
  have_previous_eta_d_ = true;
  eta_d_ = cmd.eta;
  thrust_d_ = cmd.thrust;

  thrust_force_sum_.setZero();
  thrust_force_samples_ = 0;
  interval_eta_ = eta;
  have_interval_ = true;

  telemetry_.position_error = e_p;
  telemetry_.velocity_error = sp.velocity - s.velocity;
  telemetry_.desired_force = force;
  telemetry_.eta_d = cmd.eta;
  telemetry_.omega_d = omega_d_;
  telemetry_.thrust_d = cmd.thrust;
  telemetry_.delta_f_hat = vdo_.estimate;
  telemetry_.force_estimate = estimate;
  telemetry_.integrator_force = observers::integrator_force(integrator_);
  telemetry_.tilt_clamped = cmd.tilt_clamped;
  telemetry_.thrust_clamped = cmd.thrust_clamped;
}

ControlInput CascadeController::rotational_tick(double t, const VehicleState& s) {
  ++rotational_count_;
  Vec3 torque_estimate = Vec3::Zero();
  switch (config_.torque_estimator) {
    case TorqueEstimator::kSmo:
      torque_estimate = observers::smo_torque_estimate(smo_, params_.inertia);
      break;
    case TorqueEstimator::kNone:
      break;
    case TorqueEstimator::kOracle:
      if (oracle_) torque_estimate = (*oracle_)(t);
      break;
  }
  // Integral of e_q runs from t0 on, once the SMO estimate has settled.
  const bool integrate = t >= config_.smo.t0;
  const RotationalOutput out =
      rotational_control(eta_d_, omega_d_, s, torque_estimate, config_.rotational,
                         params_.inertia, rotational_dt_, rate_integral_, integrate);
  rate_integral_ = out.integral;

  telemetry_.eta_error = out.eta_error;
  telemetry_.rate_error = out.rate_error;
  telemetry_.torque_d = out.torque;
  telemetry_.torque_estimate = torque_estimate;
  return {thrust_d_, out.torque};
}

void CascadeController::report_applied(const ControlInput& applied,
                                       const VehicleState& s) {
  last_applied_ = applied;
  thrust_force_sum_ += -applied.thrust * s.rotation.col(2);
  ++thrust_force_samples_;
  smo_ = observers::smo_update(smo_, s.omega, params_.inertia, applied.torque,
                               rotational_dt_);
}

}  // namespace octo::control
