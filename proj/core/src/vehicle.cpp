#include "octo/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "octo/errors.hpp"

namespace octo::vehicle {

double quantize_torque(double value) {
  return std::nearbyint(value / kTorqueQuantum) * kTorqueQuantum;
}

Vec3 quantize_torque(const Vec3& value) {
  return {quantize_torque(value.x()), quantize_torque(value.y()),
          quantize_torque(value.z())};
}

// ---------------------------------------------------------------------------
// VehicleParams

void VehicleParams::validate() const {
  if (!(mass > 0.0) || !std::isfinite(mass)) throw ConfigError("vehicle.mass must be > 0");
  if (!(gravity > 0.0) || !std::isfinite(gravity)) throw ConfigError("vehicle.gravity must be > 0");
  if (!inertia.allFinite() || !inertia.isApprox(inertia.transpose(), 1e-12)) {
    throw ConfigError("vehicle.inertia must be finite and symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(inertia);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) {
    throw ConfigError("vehicle.inertia must be positive definite");
  }
  if (!(arm_length > 0.0)) throw ConfigError("vehicle.arm_length must be > 0");
  if (!(yaw_moment_coeff > 0.0)) throw ConfigError("vehicle.yaw_moment_coeff must be > 0");
  if (!(rotor_max_thrust > 0.0)) throw ConfigError("vehicle.rotor_max_thrust must be > 0");
  if (motor_lag.enabled && !(motor_lag.time_constant > 0.0)) {
    throw ConfigError("vehicle.motor_lag.time_constant must be > 0");
  }
  if (coaxial_loss.enabled &&
      !(coaxial_loss.efficiency > 0.0 && coaxial_loss.efficiency <= 1.0)) {
    throw ConfigError("vehicle.coaxial_loss.efficiency must be in (0, 1]");
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(allocation_matrix());
  if (lu.rank() != 4) throw ConfigError("allocation matrix is rank deficient");
}

int VehicleParams::spin_direction(int rotor) {
  // Rotors 2k (upper) and 2k+1 (lower) share arm k and counter-rotate;
  // the upper rotor alternates direction from arm to arm.
  const int arm = rotor / 2;
  const bool upper = rotor % 2 == 0;
  const int upper_dir = arm % 2 == 0 ? 1 : -1;
  return upper ? upper_dir : -upper_dir;
}

AllocationMatrix VehicleParams::allocation_matrix() const {
  AllocationMatrix a;
  for (int i = 0; i < kRotorCount; ++i) {
    const int arm = i / 2;
    const double angle = geom::kPi / 4.0 + arm * geom::kPi / 2.0;
    const double x = arm_length * std::cos(angle);
    const double y = arm_length * std::sin(angle);
    // Thrust acts along -b_z at (x, y, 0): r x (0, 0, -T) = (-y T, x T, 0).
    a(0, i) = 1.0;
    a(1, i) = -y;
    a(2, i) = x;
    a(3, i) = spin_direction(i) * yaw_moment_coeff;
  }
  return a;
}

bool VehicleState::all_finite() const {
  return position.allFinite() && velocity.allFinite() &&
         rotation.allFinite() && omega.allFinite();
}

// ---------------------------------------------------------------------------
// BatteryModel

BatteryModel::BatteryModel(BatteryParams params) : params_(params) {
  if (!(params_.tau_b > 0.0)) throw ConfigError("battery.tau_b must be > 0");
  if (!(params_.mu > 0.0)) throw ConfigError("battery.mu must be > 0");
  if (!(params_.k_d >= 0.0)) throw ConfigError("battery.k_d must be >= 0");
  if (!std::isfinite(params_.delta_f0)) throw ConfigError("battery.delta_f0 must be finite");
  if (params_.k_d / params_.tau_b > params_.mu) {
    throw ConfigError("battery: k_d / tau_b = " +
                      std::to_string(params_.k_d / params_.tau_b) +
                      " exceeds the derivative bound mu = " +
                      std::to_string(params_.mu));
  }
}

double BatteryModel::delta_f(double t) const {
  if (!params_.enabled) return 0.0;
  return params_.delta_f0 + params_.k_d * -std::expm1(-t / params_.tau_b);
}

double BatteryModel::delta_f_rate(double t) const {
  if (!params_.enabled) return 0.0;
  return params_.k_d / params_.tau_b * std::exp(-t / params_.tau_b);
}

double BatteryModel::terminal_voltage(double t, double hover_thrust) const {
  const double ratio = std::max(0.0, 1.0 - delta_f(t) / hover_thrust);
  return params_.nominal_voltage * std::sqrt(ratio);
}

Vec3 BatteryModel::disturbance_force(double t, const geom::EulerAngles& eta) const {
  return delta_f(t) * geom::theta_vector(eta);
}

// ---------------------------------------------------------------------------
// TorqueDisturbance

TorqueDisturbance::TorqueDisturbance(TorqueDisturbanceParams params,
                                     double duration, std::uint64_t seed)
    : params_(params) {
  if (!params_.bias.allFinite()) throw ConfigError("torque_disturbance.bias must be finite");
  if (!(params_.noise_amplitude >= 0.0)) {
    throw ConfigError("torque_disturbance.noise_amplitude must be >= 0");
  }
  if (!(params_.noise_cutoff_hz > 0.0) || !(params_.knot_rate_hz > 0.0)) {
    throw ConfigError("torque_disturbance rates must be > 0");
  }
  const double worst = params_.bias.norm() + std::sqrt(3.0) * params_.noise_amplitude;
  if (!(worst < params_.epsilon)) {
    throw ConfigError("torque_disturbance: |bias| + sqrt(3)*noise_amplitude = " +
                      std::to_string(worst) + " is not below epsilon");
  }
  if (!(duration >= 0.0)) throw ConfigError("torque_disturbance: duration must be >= 0");

  knot_dt_ = 1.0 / params_.knot_rate_hz;
  const auto count = static_cast<std::size_t>(std::ceil(duration / knot_dt_)) + 2;
  knots_.reserve(count);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-params_.noise_amplitude,
                                                 params_.noise_amplitude);
  // Convex combination keeps every noise component within the amplitude.
  const double alpha = std::exp(-2.0 * geom::kPi * params_.noise_cutoff_hz * knot_dt_);
  Vec3 noise = Vec3::Zero();
  for (std::size_t k = 0; k < count; ++k) {
    knots_.push_back(params_.bias + noise);
    const Vec3 w(uniform(rng), uniform(rng), uniform(rng));
    noise = alpha * noise + (1.0 - alpha) * w;
  }
}

TorqueDisturbance TorqueDisturbance::constant(const Vec3& value, double epsilon) {
  if (!(value.norm() < epsilon)) {
    throw ConfigError("constant torque disturbance exceeds epsilon");
  }
  TorqueDisturbance d;
  d.params_.bias = value;
  d.params_.noise_amplitude = 0.0;
  d.params_.epsilon = epsilon;
  d.knot_dt_ = 1.0;
  d.knots_ = {value};
  return d;
}

Vec3 TorqueDisturbance::operator()(double t) const {
  if (knots_.size() == 1) return quantize_torque(knots_.front());
  const double s = std::clamp(t / knot_dt_, 0.0, static_cast<double>(knots_.size() - 1));
  const auto i = std::min(static_cast<std::size_t>(s), knots_.size() - 2);
  const double frac = s - static_cast<double>(i);
  return quantize_torque((1.0 - frac) * knots_[i] + frac * knots_[i + 1]);
}

// ---------------------------------------------------------------------------
// Dynamics

StateDerivative dynamics_deriv(const VehicleParams& params,
                               const BatteryModel& battery,
                               const VehicleState& state,
                               const ControlInput& input, double t,
                               const Vec3& tau_dis) {
  const Vec3 b_z = state.rotation.col(2);
  double thrust = input.thrust;
  if (params.coaxial_loss.enabled) thrust *= params.coaxial_loss.efficiency;

  const Vec3 force = -thrust * b_z;
  const Vec3 gravity(0.0, 0.0, params.mass * params.gravity);
  const Vec3 lift_loss = battery.delta_f(t) * b_z;

  StateDerivative d;
  d.position = state.velocity;
  d.velocity = (force + gravity + lift_loss) / params.mass;
  d.rotation = state.rotation * geom::skew(state.omega);
  const Vec3 j_omega = params.inertia * state.omega;
  d.omega = params.inertia.llt().solve(
      -state.omega.cross(j_omega) + (input.torque + tau_dis));
  return d;
}

// ---------------------------------------------------------------------------
// Allocation

Mixer::Mixer(const VehicleParams& params)
    : matrix_(params.allocation_matrix()),
      max_thrust_(params.rotor_max_thrust) {
  const Eigen::Matrix4d gram = matrix_ * matrix_.transpose();
  pseudo_inverse_ = matrix_.transpose() * gram.inverse();
}

ControlInput Mixer::wrench(const RotorThrusts& thrusts) const {
  const Eigen::Map<const Eigen::Matrix<double, kRotorCount, 1>> t(thrusts.data());
  const Eigen::Vector4d w = matrix_ * t;
  return {w(0), Vec3(w(1), w(2), w(3))};
}

RotorCommand Mixer::allocate(const ControlInput& u) const {
  Eigen::Vector4d w(u.thrust, u.torque.x(), u.torque.y(), u.torque.z());
  const Eigen::Matrix<double, kRotorCount, 1> raw = pseudo_inverse_ * w;

  RotorCommand cmd;
  for (int i = 0; i < kRotorCount; ++i) {
    const double clipped = std::clamp(raw(i), 0.0, max_thrust_);
    if (clipped != raw(i)) cmd.saturated = true;
    cmd.thrusts[static_cast<std::size_t>(i)] = clipped;
  }
  cmd.achieved = wrench(cmd.thrusts);
  return cmd;
}

RotorCommand allocate_rotors(const VehicleParams& params, const ControlInput& u) {
  return Mixer(params).allocate(u);
}

Actuators::Actuators(const VehicleParams& params)
    : params_(params), mixer_(params) {}

RotorCommand Actuators::command(const ControlInput& u) {
  if (!params_.use_allocation) {
    RotorCommand cmd;
    cmd.achieved = u;
    if (u.thrust < 0.0) {
      cmd.achieved.thrust = 0.0;
      cmd.saturated = true;
    }
    direct_ = cmd.achieved;
    return cmd;
  }
  RotorCommand cmd = mixer_.allocate(u);
  target_ = cmd.thrusts;
  return cmd;
}

ControlInput Actuators::step(double dt) {
  if (!params_.use_allocation) return direct_;
  if (!params_.motor_lag.enabled) return mixer_.wrench(target_);
  const double keep = std::exp(-dt / params_.motor_lag.time_constant);
  for (std::size_t i = 0; i < current_.size(); ++i) {
    current_[i] = target_[i] + (current_[i] - target_[i]) * keep;
  }
  return mixer_.wrench(current_);
}

void Actuators::reset(const ControlInput& u) {
  const RotorCommand cmd = command(u);
  current_ = cmd.thrusts;
}

}  // namespace octo::vehicle
