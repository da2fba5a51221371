#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Core>

#include "octo/geom.hpp"

namespace octo::vehicle {

inline constexpr int kRotorCount = 8;

using AllocationMatrix = Eigen::Matrix<double, 4, kRotorCount>;
using RotorThrusts = std::array<double, kRotorCount>;

// Resolution of body-torque commands and torque disturbances. Both live on a
// dyadic grid so that a command of the form q - d with d on the grid plus the
// disturbance d reproduces q exactly in double arithmetic.
inline constexpr double kTorqueQuantum = 0x1p-32;

double quantize_torque(double value);
Vec3 quantize_torque(const Vec3& value);

struct MotorLag {
  bool enabled = false;
  double time_constant = 0.02;  // s
};

// Thrust efficiency of stacked coaxial rotor pairs. When enabled, the plant
// delivers efficiency * f for a commanded f.
struct CoaxialLoss {
  bool enabled = false;
  double efficiency = 0.85;
};

struct VehicleParams {
  double mass = 2.0;        // kg
  double gravity = 9.81;    // m/s^2
  Mat3 inertia = Vec3(0.02, 0.02, 0.035).asDiagonal();  // kg m^2
  double arm_length = 0.25;        // m
  double yaw_moment_coeff = 0.016; // m, reaction torque per newton of thrust
  double rotor_max_thrust = 6.0;   // N per rotor at nominal voltage
  bool use_allocation = true;      // false: the commanded wrench is applied directly
  MotorLag motor_lag;
  CoaxialLoss coaxial_loss;

  // Throws ConfigError when any invariant is violated.
  void validate() const;

  // Rows: total thrust, roll, pitch, yaw torque. Column i is rotor i.
  AllocationMatrix allocation_matrix() const;

  // +1 for rotors whose reaction torque is positive about body z.
  static int spin_direction(int rotor);
};

struct VehicleState {
  Vec3 position = Vec3::Zero();  // NED, m
  Vec3 velocity = Vec3::Zero();  // NED, m/s
  Mat3 rotation = Mat3::Identity();  // body (FRD) to earth (NED)
  Vec3 omega = Vec3::Zero();     // body rates, rad/s

  bool all_finite() const;
  geom::EulerAngles euler() const { return geom::euler_from_rotation(rotation); }
};

struct StateDerivative {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Mat3 rotation = Mat3::Zero();
  Vec3 omega = Vec3::Zero();
};

struct ControlInput {
  double thrust = 0.0;            // N, along -b_z
  Vec3 torque = Vec3::Zero();     // body, N m
};

// Parameters of the lift-loss curve
//   df(t) = delta_f0 + k_d * (1 - exp(-t / tau_b)).
struct BatteryParams {
  bool enabled = true;
  double nominal_voltage = 16.8;  // V, 4S pack fully charged
  double delta_f0 = 3.0;          // N
  double k_d = 6.0;               // N
  double tau_b = 90.0;            // s
  double mu = 0.1;                // N/s, bound on |d(df)/dt|
};

class BatteryModel {
 public:
  // Throws ConfigError if the curve can violate the derivative bound mu.
  explicit BatteryModel(BatteryParams params = {});

  const BatteryParams& params() const { return params_; }

  // Thrust loss magnitude df(t) in newtons. Zero when the model is disabled.
  double delta_f(double t) const;
  double delta_f_rate(double t) const;

  // Terminal voltage implied by df(t) under a thrust ~ voltage^2 rotor
  // model at the given hover thrust.
  double terminal_voltage(double t, double hover_thrust) const;

  // df(t) * theta_vector(eta): the lift-loss force in the earth frame.
  Vec3 disturbance_force(double t, const geom::EulerAngles& eta) const;

 private:
  BatteryParams params_;
};

struct TorqueDisturbanceParams {
  Vec3 bias = Vec3(0.01, -0.008, 0.005);  // N m, motor mismatch
  double noise_amplitude = 0.01;           // N m, per-axis bound of the noise
  double noise_cutoff_hz = 0.5;
  double knot_rate_hz = 100.0;
  double epsilon = 0.05;                   // N m, bound on the total norm
};

// Bias plus low-pass filtered uniform noise, precomputed over [0, duration]
// from a seed and interpolated linearly between knots. Immutable after
// construction so one realization can be shared by concurrent scenarios.
class TorqueDisturbance {
 public:
  TorqueDisturbance(TorqueDisturbanceParams params, double duration,
                    std::uint64_t seed);

  // Constant disturbance, no noise.
  static TorqueDisturbance constant(const Vec3& value, double epsilon = 0.05);

  // Value at time t (clamped to the precomputed horizon), on the torque grid.
  Vec3 operator()(double t) const;

  const TorqueDisturbanceParams& params() const { return params_; }

 private:
  TorqueDisturbance() = default;

  TorqueDisturbanceParams params_;
  std::vector<Vec3> knots_;
  double knot_dt_ = 0.0;
};

// Equations of motion of the rigid body:
//   p' = v, R' = R skew(w),
//   m a = -f R e3 + m g e3 + df(t) R e3,
//   J w' = -w x J w + tau + tau_dis.
StateDerivative dynamics_deriv(const VehicleParams& params,
                               const BatteryModel& battery,
                               const VehicleState& state,
                               const ControlInput& input, double t,
                               const Vec3& tau_dis);

struct RotorCommand {
  RotorThrusts thrusts{};
  ControlInput achieved;   // wrench reproduced by the clipped thrusts
  bool saturated = false;
};

// Least-squares pseudo-inverse mixer for the coaxial X8 layout.
class Mixer {
 public:
  explicit Mixer(const VehicleParams& params);

  RotorCommand allocate(const ControlInput& u) const;

  ControlInput wrench(const RotorThrusts& thrusts) const;

  const AllocationMatrix& matrix() const { return matrix_; }

 private:
  AllocationMatrix matrix_;
  Eigen::Matrix<double, kRotorCount, 4> pseudo_inverse_;
  double max_thrust_;
};

RotorCommand allocate_rotors(const VehicleParams& params, const ControlInput& u);

// Turns controller wrench commands into the wrench the airframe produces:
// mixing and clipping, then the optional first-order rotor lag.
class Actuators {
 public:
  explicit Actuators(const VehicleParams& params);

  // Latches a new command; returns what the mixer could achieve.
  RotorCommand command(const ControlInput& u);

  // Advances rotor lag by dt. Returns the wrench to hold over that step.
  ControlInput step(double dt);

  void reset(const ControlInput& u);

 private:
  VehicleParams params_;
  Mixer mixer_;
  RotorThrusts target_{};
  RotorThrusts current_{};
  ControlInput direct_;
};

}  // namespace octo::vehicle
