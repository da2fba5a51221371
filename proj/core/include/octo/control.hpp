#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>

#include "octo/geom.hpp"
#include "octo/observers.hpp"
#include "octo/vehicle.hpp"

namespace octo::control {

enum class Variant {
  kBaseline,
  kIntegrator,  // baseline + position-error integrator
  kVdo,         // baseline + voltage drop observer
  kNdo,         // baseline + full-vector disturbance observer
};

std::string_view to_string(Variant v);
std::optional<Variant> parse_variant(std::string_view name);

enum class TorqueEstimator {
  kSmo,
  kNone,
  kOracle,  // true disturbance fed straight back; for cancellation checks
};

std::string_view to_string(TorqueEstimator e);
std::optional<TorqueEstimator> parse_torque_estimator(std::string_view name);

struct TranslationalGains {
  Mat3 kp = Vec3(6.0, 6.0, 6.0).asDiagonal();
  Mat3 kv = Vec3(4.0, 4.0, 4.0).asDiagonal();
};

struct RotationalGains {
  Mat3 k_eta = Vec3(10.0, 10.0, 5.0).asDiagonal();
  Mat3 k_pp = Vec3(40.0, 40.0, 20.0).asDiagonal();
  Mat3 k_ii = Vec3(10.0, 10.0, 5.0).asDiagonal();
};

// True when m is diagonal with strictly positive, finite diagonal entries.
bool is_positive_diagonal(const Mat3& m);

struct Setpoint {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 acceleration = Vec3::Zero();
  double yaw = 0.0;
};

struct ThrustLimits {
  double tilt_max = geom::kPi / 4.0;  // rad
  double thrust_min = 0.0;            // N; also the degenerate-request threshold
  double thrust_max = 0.0;            // N
};

// Tilt clamp 45 deg, thrust in [0.1 m g, 2.5 m g].
ThrustLimits default_thrust_limits(double mass, double gravity);

// a_d = Kp e_p + Kv e_v - g e_z + a_ff,  F_d = m a_d - dF_hat.
Vec3 translational_control(const Setpoint& sp, const vehicle::VehicleState& s,
                           const Vec3& disturbance_estimate,
                           const TranslationalGains& gains, double mass,
                           double gravity);

struct AttitudeCommand {
  geom::EulerAngles eta;
  double thrust = 0.0;
  bool tilt_clamped = false;
  bool thrust_clamped = false;
};

// Tilt-minimal extraction: b_z,d = -F_d / |F_d| with the commanded yaw. When
// the tilt limit is hit the horizontal direction is kept and the thrust is the
// projection of F_d on the clamped axis. Throws DegenerateThrust when
// |F_d| < limits.thrust_min.
AttitudeCommand attitude_from_force(const Vec3& desired_force, double yaw,
                                    const ThrustLimits& limits);

struct RotationalOutput {
  Vec3 torque = Vec3::Zero();
  Vec3 integral = Vec3::Zero();
  Vec3 eta_error = Vec3::Zero();
  Vec3 rate_error = Vec3::Zero();
};

// e_eta = eta_d - eta, q_d = w_d + C^-1 K_eta e_eta, e_q = q_d - w,
// alpha_d = K_pp e_q + K_ii int(e_q), tau_d = J alpha_d - tau_hat + w x J w.
// The integral only accumulates when `integrate` is set. The torque is
// returned on the vehicle::kTorqueQuantum grid.
RotationalOutput rotational_control(const geom::EulerAngles& eta_d,
                                    const Vec3& omega_d,
                                    const vehicle::VehicleState& s,
                                    const Vec3& torque_estimate,
                                    const RotationalGains& gains,
                                    const Mat3& inertia, double dt,
                                    const Vec3& integral, bool integrate);

struct ControllerConfig {
  Variant variant = Variant::kVdo;
  TorqueEstimator torque_estimator = TorqueEstimator::kSmo;
  TranslationalGains translational;
  RotationalGains rotational;
  observers::RowVec3 vdo_zeta = observers::RowVec3(0.0, 0.0, 2.0);
  Mat3 ndo_gain = 2.0 * Mat3::Identity();
  Mat3 integrator_gain = Mat3::Identity();
  double integrator_clamp = 10.0;
  observers::SmoGains smo;
  double tilt_max = geom::kPi / 4.0;
  double thrust_min_factor = 0.1;  // x m g
  double thrust_max_factor = 2.5;  // x m g
  double translational_rate_hz = 100.0;
  double rotational_rate_hz = 500.0;
  // Differentiate eta_d (first-order filtered) for the body-rate feedforward.
  // Off: omega_d = 0.
  bool rate_feedforward = false;
  double rate_feedforward_cutoff_hz = 5.0;

  void validate() const;
};

// Every intermediate signal of the last controller ticks.
struct Telemetry {
  Vec3 position_error = Vec3::Zero();
  Vec3 velocity_error = Vec3::Zero();
  Vec3 eta_error = Vec3::Zero();
  Vec3 rate_error = Vec3::Zero();
  Vec3 desired_force = Vec3::Zero();
  geom::EulerAngles eta_d;
  Vec3 omega_d = Vec3::Zero();
  double thrust_d = 0.0;
  Vec3 torque_d = Vec3::Zero();
  double delta_f_hat = 0.0;
  Vec3 force_estimate = Vec3::Zero();
  Vec3 torque_estimate = Vec3::Zero();
  Vec3 integrator_force = Vec3::Zero();
  bool tilt_clamped = false;
  bool thrust_clamped = false;
};

// Dual-rate cascade: a translational loop (observers, force law, attitude
// extraction) whose outputs are held between its ticks, and a faster
// rotational loop (SMO, torque law). Driven by the simulation scheduler
// through step(); the physics tick index decides which loops run.
class CascadeController {
 public:
  CascadeController(ControllerConfig config, vehicle::VehicleParams params,
                    double physics_dt);

  // Re-initialises every observer and latch at the given state.
  void reset(double t, const vehicle::VehicleState& s, const Setpoint& sp);

  // Runs whichever loops are due at physics tick `tick` (time t). Returns a
  // new wrench command when the rotational loop ran.
  std::optional<vehicle::ControlInput> step(std::int64_t tick, double t,
                                            const vehicle::VehicleState& s,
                                            const Setpoint& sp);

  // Feeds back the wrench the actuators actually produce for the command just
  // issued; the translational observers integrate it.
  void report_applied(const vehicle::ControlInput& applied,
                      const vehicle::VehicleState& s);

  void translational_tick(double t, const vehicle::VehicleState& s,
                          const Setpoint& sp);
  vehicle::ControlInput rotational_tick(double t, const vehicle::VehicleState& s);

  // Oracle source for TorqueEstimator::kOracle.
  void set_torque_oracle(std::shared_ptr<const vehicle::TorqueDisturbance> oracle);

  bool translational_due(std::int64_t tick) const { return tick % translational_every_ == 0; }
  bool rotational_due(std::int64_t tick) const { return tick % rotational_every_ == 0; }

  std::int64_t translational_count() const { return translational_count_; }
  std::int64_t rotational_count() const { return rotational_count_; }

  const Telemetry& telemetry() const { return telemetry_; }
  const ControllerConfig& config() const { return config_; }
  const observers::VdoState& vdo() const { return vdo_; }
  const observers::NdoState& ndo() const { return ndo_; }
  const observers::SmoState& smo() const { return smo_; }
  const observers::IntegratorState& integrator() const { return integrator_; }

 private:
  void update_force_observers(const vehicle::VehicleState& s);

  ControllerConfig config_;
  vehicle::VehicleParams params_;
  ThrustLimits limits_;
  double translational_dt_;
  double rotational_dt_;
  std::int64_t translational_every_;
  std::int64_t rotational_every_;

  observers::VdoState vdo_;
  observers::NdoState ndo_;
  observers::SmoState smo_;
  observers::IntegratorState integrator_;
  std::shared_ptr<const vehicle::TorqueDisturbance> oracle_;

  // Latched translational outputs.
  geom::EulerAngles eta_d_;
  double thrust_d_ = 0.0;
  Vec3 omega_d_ = Vec3::Zero();
  Vec3 eta_rate_filtered_ = Vec3::Zero();
  bool have_previous_eta_d_ = false;

  Vec3 rate_integral_ = Vec3::Zero();
  vehicle::ControlInput last_applied_;

  // Thrust force accumulated over the current translational interval.
  Vec3 thrust_force_sum_ = Vec3::Zero();
  int thrust_force_samples_ = 0;
  geom::EulerAngles interval_eta_;
  bool have_interval_ = false;

  std::int64_t translational_count_ = 0;
  std::int64_t rotational_count_ = 0;
  Telemetry telemetry_;
};

}  // namespace octo::control
