#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "octo/control.hpp"
#include "octo/geom.hpp"
#include "octo/vehicle.hpp"

namespace octo::sim {

enum class TrajectoryKind { kCircle, kHover };

struct TrajectoryParams {
  TrajectoryKind kind = TrajectoryKind::kCircle;
  double period = 30.0;      // s
  double radius = 2.0;       // m
  double altitude = 2.0;     // m above the origin (z = -altitude in NED)
  double z_amplitude = 0.5;  // m
};

// Circle of the given radius at varying height:
//   p_d = (r sin wt, r cos wt, -h - a sin wt),  w = 2 pi / T,
// with exact velocity and acceleration and zero yaw. The hover kind holds
// (0, 0, -h).
control::Setpoint reference_trajectory(double t, const TrajectoryParams& params);
control::Setpoint reference_trajectory(double t, double period);

struct SimConfig {
  vehicle::VehicleParams vehicle;
  vehicle::BatteryParams battery;
  bool torque_disturbance_enabled = true;
  vehicle::TorqueDisturbanceParams torque_disturbance;
  control::ControllerConfig control;
  TrajectoryParams trajectory;
  Vec3 initial_position_offset = Vec3::Zero();  // m, added to p_d(0)
  double dt = 1e-3;             // s, physics step
  double duration = 280.0;      // s
  std::uint64_t seed = 1;
  int decimation = 10;          // physics ticks per logged record
  double divergence_limit = 100.0;  // m of position error

  // Throws ConfigError on the first violated invariant.
  void validate() const;
};

// One logged row. Columns of the CSV appear in this order.
struct SimRecord {
  double t = 0.0;
  Vec3 p_d = Vec3::Zero();
  Vec3 p = Vec3::Zero();
  Vec3 v_d = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  geom::EulerAngles eta_d;
  geom::EulerAngles eta;
  double thrust = 0.0;
  Vec3 torque = Vec3::Zero();
  double delta_f = 0.0;
  double delta_f_hat = 0.0;
  Vec3 force_estimate = Vec3::Zero();
  Vec3 tau_dis = Vec3::Zero();
  Vec3 tau_dis_hat = Vec3::Zero();
  bool saturated = false;
  bool tilt_clamped = false;
};

struct AxisMetrics {
  double rmse = 0.0;  // (1/sqrt(n)) ||d - a||_2
  double mae = 0.0;   // (1/n) ||d - a||_1
};

struct Metrics {
  AxisMetrics x, y, z;
  // Per-sample Euclidean error: rmse = sqrt(mean |e_i|^2), mae = mean |e_i|.
  AxisMetrics norm;
  std::size_t n = 0;
};

// Throws EmptySeries for n == 0 and std::invalid_argument on length mismatch.
AxisMetrics compute_metrics(std::span<const double> desired,
                            std::span<const double> actual);
Metrics compute_metrics(std::span<const Vec3> desired, std::span<const Vec3> actual);

// Classical fourth-order Runge-Kutta step with the input and the torque
// disturbance held over the step; the rotation is re-orthonormalized
// afterwards. Throws ConfigError for dt <= 0 and NonFinite on blow-up.
vehicle::VehicleState rk4_step(const vehicle::VehicleParams& params,
                               const vehicle::BatteryModel& battery,
                               const vehicle::VehicleState& state,
                               const vehicle::ControlInput& input, double t,
                               double dt, const Vec3& tau_dis = Vec3::Zero());

struct RunOptions {
  // Called for every logged record, in order, before the run returns or
  // throws.
  std::function<void(const SimRecord&)> sink;
  // Shared torque disturbance realization. Built from cfg and seed if null.
  std::shared_ptr<const vehicle::TorqueDisturbance> torque_disturbance;
  bool keep_records = true;
};

struct ScenarioResult {
  Metrics metrics;                 // position tracking, sampled at the translational rate
  std::vector<SimRecord> records;  // empty unless RunOptions::keep_records
  std::int64_t physics_ticks = 0;
  std::int64_t translational_ticks = 0;
  std::int64_t rotational_ticks = 0;
  std::int64_t saturated_ticks = 0;
  double max_orthonormality_error = 0.0;
};

// Builds the torque disturbance realization a run with this config uses.
std::shared_ptr<const vehicle::TorqueDisturbance> make_torque_disturbance(
    const SimConfig& cfg);

// Runs one scenario: physics every dt, rotational loop every 2 ms and
// translational loop every 10 ms at default rates, zero-order hold between
// ticks. Deterministic in cfg. Throws Diverged when the position error
// exceeds cfg.divergence_limit, the state stops being finite or the
// controller requests a force below the minimum thrust.
ScenarioResult run_scenario(const SimConfig& cfg, const RunOptions& options = {});

// CSV with a header row, '.' decimal point, shortest round-trip doubles.
void write_csv_header(std::ostream& out);
void write_csv_row(std::ostream& out, const SimRecord& record);

// Locale-independent shortest round-trip formatting.
std::string format_double(double value);

}  // namespace octo::sim
