#include "octo/sim.hpp"

#include <charconv>
#include <cmath>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

#include "octo/errors.hpp"

namespace octo::sim {

using vehicle::ControlInput;
using vehicle::StateDerivative;
using vehicle::VehicleState;

control::Setpoint reference_trajectory(double t, const TrajectoryParams& params) {
  control::Setpoint sp;
  if (params.kind == TrajectoryKind::kHover) {
    sp.position = Vec3(0.0, 0.0, -params.altitude);
    return sp;
  }
  const double w = 2.0 * geom::kPi / params.period;
  const double s = std::sin(w * t), c = std::cos(w * t);
  const double r = params.radius, a = params.z_amplitude;
  sp.position = Vec3(r * s, r * c, -params.altitude - a * s);
  sp.velocity = Vec3(r * w * c, -r * w * s, -a * w * c);
  sp.acceleration = Vec3(-r * w * w * s, -r * w * w * c, a * w * w * s);
  sp.yaw = 0.0;
  return sp;
}

control::Setpoint reference_trajectory(double t, double period) {
  TrajectoryParams params;
  params.period = period;
  return reference_trajectory(t, params);
}

void SimConfig::validate() const {
  vehicle.validate();
  control.validate();
  vehicle::BatteryModel{battery};
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("sim.dt must be > 0");
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw ConfigError("sim.duration must be > 0");
  }
  if (decimation < 1) throw ConfigError("sim.decimation must be >= 1");
  if (!(divergence_limit > 0.0)) throw ConfigError("sim.divergence_limit must be > 0");
  if (!initial_position_offset.allFinite()) {
    throw ConfigError("sim.initial_position_offset must be finite");
  }
  if (trajectory.kind == TrajectoryKind::kCircle && !(trajectory.period > 0.0)) {
    throw ConfigError("trajectory.period must be > 0");
  }
  // Loop periods must be whole multiples of the physics step.
  for (double rate : {control.translational_rate_hz, control.rotational_rate_hz}) {
    const double ratio = 1.0 / (rate * dt);
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1.0) {
      throw ConfigError("sim.dt must divide both loop periods");
    }
  }
}

// ---------------------------------------------------------------------------
// Metrics

AxisMetrics compute_metrics(std::span<const double> desired,
                            std::span<const double> actual) {
  if (desired.size() != actual.size()) {
    throw std::invalid_argument("compute_metrics: series lengths differ");
  }
  if (desired.empty()) throw EmptySeries("compute_metrics: empty series");
  double sum_sq = 0.0, sum_abs = 0.0;
  for (std::size_t i = 0; i < desired.size(); ++i) {
    const double e = desired[i] - actual[i];
    sum_sq += e * e;
    sum_abs += std::abs(e);
  }
  const auto n = static_cast<double>(desired.size());
  return {std::sqrt(sum_sq) / std::sqrt(n), sum_abs / n};
}

Metrics compute_metrics(std::span<const Vec3> desired, std::span<const Vec3> actual) {
  if (desired.size() != actual.size()) {
    throw std::invalid_argument("compute_metrics: series lengths differ");
  }
  if (desired.empty()) throw EmptySeries("compute_metrics: empty series");
  Metrics m;
  m.n = desired.size();
  std::vector<double> d(m.n), a(m.n);
  AxisMetrics* axes[3] = {&m.x, &m.y, &m.z};
  for (int axis = 0; axis < 3; ++axis) {
    for (std::size_t i = 0; i < m.n; ++i) {
      d[i] = desired[i](axis);
      a[i] = actual[i](axis);
    }
    *axes[axis] = compute_metrics(d, a);
  }
  double sum_sq = 0.0, sum_norm = 0.0;
  for (std::size_t i = 0; i < m.n; ++i) {
    const double e = (desired[i] - actual[i]).norm();
    sum_sq += e * e;
    sum_norm += e;
  }
  const auto n = static_cast<double>(m.n);
  m.norm = {std::sqrt(sum_sq) / std::sqrt(n), sum_norm / n};
  return m;
}

// ---------------------------------------------------------------------------
// Integration

namespace {

VehicleState advance(const VehicleState& s, const StateDerivative& d, double h) {
  VehicleState out;
  out.position = s.position + h * d.position;
  out.velocity = s.velocity + h * d.velocity;
  out.rotation = s.rotation + h * d.rotation;
  out.omega = s.omega + h * d.omega;
  return out;
}

}  // namespace

VehicleState rk4_step(const vehicle::VehicleParams& params,
                      const vehicle::BatteryModel& battery,
                      const VehicleState& state, const ControlInput& input,
                      double t, double dt, const Vec3& tau_dis) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("rk4_step: dt must be > 0");
  auto f = [&](const VehicleState& s, double time) {
    return vehicle::dynamics_deriv(params, battery, s, input, time, tau_dis);
  };
  const StateDerivative k1 = f(state, t);
  const StateDerivative k2 = f(advance(state, k1, dt / 2.0), t + dt / 2.0);
  const StateDerivative k3 = f(advance(state, k2, dt / 2.0), t + dt / 2.0);
  const StateDerivative k4 = f(advance(state, k3, dt), t + dt);

  VehicleState next;
  const double w = dt / 6.0;
  next.position = state.position + w * (k1.position + 2.0 * k2.position + 2.0 * k3.position + k4.position);
  next.velocity = state.velocity + w * (k1.velocity + 2.0 * k2.velocity + 2.0 * k3.velocity + k4.velocity);
  next.rotation = state.rotation + w * (k1.rotation + 2.0 * k2.rotation + 2.0 * k3.rotation + k4.rotation);
  next.omega = state.omega + w * (k1.omega + 2.0 * k2.omega + 2.0 * k3.omega + k4.omega);
  if (!next.all_finite()) {
    throw NonFinite("rk4_step: state left the finite range at t = " + std::to_string(t + dt));
  }
  next.rotation = geom::orthonormalize(next.rotation);
  return next;
}

// ---------------------------------------------------------------------------
// Scenario

std::shared_ptr<const vehicle::TorqueDisturbance> make_torque_disturbance(
    const SimConfig& cfg) {
  if (!cfg.torque_disturbance_enabled) {
    return std::make_shared<const vehicle::TorqueDisturbance>(
        vehicle::TorqueDisturbance::constant(Vec3::Zero(), cfg.torque_disturbance.epsilon));
  }
  return std::make_shared<const vehicle::TorqueDisturbance>(
      cfg.torque_disturbance, cfg.duration, cfg.seed);
}

ScenarioResult run_scenario(const SimConfig& cfg, const RunOptions& options) {
  cfg.validate();
  const vehicle::BatteryModel battery(cfg.battery);
  const auto disturbance =
      options.torque_disturbance ? options.torque_disturbance : make_torque_disturbance(cfg);

  control::CascadeController controller(cfg.control, cfg.vehicle, cfg.dt);
  controller.set_torque_oracle(disturbance);
  vehicle::Actuators actuators(cfg.vehicle);

  const control::Setpoint start = reference_trajectory(0.0, cfg.trajectory);
  VehicleState state;
  state.position = start.position + cfg.initial_position_offset;
  state.velocity = start.velocity;
  state.rotation = geom::rotation_from_euler({0.0, 0.0, start.yaw});
  controller.reset(0.0, state, start);
  actuators.reset({cfg.vehicle.mass * cfg.vehicle.gravity, Vec3::Zero()});

  ScenarioResult result;
  const auto ticks = static_cast<std::int64_t>(std::llround(cfg.duration / cfg.dt));
  std::vector<Vec3> desired, actual;
  desired.reserve(static_cast<std::size_t>(ticks / 10 + 1));
  actual.reserve(desired.capacity());
  if (options.keep_records) {
    result.records.reserve(static_cast<std::size_t>(ticks / cfg.decimation + 1));
  }

  bool saturated = false;
  for (std::int64_t k = 0; k < ticks; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    const control::Setpoint sp = reference_trajectory(t, cfg.trajectory);

    std::optional<ControlInput> command;
    try {
      command = controller.step(k, t, state, sp);
    } catch (const DegenerateThrust& e) {
      // The loop asked for a force the airframe cannot produce.
      throw Diverged(t, e.what());
    }
    if (command) {
      const vehicle::RotorCommand rc = actuators.command(*command);
      controller.report_applied(rc.achieved, state);
      saturated = rc.saturated;
    }
    if (saturated) ++result.saturated_ticks;

    if (controller.translational_due(k)) {
      desired.push_back(sp.position);
      actual.push_back(state.position);
      const double error = (sp.position - state.position).norm();
      if (!(error <= cfg.divergence_limit)) {
        throw Diverged(t, "position error " + std::to_string(error) + " m exceeds " +
                              std::to_string(cfg.divergence_limit) + " m at t = " +
                              std::to_string(t) + " s");
      }
    }

    const ControlInput held = actuators.step(cfg.dt);
    const Vec3 tau_dis = (*disturbance)(t);

    if (k % cfg.decimation == 0) {
      const control::Telemetry& tm = controller.telemetry();
      SimRecord r;
      r.t = t;
      r.p_d = sp.position;
      r.p = state.position;
      r.v_d = sp.velocity;
      r.v = state.velocity;
      r.eta_d = tm.eta_d;
      r.eta = state.euler();
      r.thrust = held.thrust;
      r.torque = held.torque;
      r.delta_f = battery.delta_f(t);
      r.delta_f_hat = tm.delta_f_hat;
      r.force_estimate = tm.force_estimate;
      r.tau_dis = tau_dis;
      r.tau_dis_hat = tm.torque_estimate;
      r.saturated = saturated;
      r.tilt_clamped = tm.tilt_clamped;
      if (options.sink) options.sink(r);
      if (options.keep_records) result.records.push_back(r);
    }

    try {
      state = rk4_step(cfg.vehicle, battery, state, held, t, cfg.dt, tau_dis);
    } catch (const NonFinite& e) {
      throw Diverged(t + cfg.dt, e.what());
    }
    result.max_orthonormality_error =
        std::max(result.max_orthonormality_error, geom::orthonormality_error(state.rotation));
  }

  result.physics_ticks = ticks;
  result.translational_ticks = controller.translational_count();
  result.rotational_ticks = controller.rotational_count();
  result.metrics = compute_metrics(desired, actual);
  return result;
}

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_csv_header(std::ostream& out) {
  out << "t,"
         "pd_x,pd_y,pd_z,p_x,p_y,p_z,"
         "vd_x,vd_y,vd_z,v_x,v_y,v_z,"
         "roll_d,pitch_d,yaw_d,roll,pitch,yaw,"
         "thrust,tau_x,tau_y,tau_z,"
         "df_true,df_hat,dF_hat_x,dF_hat_y,dF_hat_z,"
         "tau_dis_x,tau_dis_y,tau_dis_z,tau_dis_hat_x,tau_dis_hat_y,tau_dis_hat_z,"
         "saturated,tilt_clamped\n";
}

void write_csv_row(std::ostream& out, const SimRecord& r) {
  std::string line;
  line.reserve(512);
  auto put = [&line](double v) {
    line += format_double(v);
    line += ',';
  };
  auto put3 = [&put](const Vec3& v) {
    put(v.x());
    put(v.y());
    put(v.z());
  };
  put(r.t);
  put3(r.p_d);
  put3(r.p);
  put3(r.v_d);
  put3(r.v);
  put3(r.eta_d.as_vector());
  put3(r.eta.as_vector());
  put(r.thrust);
  put3(r.torque);
  put(r.delta_f);
  put(r.delta_f_hat);
  put3(r.force_estimate);
  put3(r.tau_dis);
  put3(r.tau_dis_hat);
  line += r.saturated ? "1," : "0,";
  line += r.tilt_clamped ? "1\n" : "0\n";
  out << line;
}

}  // namespace octo::sim
