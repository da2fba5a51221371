#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "octo/errors.hpp"
#include "octo/sim.hpp"
#include "octo/vehicle.hpp"

namespace octo::vehicle {
namespace {

BatteryModel no_battery() {
  BatteryParams p;
  p.enabled = false;
  return BatteryModel(p);
}

TEST(VehicleParams, DefaultsAreValid) { EXPECT_NO_THROW(VehicleParams{}.validate()); }

TEST(VehicleParams, RejectsBadValues) {
  VehicleParams p;
  p.mass = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.inertia(0, 0) = -0.01;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.inertia(0, 1) = 0.001;  // not symmetric
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.rotor_max_thrust = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(VehicleParams, AllocationMatrixHasFullRowRank) {
  const AllocationMatrix a = VehicleParams{}.allocation_matrix();
  EXPECT_EQ(Eigen::FullPivLU<Eigen::MatrixXd>(a).rank(), 4);
  // Coaxial pairs counter-rotate.
  for (int arm = 0; arm < 4; ++arm) {
    EXPECT_EQ(VehicleParams::spin_direction(2 * arm), -VehicleParams::spin_direction(2 * arm + 1));
  }
}

TEST(Battery, CurveEndpoints) {
  const BatteryModel b;
  EXPECT_DOUBLE_EQ(b.delta_f(0.0), 3.0);
  EXPECT_NEAR(b.delta_f(1e5), 9.0, 1e-12);
}

TEST(Battery, DerivativeAtOriginMatchesFiniteDifference) {
  const BatteryModel b;
  const double h = 1e-3;
  const double fd = (b.delta_f(h) - b.delta_f(-h)) / (2 * h);
  EXPECT_NEAR(fd, 6.0 / 90.0, 1e-6 * 6.0 / 90.0);
  EXPECT_DOUBLE_EQ(b.delta_f_rate(0.0), 6.0 / 90.0);
}

TEST(Battery, RejectsCurveFasterThanRateBound) {
  BatteryParams p;
  p.k_d = 10.0;
  p.tau_b = 50.0;
  p.mu = 0.1;  // 10/50 = 0.2 > 0.1
  EXPECT_THROW(BatteryModel{p}, ConfigError);
}

TEST(Battery, RateBoundHoldsOverLongFlight) {
  const BatteryModel b;
  const double h = 0.01;
  double previous = b.delta_f(0.0);
  for (int k = 1; k <= 28000; ++k) {
    const double now = b.delta_f(k * h);
    const double rate = (now - previous) / h;
    EXPECT_GE(rate, 0.0);
    EXPECT_LE(rate, b.params().mu);
    previous = now;
  }
}

TEST(Battery, DisturbanceForceDirectionAndMagnitude) {
  BatteryParams p;
  p.delta_f0 = 5.0;
  p.k_d = 0.0;
  const BatteryModel b(p);
  EXPECT_LT((b.disturbance_force(0.0, {0, 0, 0}) - Vec3(0, 0, 5)).norm(), 1e-15);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> a(-1.4, 1.4);
  for (int i = 0; i < 100; ++i) {
    EXPECT_NEAR(b.disturbance_force(3.0, {a(rng), a(rng), a(rng)}).norm(), 5.0, 1e-12);
  }
  EXPECT_EQ(no_battery().disturbance_force(10.0, {0.2, 0.1, 0.0}), Vec3::Zero());
}

TEST(Battery, TerminalVoltageSags) {
  const BatteryModel b;
  const double hover = 2.0 * 9.81;
  EXPECT_LT(b.terminal_voltage(0.0, hover), 16.8);
  EXPECT_LT(b.terminal_voltage(200.0, hover), b.terminal_voltage(0.0, hover));
}

TEST(TorqueDisturbance, StaysBelowEpsilonAndIsOnTheGrid) {
  const TorqueDisturbance d(TorqueDisturbanceParams{}, 280.0, 42);
  for (double t = 0.0; t < 280.0; t += 0.0137) {
    const Vec3 v = d(t);
    EXPECT_LT(v.norm(), 0.05);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(v(i), quantize_torque(v(i)));
  }
}

TEST(TorqueDisturbance, SameSeedSameRealization) {
  const TorqueDisturbance a(TorqueDisturbanceParams{}, 10.0, 7), b(TorqueDisturbanceParams{}, 10.0, 7);
  const TorqueDisturbance c(TorqueDisturbanceParams{}, 10.0, 8);
  EXPECT_EQ(a(3.3), b(3.3));
  EXPECT_NE(a(3.3), c(3.3));
}

TEST(TorqueDisturbance, RejectsBoundViolation) {
  TorqueDisturbanceParams p;
  p.noise_amplitude = 0.03;
  EXPECT_THROW(TorqueDisturbance(p, 1.0, 1), ConfigError);
  EXPECT_THROW(TorqueDisturbance::constant(Vec3(0.1, 0, 0)), ConfigError);
}

TEST(Dynamics, HoverEquilibrium) {
  VehicleParams params;
  BatteryParams bp;
  bp.delta_f0 = 4.0;
  bp.k_d = 0.0;
  const BatteryModel battery(bp);
  const Vec3 tau_dis(0.01, -0.02, 0.005);
  const VehicleState s;
  const StateDerivative d =
      dynamics_deriv(params, battery, s, {params.mass * params.gravity + 4.0, -tau_dis}, 0.0, tau_dis);
  EXPECT_LT(d.velocity.norm(), 1e-14);
  EXPECT_LT(d.omega.norm(), 1e-14);
}

TEST(Dynamics, FreeFallInNed) {
  const StateDerivative d =
      dynamics_deriv(VehicleParams{}, no_battery(), VehicleState{}, {0.0, Vec3::Zero()}, 0.0, Vec3::Zero());
  EXPECT_EQ(d.velocity, Vec3(0, 0, 9.81));
}

TEST(Dynamics, TorqueFreeRotationConservesAngularMomentumNorm) {
  VehicleParams params;
  params.inertia = Vec3(0.02, 0.03, 0.05).asDiagonal();
  VehicleState s;
  s.omega = Vec3(1.0, -2.0, 0.5);
  const double h0 = (params.inertia * s.omega).norm();
  const BatteryModel battery = no_battery();
  for (int k = 0; k < 1000; ++k) {
    s = sim::rk4_step(params, battery, s, {0.0, Vec3::Zero()}, k * 1e-3, 1e-3);
  }
  EXPECT_LT(std::abs((params.inertia * s.omega).norm() - h0), 1e-6);
}

TEST(Dynamics, CoaxialLossScalesThrust) {
  VehicleParams params;
  params.coaxial_loss.enabled = true;
  const StateDerivative d = dynamics_deriv(params, no_battery(), VehicleState{},
                                           {params.mass * params.gravity, Vec3::Zero()}, 0.0,
                                           Vec3::Zero());
  EXPECT_NEAR(d.velocity.z(), 9.81 * 0.15, 1e-12);
}

TEST(Allocation, PureThrustSplitsEvenly) {
  const VehicleParams params;
  const RotorCommand cmd = allocate_rotors(params, {8 * params.rotor_max_thrust / 2, Vec3::Zero()});
  for (double t : cmd.thrusts) EXPECT_NEAR(t, params.rotor_max_thrust / 2, 1e-12);
  EXPECT_FALSE(cmd.saturated);
}

TEST(Allocation, YawTorqueSplitsSpinGroups) {
  const VehicleParams params;
  const ControlInput u{params.mass * params.gravity, Vec3(0.0, 0.0, 0.1)};
  const RotorCommand cmd = allocate_rotors(params, u);
  EXPECT_FALSE(cmd.saturated);
  for (int i = 0; i < kRotorCount; ++i) {
    const double t = cmd.thrusts[static_cast<std::size_t>(i)];
    if (VehicleParams::spin_direction(i) > 0) {
      EXPECT_GT(t, u.thrust / 8);
    } else {
      EXPECT_LT(t, u.thrust / 8);
    }
  }
  EXPECT_NEAR(cmd.achieved.torque.z(), 0.1, 1e-9);
  EXPECT_NEAR(cmd.achieved.thrust, u.thrust, 1e-9);
  EXPECT_LT(cmd.achieved.torque.head<2>().norm(), 1e-9);
}

TEST(Allocation, ClipsAndFlagsExcessiveRequest) {
  const VehicleParams params;
  const RotorCommand cmd = allocate_rotors(params, {100.0, Vec3::Zero()});
  EXPECT_TRUE(cmd.saturated);
  for (double t : cmd.thrusts) EXPECT_LE(t, params.rotor_max_thrust);
  EXPECT_NEAR(cmd.achieved.thrust, 8 * params.rotor_max_thrust, 1e-9);
}

TEST(Actuators, DirectModePassesWrenchThrough) {
  VehicleParams params;
  params.use_allocation = false;
  Actuators act(params);
  const ControlInput u{17.0, Vec3(0.01, 0.02, -0.03)};
  act.command(u);
  const ControlInput held = act.step(1e-3);
  EXPECT_EQ(held.thrust, u.thrust);
  EXPECT_EQ(held.torque, u.torque);
}

TEST(Actuators, MotorLagApproachesTarget) {
  VehicleParams params;
  params.motor_lag.enabled = true;
  Actuators act(params);
  act.reset({10.0, Vec3::Zero()});
  act.command({20.0, Vec3::Zero()});
  const double first = act.step(params.motor_lag.time_constant).thrust;
  EXPECT_NEAR(first, 20.0 - 10.0 * std::exp(-1.0), 1e-9);
  for (int i = 0; i < 50; ++i) act.step(params.motor_lag.time_constant);
  EXPECT_NEAR(act.step(1e-3).thrust, 20.0, 1e-9);
}

TEST(Quantize, IsIdempotentAndExactOnDifferences) {
  const double a = quantize_torque(0.123456789), d = quantize_torque(-0.0371);
  EXPECT_EQ(quantize_torque(a), a);
  EXPECT_EQ((a - d) + d, a);
}

}  // namespace
}  // namespace octo::vehicle
