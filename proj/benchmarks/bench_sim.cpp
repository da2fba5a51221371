#include <benchmark/benchmark.h>

#include "octo/control.hpp"
#include "octo/sim.hpp"

namespace {

using namespace octo;

void BM_Rk4Step(benchmark::State& state) {
  const vehicle::VehicleParams params;
  const vehicle::BatteryModel battery;
  vehicle::VehicleState s;
  s.omega = Vec3(0.1, -0.2, 0.05);
  const vehicle::ControlInput u{params.mass * params.gravity, Vec3(1e-3, 0, 0)};
  double t = 0.0;
  for (auto _ : state) {
    s = sim::rk4_step(params, battery, s, u, t, 1e-3);
    t += 1e-3;
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_Rk4Step);

// One 10 ms frame: both loops on the first tick, rotational on every second.
void BM_ControllerFrame(benchmark::State& state) {
  sim::SimConfig cfg;
  cfg.control.variant = static_cast<control::Variant>(state.range(0));
  control::CascadeController ctl(cfg.control, cfg.vehicle, cfg.dt);
  vehicle::VehicleState s;
  const control::Setpoint sp = sim::reference_trajectory(0.0, cfg.trajectory);
  s.position = sp.position;
  ctl.reset(0.0, s, sp);
  std::int64_t tick = 0;
  for (auto _ : state) {
    for (int i = 0; i < 10; ++i, ++tick) {
      const double t = static_cast<double>(tick) * cfg.dt;
      if (auto cmd = ctl.step(tick, t, s, sp)) {
        ctl.report_applied(*cmd, s);
        benchmark::DoNotOptimize(*cmd);
      }
    }
  }
  state.SetLabel(std::string(control::to_string(cfg.control.variant)));
}
BENCHMARK(BM_ControllerFrame)->DenseRange(0, 3);

void BM_Scenario(benchmark::State& state) {
  sim::SimConfig cfg;
  cfg.duration = static_cast<double>(state.range(0));
  sim::RunOptions opts;
  opts.keep_records = false;
  for (auto _ : state) benchmark::DoNotOptimize(sim::run_scenario(cfg, opts).metrics);
  state.counters["sim_s_per_s"] = benchmark::Counter(
      cfg.duration * static_cast<double>(state.iterations()), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Scenario)->Arg(10)->Arg(60)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
