#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "octo/config.hpp"
#include "octo/errors.hpp"
#include "octo/observers.hpp"
#include "octo/vehicle.hpp"

namespace octo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

std::string name_of(control::Variant v) { return std::string(control::to_string(v)); }

void write_metrics_kv(const fs::path& path, const sim::SimConfig& cfg,
                      const std::string& status, const sim::ScenarioResult* result,
                      const std::string& reason = {}) {
  std::ofstream out(path);
  out << "status=" << status << "\n";
  out << "variant=" << name_of(cfg.control.variant) << "\n";
  out << "seed=" << cfg.seed << "\n";
  out << "duration=" << sim::format_double(cfg.duration) << "\n";
  if (!reason.empty()) out << "reason=" << reason << "\n";
  if (result) {
    const sim::Metrics& m = result->metrics;
    out << "n=" << m.n << "\n";
    const std::pair<const char*, const sim::AxisMetrics*> axes[] = {
        {"x", &m.x}, {"y", &m.y}, {"z", &m.z}, {"3d", &m.norm}};
    for (const auto& [axis, metrics] : axes) {
      out << "rmse_" << axis << "=" << sim::format_double(metrics->rmse) << "\n";
      out << "mae_" << axis << "=" << sim::format_double(metrics->mae) << "\n";
    }
    out << "physics_ticks=" << result->physics_ticks << "\n";
    out << "translational_ticks=" << result->translational_ticks << "\n";
    out << "rotational_ticks=" << result->rotational_ticks << "\n";
    out << "saturated_ticks=" << result->saturated_ticks << "\n";
  }
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void write_metrics_json(const fs::path& path, const sim::SimConfig& cfg,
                        const sim::ScenarioResult& result) {
  const sim::Metrics& m = result.metrics;
  auto axis = [](const sim::AxisMetrics& a) { return json{{"rmse", a.rmse}, {"mae", a.mae}}; };
  const json doc = {
      {"status", "ok"},
      {"variant", name_of(cfg.control.variant)},
      {"seed", cfg.seed},
      {"duration", cfg.duration},
      {"metrics",
       {{"n", m.n}, {"x", axis(m.x)}, {"y", axis(m.y)}, {"z", axis(m.z)}, {"3d", axis(m.norm)}}},
      {"ticks",
       {{"physics", result.physics_ticks},
        {"translational", result.translational_ticks},
        {"rotational", result.rotational_ticks},
        {"saturated", result.saturated_ticks}}},
  };
  std::ofstream out(path);
  out << doc.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void print_summary(std::ostream& out, const sim::SimConfig& cfg,
                   const sim::ScenarioResult& result) {
  const sim::Metrics& m = result.metrics;
  out << "[metrics]\n"
      << "variant   = " << name_of(cfg.control.variant) << "\n"
      << "samples   = " << m.n << "\n"
      << "rmse_z    = " << fixed(m.z.rmse, 6) << " m\n"
      << "mae_z     = " << fixed(m.z.mae, 6) << " m\n"
      << "rmse_3d   = " << fixed(m.norm.rmse, 6) << " m\n"
      << "mae_3d    = " << fixed(m.norm.mae, 6) << " m\n";
}

struct Outcome {
  std::optional<sim::ScenarioResult> result;
  std::string diverged_reason;
  double diverged_time = 0.0;
};

// Runs one scenario streaming its records to <dir>/records.csv. A divergence
// leaves the partial log in place with a trailing marker line.
Outcome run_into(const sim::SimConfig& cfg, const fs::path& dir,
                 std::shared_ptr<const vehicle::TorqueDisturbance> disturbance) {
  fs::create_directories(dir);
  std::ofstream csv(dir / "records.csv");
  if (!csv) throw std::runtime_error("cannot write " + (dir / "records.csv").string());
  sim::write_csv_header(csv);

  sim::RunOptions options;
  options.keep_records = false;
  options.torque_disturbance = std::move(disturbance);
  options.sink = [&csv](const sim::SimRecord& r) { sim::write_csv_row(csv, r); };

  Outcome outcome;
  try {
    outcome.result = sim::run_scenario(cfg, options);
  } catch (const Diverged& e) {
    csv << "# DIVERGED t=" << sim::format_double(e.time()) << " " << e.what() << "\n";
    csv.flush();
    write_metrics_kv(dir / "metrics.kv", cfg, "diverged", nullptr, e.what());
    outcome.diverged_reason = e.what();
    outcome.diverged_time = e.time();
    return outcome;
  }
  csv.flush();
  if (!csv) throw std::runtime_error("cannot write " + (dir / "records.csv").string());
  write_metrics_kv(dir / "metrics.kv", cfg, "ok", &*outcome.result);
  write_metrics_json(dir / "metrics.json", cfg, *outcome.result);
  return outcome;
}

}  // namespace

sim::SimConfig resolve_config(const RunManifest& manifest) {
  sim::SimConfig cfg = manifest.config_path.empty()
                           ? sim::SimConfig{}
                           : config::load_config(manifest.config_path);
  if (manifest.seed) cfg.seed = *manifest.seed;
  if (manifest.duration) cfg.duration = *manifest.duration;
  if (manifest.decimation) cfg.decimation = *manifest.decimation;
  if (manifest.variants.size() == 1) cfg.control.variant = manifest.variants.front();
  return cfg;
}

double improvement_percent(double a, double b) { return (1.0 - a / b) * 100.0; }

std::vector<ComparisonRow> comparison_rows(
    const std::vector<std::pair<control::Variant, sim::Metrics>>& results) {
  std::vector<ComparisonRow> rows;
  for (const auto& [variant, metrics] : results) {
    rows.push_back({variant, fixed(metrics.z.rmse, 6), fixed(metrics.z.mae, 6)});
  }
  return rows;
}

std::vector<Improvement> comparison_improvements(const std::vector<ComparisonRow>& rows) {
  std::vector<Improvement> out;
  if (rows.empty()) return out;
  const ComparisonRow* reference = &rows.front();
  for (const auto& row : rows) {
    if (row.variant == control::Variant::kVdo) reference = &row;
  }
  const double ref_rmse = std::stod(reference->rmse);
  const double ref_mae = std::stod(reference->mae);
  for (const auto& row : rows) {
    if (&row == reference) continue;
    out.push_back({reference->variant, row.variant,
                   fixed(improvement_percent(ref_rmse, std::stod(row.rmse)), 2),
                   fixed(improvement_percent(ref_mae, std::stod(row.mae)), 2)});
  }
  return out;
}

int cmd_run(const RunManifest& manifest, std::ostream& out, std::ostream& err) {
  if (manifest.variants.size() > 1) {
    err << "run takes at most one --variant; use compare for several\n";
    return kExitUsage;
  }
  sim::SimConfig cfg;
  try {
    cfg = resolve_config(manifest);
    cfg.validate();
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  Outcome outcome;
  try {
    outcome = run_into(cfg, manifest.output_dir, sim::make_torque_disturbance(cfg));
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "io error: " << e.what() << "\n";
    return kExitIo;
  }
  if (!outcome.result) {
    err << "diverged at t=" << fixed(outcome.diverged_time, 3) << " s: "
        << outcome.diverged_reason << "\n";
    return kExitDiverged;
  }
  print_summary(out, cfg, *outcome.result);
  out << "wrote " << (manifest.output_dir / "records.csv").string() << "\n";
  return kExitOk;
}

int cmd_compare(const RunManifest& manifest, std::ostream& out, std::ostream& err) {
  if (manifest.variants.size() < 2) {
    err << "compare needs at least two --variant options\n";
    return kExitUsage;
  }
  sim::SimConfig base;
  try {
    RunManifest shared = manifest;
    shared.variants.clear();
    base = resolve_config(shared);
    base.validate();
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  // One torque disturbance realization for every variant; the battery curve
  // is deterministic.
  std::shared_ptr<const vehicle::TorqueDisturbance> disturbance;
  try {
    disturbance = sim::make_torque_disturbance(base);
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  std::vector<std::future<Outcome>> jobs;
  for (control::Variant v : manifest.variants) {
    sim::SimConfig cfg = base;
    cfg.control.variant = v;
    jobs.push_back(std::async(std::launch::async, [cfg, v, disturbance, &manifest] {
      return run_into(cfg, manifest.output_dir / name_of(v), disturbance);
    }));
  }

  std::vector<std::pair<control::Variant, sim::Metrics>> results;
  bool diverged = false;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const control::Variant v = manifest.variants[i];
    Outcome outcome;
    try {
      outcome = jobs[i].get();
    } catch (const std::exception& e) {
      err << name_of(v) << ": " << e.what() << "\n";
      return kExitIo;
    }
    if (!outcome.result) {
      err << name_of(v) << ": diverged at t=" << fixed(outcome.diverged_time, 3) << " s: "
          << outcome.diverged_reason << "\n";
      diverged = true;
      continue;
    }
    results.emplace_back(v, outcome.result->metrics);
  }

  const auto rows = comparison_rows(results);
  const auto improvements = comparison_improvements(rows);

  std::ostringstream table;
  table << "Control accuracy in the z direction (seed " << base.seed << ", "
        << sim::format_double(base.duration) << " s)\n";
  table << "variant        RMSE [m]     MAE [m]\n";
  for (const auto& row : rows) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-12s %10s  %10s\n", name_of(row.variant).c_str(),
                  row.rmse.c_str(), row.mae.c_str());
    table << line;
  }
  for (const auto& imp : improvements) {
    table << name_of(imp.variant) << " vs " << name_of(imp.reference) << ": "
          << imp.rmse_percent << "% RMSE, " << imp.mae_percent << "% MAE improvement\n";
  }

  std::ofstream txt(manifest.output_dir / "comparison.txt");
  txt << table.str();
  std::ofstream kv(manifest.output_dir / "comparison.kv");
  for (const auto& row : rows) {
    kv << "rmse_z." << name_of(row.variant) << "=" << row.rmse << "\n";
    kv << "mae_z." << name_of(row.variant) << "=" << row.mae << "\n";
  }
  for (const auto& imp : improvements) {
    const std::string key = name_of(imp.variant) + "_vs_" + name_of(imp.reference);
    kv << "improvement_rmse." << key << "=" << imp.rmse_percent << "\n";
    kv << "improvement_mae." << key << "=" << imp.mae_percent << "\n";
  }
  if (!txt || !kv) {
    err << "io error: cannot write comparison files\n";
    return kExitIo;
  }
  out << table.str();
  return diverged ? kExitDiverged : kExitOk;
}

std::vector<RuleResult> validation_rules(const sim::SimConfig& cfg) {
  std::vector<RuleResult> rules;
  auto check = [&rules](std::string name, auto&& fn) {
    RuleResult r{std::move(name), true, "ok"};
    try {
      fn(r);
    } catch (const Error& e) {
      r.pass = false;
      r.detail = e.what();
    }
    rules.push_back(std::move(r));
  };
  const auto& c = cfg.control;

  check("vehicle parameters", [&](RuleResult&) { cfg.vehicle.validate(); });
  check("translational gains positive diagonal", [&](RuleResult& r) {
    r.pass = control::is_positive_diagonal(c.translational.kp) &&
             control::is_positive_diagonal(c.translational.kv);
    if (!r.pass) r.detail = "kp and kv must be diagonal with positive entries";
  });
  check("rotational gains positive diagonal", [&](RuleResult& r) {
    r.pass = control::is_positive_diagonal(c.rotational.k_eta) &&
             control::is_positive_diagonal(c.rotational.k_pp) &&
             control::is_positive_diagonal(c.rotational.k_ii);
    if (!r.pass) r.detail = "k_eta, k_pp and k_ii must be diagonal with positive entries";
  });
  check("observer gains positive", [&](RuleResult& r) {
    r.pass = control::is_positive_diagonal(c.ndo_gain) &&
             control::is_positive_diagonal(c.integrator_gain) && c.integrator_clamp > 0.0 &&
             c.smo.l1 > 0.0 && c.smo.l2 > 0.0 && c.smo.l3 > 0.0 && c.smo.t0 >= 0.0;
    if (!r.pass) r.detail = "ndo/integrator gains, integrator clamp and smo l1..l3 must be positive";
  });
  check("VDO gain condition zeta*Theta > 0 over the tilt envelope", [&](RuleResult& r) {
    const double worst = observers::vdo_min_gain_projection(c.vdo_zeta, c.tilt_max);
    r.pass = worst > 0.0;
    r.detail = "min zeta*Theta = " + fixed(worst, 6) + " for |roll|, |pitch| <= " +
               fixed(c.tilt_max * 180.0 / geom::kPi, 1) + " deg";
  });
  check("lift-loss derivative bound k_d/tau_b <= mu", [&](RuleResult& r) {
    const double rate = cfg.battery.k_d / cfg.battery.tau_b;
    r.pass = cfg.battery.tau_b > 0.0 && rate <= cfg.battery.mu;
    r.detail = "k_d/tau_b = " + fixed(rate, 6) + " N/s, mu = " + fixed(cfg.battery.mu, 6) + " N/s";
  });
  check("torque disturbance bound", [&](RuleResult& r) {
    const auto& d = cfg.torque_disturbance;
    const double worst = d.bias.norm() + std::sqrt(3.0) * d.noise_amplitude;
    r.pass = !cfg.torque_disturbance_enabled || worst < d.epsilon;
    r.detail = "|bias| + sqrt(3)*noise = " + fixed(worst, 6) + " N m, epsilon = " +
               fixed(d.epsilon, 6) + " N m";
  });
  check("loop rates and physics step", [&](RuleResult& r) {
    auto ticks = [&](double rate) { return 1.0 / (rate * cfg.dt); };
    const double slow = ticks(c.translational_rate_hz), fast = ticks(c.rotational_rate_hz);
    auto whole = [](double x) { return x >= 1.0 && std::abs(x - std::round(x)) <= 1e-9 * x; };
    r.pass = cfg.dt > 0.0 && c.translational_rate_hz > 0.0 && c.rotational_rate_hz > 0.0 &&
             whole(slow) && whole(fast) &&
             std::llround(slow) % std::llround(fast) == 0;
    r.detail = "dt " + sim::format_double(cfg.dt) + " s, loops at " +
               sim::format_double(c.translational_rate_hz) + " Hz and " +
               sim::format_double(c.rotational_rate_hz) + " Hz";
    if (!r.pass) r.detail += ": dt must divide both loop periods and the slow period must be a multiple of the fast one";
  });
  check("simulation settings", [&](RuleResult& r) {
    r.pass = cfg.duration > 0.0 && cfg.decimation >= 1 && cfg.divergence_limit > 0.0 &&
             cfg.initial_position_offset.allFinite() &&
             (cfg.trajectory.kind == sim::TrajectoryKind::kHover || cfg.trajectory.period > 0.0);
    if (!r.pass) r.detail = "duration, decimation, divergence limit and trajectory period must be positive";
  });
  return rules;
}

int cmd_validate(const fs::path& config_path, std::ostream& out, std::ostream& err) {
  sim::SimConfig cfg;
  try {
    cfg = config_path.empty() ? sim::SimConfig{} : config::load_config(config_path);
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  bool all = true;
  for (const auto& rule : validation_rules(cfg)) {
    out << (rule.pass ? "PASS  " : "FAIL  ") << rule.name << " (" << rule.detail << ")\n";
    all = all && rule.pass;
  }
  return all ? kExitOk : kExitValidation;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Octocopter voltage-drop disturbance rejection simulator"};
  app.require_subcommand(1);

  RunManifest manifest;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) manifest.output_dir = env;
  std::vector<std::string> variant_names;
  std::uint64_t seed = 0;
  double duration = 0.0;
  int decimation = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", manifest.config_path, "Config file (JSON with comments)");
    cmd->add_option("--out", manifest.output_dir,
                    std::string("Output directory (default: $") + kOutputDirEnv + " or ./out)");
    cmd->add_option("--variant", variant_names,
                    "Controller variant: baseline, integrator, vdo, ndo (repeatable)");
    cmd->add_option("--seed", seed, "Torque-noise seed");
    cmd->add_option("--duration", duration, "Simulated time in seconds");
    cmd->add_option("--decimate", decimation, "Physics ticks per logged record");
  };

  CLI::App* run = app.add_subcommand("run", "Run one scenario");
  add_common(run);
  CLI::App* compare = app.add_subcommand("compare", "Compare variants on one disturbance realization");
  add_common(compare);
  CLI::App* validate = app.add_subcommand("validate", "Check a config against the static invariants");
  std::filesystem::path validate_path;
  validate->add_option("--config", validate_path, "Config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (validate->parsed()) return cmd_validate(validate_path, std::cout, std::cerr);

  CLI::App* active = run->parsed() ? run : compare;
  for (const auto& name : variant_names) {
    const auto v = control::parse_variant(name);
    if (!v) {
      std::cerr << "unknown variant '" << name << "'\n";
      return kExitUsage;
    }
    manifest.variants.push_back(*v);
  }
  if (active->count("--seed")) manifest.seed = seed;
  if (active->count("--duration")) manifest.duration = duration;
  if (active->count("--decimate")) manifest.decimation = decimation;

  return run->parsed() ? cmd_run(manifest, std::cout, std::cerr)
                       : cmd_compare(manifest, std::cout, std::cerr);
}

}  // namespace octo::cli
