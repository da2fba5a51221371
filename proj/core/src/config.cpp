#include "octo/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "octo/errors.hpp"

namespace octo::config {

using nlohmann::json;

namespace {

// Reads keys out of one JSON object and rejects the ones nobody asked for.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_ + " must be an object");
  }

  // Rejects keys that no read() asked for.
  void finish() const {
    for (const auto& item : node_.items()) {
      if (!seen_.count(item.key())) {
        throw ConfigError("unknown key " + qualified(item.key()));
      }
    }
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  void read(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(qualified(key) + " must be a number");
      out = v->get<double>();
    }
  }

  void read(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(qualified(key) + " must be a boolean");
      out = v->get<bool>();
    }
  }

  void read(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(qualified(key) + " must be an integer");
      out = v->get<int>();
    }
  }

  void read(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) {
        throw ConfigError(qualified(key) + " must be a non-negative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }

  void read(const std::string& key, Vec3& out) {
    if (const json* v = find(key)) {
      if (!v->is_array() || v->size() != 3) {
        throw ConfigError(qualified(key) + " must be an array of 3 numbers");
      }
      for (int i = 0; i < 3; ++i) {
        if (!(*v)[static_cast<std::size_t>(i)].is_number()) {
          throw ConfigError(qualified(key) + " must be an array of 3 numbers");
        }
        out(i) = (*v)[static_cast<std::size_t>(i)].get<double>();
      }
    }
  }

  void read(const std::string& key, observers::RowVec3& out) {
    Vec3 tmp = out.transpose();
    read(key, tmp);
    out = tmp.transpose();
  }

  // Diagonal gain matrices are written as their diagonal.
  void read_diagonal(const std::string& key, Mat3& out) {
    Vec3 diag = out.diagonal();
    read(key, diag);
    out = diag.asDiagonal();
  }

  void read_degrees(const std::string& key, double& radians) {
    double deg = radians * 180.0 / geom::kPi;
    read(key, deg);
    radians = deg * geom::kPi / 180.0;
  }

  template <typename Fn>
  void section(const std::string& key, Fn&& fn) {
    if (const json* v = find(key)) {
      Section child(*v, qualified(key));
      fn(child);
      child.finish();
    }
  }

  std::string qualified(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json& node_;
  std::string path_;
  std::set<std::string> seen_;
};

json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
json diag(const Mat3& m) { return vec(m.diagonal()); }

}  // namespace

namespace {

sim::SimConfig parse_document(const json& root) {
  sim::SimConfig cfg;
  Section top(root, "");
  int schema = 0;
  if (!top.find("schema_version")) throw ConfigError("schema_version is required");
  top.read("schema_version", schema);
  if (schema != kSchemaVersion) {
    throw ConfigError("unsupported schema_version " + std::to_string(schema) +
                      " (expected " + std::to_string(kSchemaVersion) + ")");
  }

  top.section("vehicle", [&](Section& s) {
    auto& v = cfg.vehicle;
    s.read("mass", v.mass);
    s.read("gravity", v.gravity);
    if (const json* inertia = s.find("inertia")) {
      if (inertia->is_array() && inertia->size() == 3 && (*inertia)[0].is_array()) {
        for (int i = 0; i < 3; ++i) {
          const json& row = (*inertia)[static_cast<std::size_t>(i)];
          if (!row.is_array() || row.size() != 3) {
            throw ConfigError("vehicle.inertia must be a 3-vector diagonal or a 3x3 matrix");
          }
          for (int j = 0; j < 3; ++j) v.inertia(i, j) = row[static_cast<std::size_t>(j)].get<double>();
        }
      } else if (inertia->is_array() && inertia->size() == 3) {
        v.inertia = Vec3((*inertia)[0].get<double>(), (*inertia)[1].get<double>(),
                         (*inertia)[2].get<double>()).asDiagonal();
      } else {
        throw ConfigError("vehicle.inertia must be a 3-vector diagonal or a 3x3 matrix");
      }
    }
    s.read("arm_length", v.arm_length);
    s.read("yaw_moment_coeff", v.yaw_moment_coeff);
    s.read("rotor_max_thrust", v.rotor_max_thrust);
    s.read("use_allocation", v.use_allocation);
    s.section("motor_lag", [&](Section& m) {
      m.read("enabled", v.motor_lag.enabled);
      m.read("time_constant", v.motor_lag.time_constant);
    });
    s.section("coaxial_loss", [&](Section& m) {
      m.read("enabled", v.coaxial_loss.enabled);
      m.read("efficiency", v.coaxial_loss.efficiency);
    });
  });

  top.section("battery", [&](Section& s) {
    auto& b = cfg.battery;
    s.read("enabled", b.enabled);
    s.read("nominal_voltage", b.nominal_voltage);
    s.read("delta_f0", b.delta_f0);
    s.read("k_d", b.k_d);
    s.read("tau_b", b.tau_b);
    s.read("mu", b.mu);
  });

  top.section("torque_disturbance", [&](Section& s) {
    auto& d = cfg.torque_disturbance;
    s.read("enabled", cfg.torque_disturbance_enabled);
    s.read("bias", d.bias);
    s.read("noise_amplitude", d.noise_amplitude);
    s.read("noise_cutoff_hz", d.noise_cutoff_hz);
    s.read("knot_rate_hz", d.knot_rate_hz);
    s.read("epsilon", d.epsilon);
  });

  top.section("control", [&](Section& s) {
    auto& c = cfg.control;
    if (const json* v = s.find("variant")) {
      const auto parsed = v->is_string() ? control::parse_variant(v->get<std::string>())
                                         : std::nullopt;
      if (!parsed) throw ConfigError("control.variant must be one of baseline, integrator, vdo, ndo");
      c.variant = *parsed;
    }
    if (const json* v = s.find("torque_estimator")) {
      const auto parsed = v->is_string()
                              ? control::parse_torque_estimator(v->get<std::string>())
                              : std::nullopt;
      if (!parsed) throw ConfigError("control.torque_estimator must be one of smo, none, oracle");
      c.torque_estimator = *parsed;
    }
    s.read_diagonal("kp", c.translational.kp);
    s.read_diagonal("kv", c.translational.kv);
    s.read_diagonal("k_eta", c.rotational.k_eta);
    s.read_diagonal("k_pp", c.rotational.k_pp);
    s.read_diagonal("k_ii", c.rotational.k_ii);
    s.read_degrees("tilt_max_deg", c.tilt_max);
    s.read("thrust_min_factor", c.thrust_min_factor);
    s.read("thrust_max_factor", c.thrust_max_factor);
    s.read("translational_rate_hz", c.translational_rate_hz);
    s.read("rotational_rate_hz", c.rotational_rate_hz);
    s.read("rate_feedforward", c.rate_feedforward);
    s.read("rate_feedforward_cutoff_hz", c.rate_feedforward_cutoff_hz);
  });

  top.section("observers", [&](Section& s) {
    auto& c = cfg.control;
    s.section("vdo", [&](Section& o) { o.read("zeta", c.vdo_zeta); });
    s.section("ndo", [&](Section& o) { o.read_diagonal("gain", c.ndo_gain); });
    s.section("integrator", [&](Section& o) {
      o.read_diagonal("gain", c.integrator_gain);
      o.read("clamp", c.integrator_clamp);
    });
    s.section("smo", [&](Section& o) {
      o.read("l1", c.smo.l1);
      o.read("l2", c.smo.l2);
      o.read("l3", c.smo.l3);
      o.read("t0", c.smo.t0);
      o.read("epsilon", c.smo.epsilon);
    });
  });

  top.section("sim", [&](Section& s) {
    s.read("dt", cfg.dt);
    s.read("duration", cfg.duration);
    s.read("seed", cfg.seed);
    s.read("decimation", cfg.decimation);
    s.read("divergence_limit", cfg.divergence_limit);
    s.read("initial_position_offset", cfg.initial_position_offset);
    s.section("trajectory", [&](Section& t) {
      if (const json* v = t.find("kind")) {
        const std::string kind = v->is_string() ? v->get<std::string>() : "";
        if (kind == "circle") {
          cfg.trajectory.kind = sim::TrajectoryKind::kCircle;
        } else if (kind == "hover") {
          cfg.trajectory.kind = sim::TrajectoryKind::kHover;
        } else {
          throw ConfigError("sim.trajectory.kind must be circle or hover");
        }
      }
      t.read("period", cfg.trajectory.period);
      t.read("radius", cfg.trajectory.radius);
      t.read("altitude", cfg.trajectory.altitude);
      t.read("z_amplitude", cfg.trajectory.z_amplitude);
    });
  });

  top.finish();
  return cfg;
}

}  // namespace

sim::SimConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end(), nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return parse_document(root);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config has a value of the wrong type: ") + e.what());
  }
}

sim::SimConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string dump_config(const sim::SimConfig& cfg) {
  const auto& v = cfg.vehicle;
  const auto& c = cfg.control;
  json inertia = json::array();
  for (int i = 0; i < 3; ++i) inertia.push_back(vec(v.inertia.row(i).transpose()));

  json root = {
      {"schema_version", kSchemaVersion},
      {"vehicle",
       {{"mass", v.mass},
        {"gravity", v.gravity},
        {"inertia", inertia},
        {"arm_length", v.arm_length},
        {"yaw_moment_coeff", v.yaw_moment_coeff},
        {"rotor_max_thrust", v.rotor_max_thrust},
        {"use_allocation", v.use_allocation},
        {"motor_lag", {{"enabled", v.motor_lag.enabled}, {"time_constant", v.motor_lag.time_constant}}},
        {"coaxial_loss",
         {{"enabled", v.coaxial_loss.enabled}, {"efficiency", v.coaxial_loss.efficiency}}}}},
      {"battery",
       {{"enabled", cfg.battery.enabled},
        {"nominal_voltage", cfg.battery.nominal_voltage},
        {"delta_f0", cfg.battery.delta_f0},
        {"k_d", cfg.battery.k_d},
        {"tau_b", cfg.battery.tau_b},
        {"mu", cfg.battery.mu}}},
      {"torque_disturbance",
       {{"enabled", cfg.torque_disturbance_enabled},
        {"bias", vec(cfg.torque_disturbance.bias)},
        {"noise_amplitude", cfg.torque_disturbance.noise_amplitude},
        {"noise_cutoff_hz", cfg.torque_disturbance.noise_cutoff_hz},
        {"knot_rate_hz", cfg.torque_disturbance.knot_rate_hz},
        {"epsilon", cfg.torque_disturbance.epsilon}}},
      {"control",
       {{"variant", std::string(control::to_string(c.variant))},
        {"torque_estimator", std::string(control::to_string(c.torque_estimator))},
        {"kp", diag(c.translational.kp)},
        {"kv", diag(c.translational.kv)},
        {"k_eta", diag(c.rotational.k_eta)},
        {"k_pp", diag(c.rotational.k_pp)},
        {"k_ii", diag(c.rotational.k_ii)},
        {"tilt_max_deg", c.tilt_max * 180.0 / geom::kPi},
        {"thrust_min_factor", c.thrust_min_factor},
        {"thrust_max_factor", c.thrust_max_factor},
        {"translational_rate_hz", c.translational_rate_hz},
        {"rotational_rate_hz", c.rotational_rate_hz},
        {"rate_feedforward", c.rate_feedforward},
        {"rate_feedforward_cutoff_hz", c.rate_feedforward_cutoff_hz}}},
      {"observers",
       {{"vdo", {{"zeta", vec(c.vdo_zeta.transpose())}}},
        {"ndo", {{"gain", diag(c.ndo_gain)}}},
        {"integrator", {{"gain", diag(c.integrator_gain)}, {"clamp", c.integrator_clamp}}},
        {"smo",
         {{"l1", c.smo.l1},
          {"l2", c.smo.l2},
          {"l3", c.smo.l3},
          {"t0", c.smo.t0},
          {"epsilon", c.smo.epsilon}}}}},
      {"sim",
       {{"dt", cfg.dt},
        {"duration", cfg.duration},
        {"seed", cfg.seed},
        {"decimation", cfg.decimation},
        {"divergence_limit", cfg.divergence_limit},
        {"initial_position_offset", vec(cfg.initial_position_offset)},
        {"trajectory",
         {{"kind", cfg.trajectory.kind == sim::TrajectoryKind::kHover ? "hover" : "circle"},
          {"period", cfg.trajectory.period},
          {"radius", cfg.trajectory.radius},
          {"altitude", cfg.trajectory.altitude},
          {"z_amplitude", cfg.trajectory.z_amplitude}}}}},
  };
  return root.dump(2) + "\n";
}

}  // namespace octo::config
