#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "octo/sim.hpp"

namespace octo::config {

inline constexpr int kSchemaVersion = 1;

// Parses a JSON config (// and /* */ comments allowed). Every section and
// key is optional and falls back to the SimConfig defaults; unknown keys and
// a missing or unsupported schema_version are ConfigError. The result is not
// validated; call SimConfig::validate() or the CLI validate command.
sim::SimConfig parse_config(std::string_view text);
sim::SimConfig load_config(const std::filesystem::path& path);

// Serializes every field, so parse_config(dump_config(c)) reproduces c.
std::string dump_config(const sim::SimConfig& cfg);

}  // namespace octo::config
