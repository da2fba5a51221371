#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "octo/control.hpp"
#include "octo/sim.hpp"

namespace octo::cli {

// Process exit codes. Documented in the README; keep them stable.
enum ExitCode : int {
  kExitOk = 0,
  kExitIo = 1,          // output directory or file could not be written
  kExitUsage = 2,       // bad command line
  kExitConfig = 3,      // config unreadable or violates an invariant
  kExitDiverged = 4,    // closed loop blew up; partial log is marked
  kExitValidation = 5,  // `validate` found at least one failing rule
};

// Environment variable consulted for the output directory when --out is not
// given.
inline constexpr const char* kOutputDirEnv = "OCTOSIM_OUT";

struct RunManifest {
  std::filesystem::path config_path;  // empty: built-in defaults
  std::filesystem::path output_dir = "out";
  std::vector<control::Variant> variants;  // empty: the config's variant
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  std::optional<int> decimation;
};

// Loads the manifest's config and applies the command-line overrides.
// Throws ConfigError.
sim::SimConfig resolve_config(const RunManifest& manifest);

// Runs one scenario and writes records.csv, metrics.kv and metrics.json
// into the output directory.
int cmd_run(const RunManifest& manifest, std::ostream& out, std::ostream& err);

// Runs every listed variant (at least two) on one shared disturbance
// realization, each into <out>/<variant>/, and writes the RMSE/MAE table of
// the z error to comparison.txt and comparison.kv.
int cmd_compare(const RunManifest& manifest, std::ostream& out, std::ostream& err);

struct RuleResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Static checks: positive gains, zeta*Theta > 0 over the tilt envelope,
// k_d / tau_b <= mu, the torque disturbance bound and the loop-rate
// contract.
std::vector<RuleResult> validation_rules(const sim::SimConfig& cfg);

int cmd_validate(const std::filesystem::path& config_path, std::ostream& out,
                 std::ostream& err);

// (1 - a / b) * 100: how much smaller a is than b, in percent.
double improvement_percent(double a, double b);

struct ComparisonRow {
  control::Variant variant;
  std::string rmse;  // as emitted, fixed 6 decimals
  std::string mae;
};

struct Improvement {
  control::Variant variant;    // the one that improves (vdo when present)
  control::Variant reference;  // the row it is measured against
  std::string rmse_percent;  // 2 decimals, from the emitted row values
  std::string mae_percent;
};

// Fixed-precision rows, then the improvement of the reference variant (vdo
// when present, otherwise the first row) over every other row, recomputed
// from the emitted strings.
std::vector<ComparisonRow> comparison_rows(
    const std::vector<std::pair<control::Variant, sim::Metrics>>& results);
std::vector<Improvement> comparison_improvements(const std::vector<ComparisonRow>& rows);

// Entry point behind the octosim binary.
int main_entry(int argc, char** argv);

}  // namespace octo::cli
