#pragma once

// Command-line entry points. Exit codes: 0 success, 1 validation-suite
// failure, 2 configuration error, 3 runtime/experiment failure.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ncps/config.hpp"

namespace ncps {

enum ExitCode : int { kExitOk = 0, kExitValidationFailed = 1, kExitConfigError = 2, kExitRuntimeError = 3 };

/// Writes trajectory_<SCHEME>_path<p>.csv for every requested scheme and path,
/// plus simulate_summary.csv.
int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Writes mse.csv, rates.csv and plotdata.csv.
int cmd_converge(const RunConfig& cfg, unsigned workers, std::ostream& out, std::ostream& err);

int cmd_config_dump(const RunConfig& cfg, std::ostream& out);

struct ValidateSettings {
  bool quick = false;
  SolverOptions solver;
  unsigned workers = 1;
  std::uint64_t seed = 20190615;
};

/// Built-in self-check suite; prints one line per check.
int cmd_validate(const ValidateSettings& settings, std::ostream& out);

/// Full CLI: `ncps <simulate|converge|validate|config-dump> [flags] [key=value ...]`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ncps
