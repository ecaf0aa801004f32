#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wavestack/config.hpp"

namespace wavestack {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_solver = 2, exit_verification = 3 };

enum class Command { validate, thresholds, simulate, follower, leader, verify, sweep };

/// Throws ConfigError for unknown names.
Command parse_command(const std::string& name);
const char* to_string(Command command);

/// Command line settings; flags add to (never clear) the config's flags.
struct RunOptions {
  std::filesystem::path config_path;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  bool allow_degenerate = false;
  bool dense_oracle = false;
  int jobs = 1;
};

/// Loads and validates the config, runs the command, writes its artifacts and
/// manifest.txt into the output directory and returns the exit code. Messages
/// go to `log`.
int run(Command command, const RunOptions& options, std::ostream& log);

/// Shortest decimal text that reads back to the same double (at most 17
/// significant digits), as used in every CSV.
std::string csv_number(double x);

}  // namespace wavestack
