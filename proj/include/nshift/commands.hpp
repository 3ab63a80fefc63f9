#pragma once

// Command implementations behind the CLI. Each returns the run report and
// the process exit status; nothing here writes to stdout.

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "nshift/config.hpp"
#include "nshift/identities.hpp"

namespace nshift {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 1,
  kExitSelftestFailed = 1,
  kExitInconclusive = 2,
  kExitRuntimeAbort = 3,
};

struct CommandOptions {
  std::string command;
  std::optional<std::string> config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  bool perturb_riemann_sign = false;
};

struct CommandResult {
  int exit_code = kExitOk;
  nlohmann::json report;
};

CommandResult cmd_check(const ScenarioConfig& cfg, const std::string& out_dir);
CommandResult cmd_blowup(const ScenarioConfig& cfg, const std::string& out_dir);
CommandResult cmd_shift(const ScenarioConfig& cfg, const std::string& out_dir);
CommandResult cmd_rank(const ScenarioConfig& cfg, const std::string& out_dir);
CommandResult cmd_selftest(const SelftestOptions& opt, const std::string& out_dir);

/// Loads the config, dispatches, and fills "command" and "duration_ms".
/// Config errors become exit 1 with an "error" entry in the report.
CommandResult run_command(const CommandOptions& opt);

}  // namespace nshift
