#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fedshield/config.hpp"

namespace fedshield::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

// Smallest key the CLI will generate.
inline constexpr unsigned kMinCliKeyBits = 64;

struct KeygenOptions {
  unsigned bits = 2048;
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 1;
};

struct RunOptions {
  std::filesystem::path config_path;
  std::filesystem::path out_dir;
  std::vector<config::Override> overrides;
};

struct SweepOptions {
  RunOptions run;
  std::string axis;  // gamma | beta | theta
  std::vector<std::string> values;
};

// Turns trailing `--key value` / `--key=value` tokens into overrides.
// Throws ConfigError on a dangling key or a token without leading dashes.
std::vector<config::Override> parse_overrides(const std::vector<std::string>& args);

// Each returns a process exit code and reports to `out` / `err`.
int cmd_keygen(const KeygenOptions& opts, std::ostream& out, std::ostream& err);
int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err);
int cmd_sweep(const SweepOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace fedshield::cli
