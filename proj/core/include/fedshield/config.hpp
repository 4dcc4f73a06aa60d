#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "fedshield/experiment.hpp"

namespace fedshield::config {

// A flat `--key value` override; keys are dotted paths into the config file
// (`lmtv.beta`) or one of the short aliases `beta`, `theta`.
struct Override {
  std::string key;
  std::string value;
};

// Parses a TOML experiment description, applies overrides in order and
// validates. Unknown keys and type mismatches throw ConfigError naming the
// field.
fl::ExperimentConfig parse(std::string_view toml_text,
                           std::span<const Override> overrides = {});
// load() additionally resolves relative IDX paths against the file's directory.
fl::ExperimentConfig load(const std::filesystem::path& path,
                          std::span<const Override> overrides = {});

// Canonical TOML rendering; parse(render(c)) reproduces c.
std::string render(const fl::ExperimentConfig& cfg);

// Resolves an alias to its dotted key.
std::string canonical_key(std::string_view key);

}  // namespace fedshield::config
