#pragma once

#include <iosfwd>
#include <string>

#include "radcom/scene.hpp"

namespace radcom {

/// Parses a scenario config from JSON text. Field names mirror SystemConfig
/// (snake_case, dB fields suffixed _db/_dbm); unknown keys are rejected.
/// cross_corr_limit accepts a number or the string "inf".
/// Missing fields keep their defaults. Throws ConfigError on any problem.
SystemConfig load_config_json(const std::string& text);

/// Reads and parses a config file. Throws ConfigError.
SystemConfig load_config_file(const std::string& path);

/// Serializes a config back to JSON (round-trips through load_config_json).
std::string config_to_json(const SystemConfig& cfg);

} // namespace radcom
