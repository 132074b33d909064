#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "cbc/array.hpp"

namespace cbc {

/// Ordered key -> value pairs from a plain-text `key = value` file.
/// Blank lines and lines starting with '#' are ignored.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::filesystem::path& path);
std::string format_key_values(const KeyValues& kv);

/// Apply recognised keys onto `config`; unknown keys throw std::invalid_argument.
void apply_config_keys(FibreArrayConfig& config, const KeyValues& kv);
FibreArrayConfig config_from_key_values(const KeyValues& kv);
KeyValues config_to_key_values(const FibreArrayConfig& config);

FibreArrayConfig load_config(const std::filesystem::path& path);
void save_config(const FibreArrayConfig& config, const std::filesystem::path& path);

/// SHA-256 of the canonical key-value rendering.
std::string config_hash(const FibreArrayConfig& config);

/// JSON array of radians, index 0 = central fibre.
std::string phases_to_json(const PhaseVector& phases);
PhaseVector phases_from_json(const std::string& text);
PhaseVector load_phases(const std::filesystem::path& path);
void save_phases(const PhaseVector& phases, const std::filesystem::path& path);

/// The default 19-fibre configuration.
FibreArrayConfig default_config();

}  // namespace cbc
