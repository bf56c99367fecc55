#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "safesynth/pipeline.hpp"

namespace safesynth {

/// Parses a YAML configuration document. Unknown keys, missing required keys
/// and invalid values throw ConfigError carrying the key path.
SynthesisConfig ParseConfig(const std::string& text);
SynthesisConfig LoadConfig(const std::filesystem::path& path);

/// Fully resolved configuration with every default spelled out.
nlohmann::json ConfigToJson(const SynthesisConfig& config);

/// Hex SHA-256 of the canonical ConfigToJson dump.
std::string ConfigHash(const SynthesisConfig& config);

}  // namespace safesynth
