#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "cavsim/engine.h"

namespace cavsim {

// Parses the scenario file form. Every key is checked against the schema;
// unknown keys, wrong types and failed cross-checks throw ConfigError with
// the JSON path of the offending field. Missing keys take their defaults.
ScenarioConfig parse_config(const nlohmann::json& doc);
ScenarioConfig load_config(const std::filesystem::path& path);

// Fully resolved configuration, defaults included. parse_config(to_json(c))
// reproduces c.
nlohmann::json to_json(const ScenarioConfig& config);

}  // namespace cavsim
