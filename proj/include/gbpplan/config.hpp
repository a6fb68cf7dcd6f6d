#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gbpplan/scenario.hpp"

namespace gbpplan {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sets one parameter from its textual form. Key names are the dotted flat
/// schema (see config_entries); `robot` and `obstacle` are repeatable and
/// append. Throws ConfigError naming the offending key.
void apply_config_value(ScenarioConfig& cfg, const std::string& key, const std::string& value);

/// Parses `key = value` lines ('#' comments, blank lines allowed). Errors
/// carry `source_name:line:`.
ScenarioConfig parse_config_text(const std::string& text, const std::string& source_name);
ScenarioConfig load_config_file(const std::string& path);

/// Every effective parameter in canonical order, values formatted so a
/// re-parse reproduces the config exactly (doubles via %.17g).
std::vector<std::pair<std::string, std::string>> config_entries(const ScenarioConfig& cfg);

/// Re-parseable echo of the full config.
std::string render_config(const ScenarioConfig& cfg);

/// JSON echo: one string-valued member per key; repeatable keys become
/// arrays. Lossless against config_from_json.
nlohmann::json config_to_json(const ScenarioConfig& cfg);
ScenarioConfig config_from_json(const nlohmann::json& j);

}  // namespace gbpplan
