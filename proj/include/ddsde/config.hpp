#pragma once

#include "json.hpp"

#include <filesystem>
#include <string_view>

namespace ddsde {

/// Parses the flat experiment file format:
///
///     # comment
///     alpha = [1.2, 1.5, 1.8]
///     drift = { kind = "nemytskii_sat", kappa = 1.0, direction = "sine" }
///     T = 0.5
///
/// One `key = value` per line at top level; values are numbers, strings,
/// true/false, lists `[...]` and inline tables `{...}` (which may span lines).
/// Duplicate keys and syntax errors throw ConfigError with a line number.
nlohmann::json parse_config_text(std::string_view text);

nlohmann::json load_config_file(const std::filesystem::path& path);

} // namespace ddsde
