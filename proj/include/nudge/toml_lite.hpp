#pragma once

#include "json.hpp"

#include <string>

namespace nudge {

// Parses the TOML subset used by experiment config files into JSON:
// [table] and [dotted.table] headers, key = value pairs, basic strings,
// integers, floats, booleans, and single-line arrays of those. Comments start
// with '#'. Throws ConfigError with a line number on anything else.
nlohmann::json parse_toml_lite(const std::string& text);

} // namespace nudge
