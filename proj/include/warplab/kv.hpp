#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "warplab/types.hpp"

namespace warplab {

/// Reads `key = value` lines; '#' starts a comment, blank lines are skipped.
/// Malformed or repeated keys raise ConfigError.
std::map<std::string, std::string> read_key_values(std::istream& is);

/// Round-trippable scientific notation for a long double.
std::string format_real(real x);
/// strtold with full-string validation (ConfigError naming `key`).
real parse_real(const std::string& text, const std::string& key);
long long parse_integer(const std::string& text, const std::string& key);

}  // namespace warplab
