#include "warplab/kv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <istream>

namespace warplab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::map<std::string, std::string> read_key_values(std::istream& is) {
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::ConfigError, "line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(ErrorKind::ConfigError, "line " + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, trim(line.substr(eq + 1))).second) {
      throw Error(ErrorKind::ConfigError, "key '" + key + "' repeated");
    }
  }
  return out;
}

std::string format_real(real x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.20Le", x);
  return buf;
}

real parse_real(const std::string& text, const std::string& key) {
  errno = 0;
  char* end = nullptr;
  const real v = std::strtold(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE) {
    throw Error(ErrorKind::ConfigError, "key '" + key + "': not a number: '" + text + "'");
  }
  return v;
}

long long parse_integer(const std::string& text, const std::string& key) {
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(text.c_str(), &end, 10);
  if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE) {
    throw Error(ErrorKind::ConfigError, "key '" + key + "': not an integer: '" + text + "'");
  }
  return v;
}

}  // namespace warplab
