#pragma once

#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace eqstream {

/// Formats a double with 17 significant digits, enough to round-trip any
/// finite value exactly. Shared by the CSV, SVG, cell and sequence writers
/// so every emitted byte is deterministic.
inline std::string format_g17(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

inline std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string::size_type start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

inline double parse_double(const std::string& token, const std::string& context) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(token, &used);
  } catch (const std::exception&) {
    throw std::runtime_error(context + ": expected a number, got '" + token + "'");
  }
  if (used != token.size())
    throw std::runtime_error(context + ": trailing characters in '" + token + "'");
  return value;
}

inline std::uint64_t parse_u64(const std::string& token, const std::string& context) {
  std::size_t used = 0;
  std::uint64_t value = 0;
  try {
    value = std::stoull(token, &used);
  } catch (const std::exception&) {
    throw std::runtime_error(context + ": expected an integer, got '" + token + "'");
  }
  if (used != token.size())
    throw std::runtime_error(context + ": trailing characters in '" + token + "'");
  return value;
}

}  // namespace eqstream
