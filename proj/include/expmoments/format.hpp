#pragma once

#include <charconv>
#include <span>
#include <string>

namespace expmoments {

/// Shortest round-trip decimal form; locale independent.
inline std::string shortest(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

/// Entries joined by `sep` in shortest form.
inline std::string join_numbers(std::span<const double> values, char sep = ';') {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += sep;
    out += shortest(values[i]);
  }
  return out;
}

}  // namespace expmoments
