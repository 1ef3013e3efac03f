#pragma once

#include <charconv>
#include <cstdint>
#include <string>

namespace agsam::csv {

// Shortest representation that round-trips the exact 64-bit value; keeps
// emitted metric files byte-stable.
inline std::string format(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format(std::uint64_t v) { return std::to_string(v); }
inline std::string format(int v) { return std::to_string(v); }

}  // namespace agsam::csv
