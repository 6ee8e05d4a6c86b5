#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>

namespace oracle {

// binary32 -> binary16 computed in double arithmetic from the value rather
// than by bit surgery. Ties go to the even significand (nearbyint under the
// default rounding mode).
inline std::uint16_t f32_to_f16(float f) {
  std::uint32_t raw = 0;
  std::memcpy(&raw, &f, sizeof raw);
  const std::uint16_t sign = static_cast<std::uint16_t>((raw >> 16) & 0x8000U);
  if (std::isnan(f)) {
    return static_cast<std::uint16_t>(sign | 0x7E00U);
  }
  const double a = std::fabs(static_cast<double>(f));
  if (a >= 65520.0) {
    return static_cast<std::uint16_t>(sign | 0x7C00U);
  }
  if (a < std::ldexp(1.0, -14)) {
    const double q = std::nearbyint(a / std::ldexp(1.0, -24));
    return static_cast<std::uint16_t>(sign | static_cast<std::uint16_t>(q));
  }
  int ex = 0;
  const double mant = std::frexp(a, &ex);  // a = mant * 2^ex, mant in [0.5, 1)
  int e = ex - 1;
  double q = std::nearbyint((mant * 2.0 - 1.0) * 1024.0);
  if (q == 1024.0) {
    q = 0.0;
    ++e;
  }
  if (e + 15 >= 31) {
    return static_cast<std::uint16_t>(sign | 0x7C00U);
  }
  return static_cast<std::uint16_t>(sign | static_cast<std::uint16_t>((e + 15) << 10) |
                                    static_cast<std::uint16_t>(q));
}

inline double f16_to_double(std::uint16_t h) {
  const double sign = (h & 0x8000U) != 0 ? -1.0 : 1.0;
  const int e = (h >> 10) & 0x1F;
  const int m = h & 0x3FF;
  if (e == 0x1F) {
    return m == 0 ? sign * INFINITY : NAN;
  }
  if (e == 0) {
    return sign * std::ldexp(static_cast<double>(m), -24);
  }
  return sign * std::ldexp(1024.0 + m, e - 25);
}

}  // namespace oracle
