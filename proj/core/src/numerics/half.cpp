#include "mlstm/numerics/half.hpp"

#include <bit>
#include <cstring>

#include "mlstm/common/error.hpp"

namespace mlstm::numerics {

namespace {

constexpr std::uint32_t kF32AbsMask = 0x7FFFFFFFU;
constexpr std::uint32_t kF32Inf = 0x7F800000U;
constexpr std::uint32_t kF32CanonicalNan = 0x7FC00000U;
// Smallest binary32 magnitude that rounds to binary16 infinity (65520).
constexpr std::uint32_t kOverflowThreshold = 0x477FF000U;
// 2^-14, the smallest binary16 normal.
constexpr std::uint32_t kMinNormal = 0x38800000U;
// 2^-25, half the smallest binary16 subnormal; ties to even resolve to zero.
constexpr std::uint32_t kHalfOfMinSubnormal = 0x33000000U;

}  // namespace

Half f32_to_f16(float x) noexcept {
  const auto bits = std::bit_cast<std::uint32_t>(x);
  const auto sign = static_cast<std::uint16_t>((bits >> 16) & 0x8000U);
  const std::uint32_t abs = bits & kF32AbsMask;

  if (abs >= kF32Inf) {
    return Half::from_bits(static_cast<std::uint16_t>(sign | (abs > kF32Inf ? 0x7E00U : 0x7C00U)));
  }
  if (abs >= kOverflowThreshold) {
    return Half::from_bits(static_cast<std::uint16_t>(sign | 0x7C00U));
  }
  if (abs >= kMinNormal) {
    // Round the 23-bit mantissa to 10 bits (ties to even), then rebias the
    // exponent from 127 to 15. A mantissa carry bumps the exponent naturally.
    const std::uint32_t rounded = abs + 0x0FFFU + ((abs >> 13) & 1U);
    return Half::from_bits(static_cast<std::uint16_t>(sign | ((rounded - 0x38000000U) >> 13)));
  }
  if (abs <= kHalfOfMinSubnormal) {
    return Half::from_bits(sign);
  }
  // Subnormal result: value = mant * 2^(e-150), target units of 2^-24.
  const std::uint32_t exponent = abs >> 23;
  const std::uint32_t mant = (abs & 0x007FFFFFU) | 0x00800000U;
  const std::uint32_t shift = 126U - exponent;  // in [14, 24]
  std::uint32_t q = mant >> shift;
  const std::uint32_t rem = mant & ((1U << shift) - 1U);
  const std::uint32_t halfway = 1U << (shift - 1U);
  if (rem > halfway || (rem == halfway && (q & 1U) != 0)) {
    ++q;
  }
  return Half::from_bits(static_cast<std::uint16_t>(sign | q));
}

float f16_to_f32(Half h) noexcept {
  const std::uint32_t sign = static_cast<std::uint32_t>(h.bits & 0x8000U) << 16;
  const std::uint32_t exponent = (h.bits >> 10) & 0x1FU;
  const std::uint32_t mant = h.bits & 0x03FFU;

  if (exponent == 0) {
    // Zero or subnormal; mant * 2^-24 is exact in binary32.
    const float magnitude = static_cast<float>(mant) * kHalfMinSubnormal;
    return std::bit_cast<float>(std::bit_cast<std::uint32_t>(magnitude) | sign);
  }
  if (exponent == 0x1FU) {
    return std::bit_cast<float>(sign | kF32Inf | (mant << 13));
  }
  return std::bit_cast<float>(sign | ((exponent + 112U) << 23) | (mant << 13));
}

void round_to_half(std::span<float> values) noexcept {
  float* data = values.data();
  const std::size_t n = values.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, data + i, sizeof bits);
    const std::uint32_t sign = bits & 0x80000000U;
    const std::uint32_t abs = bits & kF32AbsMask;

    const std::uint32_t normal = (abs + 0x0FFFU + ((abs >> 13) & 1U)) & 0xFFFFE000U;

    // Below 2^-14 the binary16 grid is uniform with spacing 2^-24, which is
    // exactly the binary32 ulp of values in [0.5, 1).
    float magnitude;
    std::memcpy(&magnitude, &abs, sizeof magnitude);
    const float shifted = (magnitude + 0.5F) - 0.5F;
    std::uint32_t subnormal;
    std::memcpy(&subnormal, &shifted, sizeof subnormal);

    std::uint32_t out = abs < kMinNormal ? subnormal : normal;
    out = abs >= kOverflowThreshold ? kF32Inf : out;
    out = abs > kF32Inf ? kF32CanonicalNan : out;
    out |= sign;
    std::memcpy(data + i, &out, sizeof out);
  }
}

bool fits_half(std::span<const float> values) noexcept {
  bool ok = true;
  for (const float v : values) {
    const std::uint32_t abs = std::bit_cast<std::uint32_t>(v) & kF32AbsMask;
    ok &= abs < kOverflowThreshold;
  }
  return ok;
}

void to_half(std::span<const float> src, std::span<Half> dst) {
  if (src.size() != dst.size()) {
    throw ShapeError("to_half: size mismatch");
  }
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = f32_to_f16(src[i]);
  }
}

void to_float(std::span<const Half> src, std::span<float> dst) {
  if (src.size() != dst.size()) {
    throw ShapeError("to_float: size mismatch");
  }
  for (std::size_t i = 0; i < src.size(); ++i) {
    dst[i] = f16_to_f32(src[i]);
  }
}

}  // namespace mlstm::numerics
