#pragma once

#include <cstdint>
#include <span>

namespace mlstm::numerics {

/// IEEE 754 binary16 value held as its raw bit pattern.
///
/// All arithmetic on halves in this project happens after exact widening to
/// binary32; the type exists to pin storage and rounding, not to compute.
struct Half {
  std::uint16_t bits = 0;

  static constexpr Half from_bits(std::uint16_t b) noexcept { return Half{b}; }

  constexpr bool is_nan() const noexcept {
    return (bits & 0x7C00U) == 0x7C00U && (bits & 0x03FFU) != 0;
  }
  constexpr bool is_inf() const noexcept { return (bits & 0x7FFFU) == 0x7C00U; }
  constexpr bool is_finite() const noexcept { return (bits & 0x7C00U) != 0x7C00U; }
  constexpr bool sign() const noexcept { return (bits & 0x8000U) != 0; }

  friend constexpr bool operator==(Half, Half) noexcept = default;
};

inline constexpr float kHalfMax = 65504.0F;
inline constexpr float kHalfMinSubnormal = 0x1p-24F;
inline constexpr float kHalfMinNormal = 0x1p-14F;

/// Round-to-nearest-even narrowing. Overflow goes to +/-inf, NaN stays NaN
/// (canonical quiet NaN, sign kept), subnormals are honored.
Half f32_to_f16(float x) noexcept;

/// Exact widening.
float f16_to_f32(Half h) noexcept;

/// f16_to_f32(f32_to_f16(x)).
inline float round_to_half(float x) noexcept { return f16_to_f32(f32_to_f16(x)); }

/// In-place round_to_half over a buffer. Branch-free float-domain formulation
/// that vectorizes; bit-identical to the scalar route for every input.
void round_to_half(std::span<float> values) noexcept;

/// True when every element survives narrowing as a finite half.
bool fits_half(std::span<const float> values) noexcept;

void to_half(std::span<const float> src, std::span<Half> dst);
void to_float(std::span<const Half> src, std::span<float> dst);

}  // namespace mlstm::numerics
