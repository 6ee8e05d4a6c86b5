#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>

namespace mlstm::numerics {

// Branch-free binary32 exp, sigmoid and tanh built from + - * / only, so loops
// over them vectorize and the results are the same on every IEEE-754 host
// (libm implementations differ in the last bit). Maximum error is about 2 ulp
// for exp and a few ulp for the derived functions.

inline float exp_f32(float arg) {
  const float x = std::min(std::max(arg, -87.0F), 88.0F);
  // n = round(x / ln 2) via the 1.5 * 2^23 shifter.
  const float shifted = x * 1.44269504088896341F + 12582912.0F;
  const float n = shifted - 12582912.0F;
  // Two-part ln 2 keeps the reduction exact for |n| <= 127.
  float r = x - n * 0.693359375F;
  r = r - n * -2.12194440e-4F;
  const float z = r * r;
  float p = 1.9875691500e-4F;
  p = p * r + 1.3981999507e-3F;
  p = p * r + 8.3334519073e-3F;
  p = p * r + 4.1665795894e-2F;
  p = p * r + 1.6666665459e-1F;
  p = p * r + 5.0000001201e-1F;
  p = p * z + r + 1.0F;
  const auto bits = static_cast<std::uint32_t>(static_cast<std::int32_t>(n) + 127) << 23;
  return p * std::bit_cast<float>(bits);
}

inline float sigmoid_f32(float x) { return 1.0F / (1.0F + exp_f32(-x)); }

inline float tanh_f32(float x) {
  const float ax = std::max(x, -x);
  // Small arguments: odd polynomial; elsewhere 1 - 2 / (e^{2|x|} + 1).
  const float z = x * x;
  float p = -5.70498872745e-3F;
  p = p * z + 2.06390887954e-2F;
  p = p * z - 5.37397155531e-2F;
  p = p * z + 1.33314422036e-1F;
  p = p * z - 3.33332819422e-1F;
  const float small = p * z * x + x;
  const float e = exp_f32(2.0F * std::min(ax, 10.0F));
  const float large_abs = 1.0F - 2.0F / (e + 1.0F);
  const float large = x < 0.0F ? -large_abs : large_abs;
  return ax < 0.625F ? small : large;
}

}  // namespace mlstm::numerics
