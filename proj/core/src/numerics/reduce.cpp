#include "mlstm/numerics/reduce.hpp"

#include <cmath>

#include "mlstm/common/error.hpp"
#include "mlstm/numerics/tensor.hpp"

namespace mlstm::numerics {

std::string format_dims(std::span<const std::size_t> dims) {
  std::string out = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i != 0) {
      out += "x";
    }
    out += std::to_string(dims[i]);
  }
  return out + "]";
}

TensorF16 to_f16(const TensorF32& t) {
  TensorF16 out(t.dims());
  to_half(t.data(), out.data());
  return out;
}

TensorF32 to_f32(const TensorF16& t) {
  TensorF32 out(t.dims());
  to_float(t.data(), out.data());
  return out;
}

float reduce_f32(std::span<const float> values) {
  if (values.empty()) {
    throw ContractViolation("reduce_f32: empty input");
  }
  float acc = values[0];
  for (std::size_t i = 1; i < values.size(); ++i) {
    acc += values[i];
  }
  return acc;
}

float sum_squares_f32(std::span<const float> values) {
  if (values.empty()) {
    throw ContractViolation("sum_squares_f32: empty input");
  }
  float acc = 0.0F;
  for (const float v : values) {
    acc += v * v;
  }
  return acc;
}

bool all_finite(std::span<const float> values) noexcept {
  bool ok = true;
  for (const float v : values) {
    ok &= std::isfinite(v);
  }
  return ok;
}

}  // namespace mlstm::numerics
