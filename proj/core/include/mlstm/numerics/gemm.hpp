#pragma once

#include <cstddef>
#include <vector>

#include "mlstm/numerics/tensor.hpp"

namespace mlstm::numerics {

enum class Transpose : bool { kNo = false, kYes = true };
enum class Accumulate : bool { kOverwrite = false, kAdd = true };

/// Non-owning row-major view with an explicit row stride (in elements).
struct ConstMatrixView {
  const float* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t stride = 0;

  float operator()(std::size_t r, std::size_t c) const { return data[r * stride + c]; }
};

struct MatrixView {
  float* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t stride = 0;

  float& operator()(std::size_t r, std::size_t c) const { return data[r * stride + c]; }
  operator ConstMatrixView() const { return {data, rows, cols, stride}; }  // NOLINT
};

ConstMatrixView as_matrix(const TensorF32& t);
MatrixView as_matrix(TensorF32& t);

/// op(B) repacked into zero-padded column panels for the micro-kernel. Weight
/// matrices reused across many time steps are packed once.
class PackedRhs {
 public:
  PackedRhs() = default;
  PackedRhs(ConstMatrixView b, Transpose tb);

  std::size_t depth() const noexcept { return depth_; }  // k
  std::size_t cols() const noexcept { return cols_; }    // n
  const float* panel(std::size_t p) const noexcept { return data_.data() + p * depth_ * kPanelWidth; }

  static constexpr std::size_t kPanelWidth = 32;

 private:
  std::size_t depth_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

/// C = op(A) * op(B) (or C += when accumulating).
///
/// Each output element is produced by one chain c <- c + a[i,k]*b[k,j] with k
/// strictly ascending, independent of the matrix shape, of the row's position,
/// and of how rows are split between callers. With binary16 operands the
/// products are exact in binary32, so the result is also independent of
/// whether the target fuses the multiply-add.
void gemm(ConstMatrixView a, Transpose ta, const PackedRhs& b, MatrixView c, Accumulate mode);
void gemm(ConstMatrixView a, Transpose ta, ConstMatrixView b, Transpose tb, MatrixView c,
          Accumulate mode);

/// FP16 storage and multiplication, FP32 accumulation.
TensorF32 gemm_mixed(const TensorF16& a, const TensorF16& b);

/// Same accumulation contract on binary32 operands.
TensorF32 gemm_f32(const TensorF32& a, const TensorF32& b);

}  // namespace mlstm::numerics
