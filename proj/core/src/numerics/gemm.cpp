#include "mlstm/numerics/gemm.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include "mlstm/common/error.hpp"

namespace mlstm::numerics {

namespace {

typedef float Vec16 __attribute__((vector_size(64)));

constexpr std::size_t kNr = PackedRhs::kPanelWidth;  // two Vec16 per row
constexpr std::size_t kMr = 12;
constexpr std::size_t kKc = 128;

inline Vec16 load16(const float* p) {
  Vec16 v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

inline void store16(float* p, Vec16 v) { std::memcpy(p, &v, sizeof v); }

// c[kMr x kNr] (row stride ldc) += packed_a[kc x kMr] * packed_b[kc x kNr]
void micro_kernel(std::size_t kc, const float* packed_a, const float* packed_b, float* c,
                  std::size_t ldc) {
  Vec16 acc[kMr][2];
  for (std::size_t r = 0; r < kMr; ++r) {
    acc[r][0] = load16(c + r * ldc);
    acc[r][1] = load16(c + r * ldc + 16);
  }
  for (std::size_t k = 0; k < kc; ++k) {
    const Vec16 b0 = load16(packed_b + k * kNr);
    const Vec16 b1 = load16(packed_b + k * kNr + 16);
    const float* a = packed_a + k * kMr;
#pragma GCC unroll 12
    for (std::size_t r = 0; r < kMr; ++r) {
      acc[r][0] += a[r] * b0;
      acc[r][1] += a[r] * b1;
    }
  }
  for (std::size_t r = 0; r < kMr; ++r) {
    store16(c + r * ldc, acc[r][0]);
    store16(c + r * ldc + 16, acc[r][1]);
  }
}

struct Dims {
  std::size_t m;
  std::size_t k;
};

Dims op_dims(ConstMatrixView v, Transpose t) {
  return t == Transpose::kYes ? Dims{v.cols, v.rows} : Dims{v.rows, v.cols};
}

void check_view(ConstMatrixView v, const char* name) {
  if (v.rows == 0 || v.cols == 0) {
    throw ShapeError(std::string("gemm: empty operand ") + name);
  }
  if (v.stride < v.cols) {
    throw ShapeError(std::string("gemm: stride smaller than width for ") + name);
  }
}

}  // namespace

ConstMatrixView as_matrix(const TensorF32& t) {
  if (t.rank() != 2) {
    throw ShapeError("expected a rank-2 tensor, got " + format_dims(t.dims()));
  }
  return {t.data().data(), t.rows(), t.cols(), t.cols()};
}

MatrixView as_matrix(TensorF32& t) {
  if (t.rank() != 2) {
    throw ShapeError("expected a rank-2 tensor, got " + format_dims(t.dims()));
  }
  return {t.data().data(), t.rows(), t.cols(), t.cols()};
}

PackedRhs::PackedRhs(ConstMatrixView b, Transpose tb) {
  check_view(b, "B");
  const Dims d = op_dims(b, tb);
  depth_ = d.m;
  cols_ = d.k;
  const std::size_t panels = (cols_ + kNr - 1) / kNr;
  data_.assign(panels * depth_ * kNr, 0.0F);
  for (std::size_t p = 0; p < panels; ++p) {
    float* out = data_.data() + p * depth_ * kNr;
    const std::size_t j0 = p * kNr;
    const std::size_t width = std::min(kNr, cols_ - j0);
    if (tb == Transpose::kNo) {
      for (std::size_t k = 0; k < depth_; ++k) {
        std::memcpy(out + k * kNr, b.data + k * b.stride + j0, width * sizeof(float));
      }
    } else {
      for (std::size_t j = 0; j < width; ++j) {
        const float* src = b.data + (j0 + j) * b.stride;
        for (std::size_t k = 0; k < depth_; ++k) {
          out[k * kNr + j] = src[k];
        }
      }
    }
  }
}

void gemm(ConstMatrixView a, Transpose ta, const PackedRhs& b, MatrixView c, Accumulate mode) {
  check_view(a, "A");
  const Dims da = op_dims(a, ta);
  const std::size_t m = da.m;
  const std::size_t k = da.k;
  const std::size_t n = b.cols();
  if (k != b.depth()) {
    throw ShapeError("gemm: inner dimensions differ (" + std::to_string(k) + " vs " +
                     std::to_string(b.depth()) + ")");
  }
  if (c.rows != m || c.cols != n || c.stride < n) {
    throw ShapeError("gemm: output is " + std::to_string(c.rows) + "x" + std::to_string(c.cols) +
                     ", expected " + std::to_string(m) + "x" + std::to_string(n));
  }

  if (mode == Accumulate::kOverwrite) {
    for (std::size_t i = 0; i < m; ++i) {
      std::fill_n(c.data + i * c.stride, n, 0.0F);
    }
  }

  std::vector<float> packed_a(kMr * kKc);
  float edge[kMr * kNr];
  const std::size_t panels = (n + kNr - 1) / kNr;

  for (std::size_t k0 = 0; k0 < k; k0 += kKc) {
    const std::size_t kc = std::min(kKc, k - k0);
    for (std::size_t i0 = 0; i0 < m; i0 += kMr) {
      const std::size_t mr = std::min(kMr, m - i0);
      // Pack op(A)[i0:i0+mr, k0:k0+kc] k-major, zero padding missing rows.
      float* pa = packed_a.data();
      if (mr < kMr) {
        std::fill_n(pa, kMr * kc, 0.0F);
      }
      if (ta == Transpose::kNo) {
        for (std::size_t r = 0; r < mr; ++r) {
          const float* src = a.data + (i0 + r) * a.stride + k0;
          for (std::size_t kk = 0; kk < kc; ++kk) {
            pa[kk * kMr + r] = src[kk];
          }
        }
      } else {
        for (std::size_t kk = 0; kk < kc; ++kk) {
          std::memcpy(pa + kk * kMr, a.data + (k0 + kk) * a.stride + i0, mr * sizeof(float));
        }
      }
      for (std::size_t p = 0; p < panels; ++p) {
        const std::size_t j0 = p * kNr;
        const std::size_t nr = std::min(kNr, n - j0);
        const float* pb = b.panel(p) + k0 * kNr;
        float* cij = c.data + i0 * c.stride + j0;
        if (mr == kMr && nr == kNr) {
          micro_kernel(kc, packed_a.data(), pb, cij, c.stride);
        } else {
          // Partial tile: route through a scratch tile so every element sees
          // the identical instruction sequence as in a full tile.
          std::fill_n(edge, kMr * kNr, 0.0F);
          for (std::size_t r = 0; r < mr; ++r) {
            std::memcpy(edge + r * kNr, cij + r * c.stride, nr * sizeof(float));
          }
          micro_kernel(kc, packed_a.data(), pb, edge, kNr);
          for (std::size_t r = 0; r < mr; ++r) {
            std::memcpy(cij + r * c.stride, edge + r * kNr, nr * sizeof(float));
          }
        }
      }
    }
  }
}

void gemm(ConstMatrixView a, Transpose ta, ConstMatrixView b, Transpose tb, MatrixView c,
          Accumulate mode) {
  gemm(a, ta, PackedRhs(b, tb), c, mode);
}

TensorF32 gemm_f32(const TensorF32& a, const TensorF32& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw ShapeError("gemm_f32: operands must be rank 2");
  }
  if (a.cols() != b.rows()) {
    throw ShapeError("gemm_f32: inner dimensions differ: " + format_dims(a.dims()) + " x " +
                     format_dims(b.dims()));
  }
  TensorF32 out({a.rows(), b.cols()});
  gemm(as_matrix(a), Transpose::kNo, as_matrix(b), Transpose::kNo, as_matrix(out),
       Accumulate::kOverwrite);
  return out;
}

TensorF32 gemm_mixed(const TensorF16& a, const TensorF16& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw ShapeError("gemm_mixed: operands must be rank 2");
  }
  if (a.cols() != b.rows()) {
    throw ShapeError("gemm_mixed: inner dimensions differ: " + format_dims(a.dims()) + " x " +
                     format_dims(b.dims()));
  }
  // Widening is exact, and a product of two 11-bit significands fits the
  // 24-bit binary32 significand, so the binary32 kernel on widened operands
  // performs FP16 multiplication with FP32 accumulation.
  return gemm_f32(to_f32(a), to_f32(b));
}

}  // namespace mlstm::numerics
