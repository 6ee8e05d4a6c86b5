#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mlstm/common/error.hpp"
#include "mlstm/numerics/half.hpp"

namespace mlstm::numerics {

std::string format_dims(std::span<const std::size_t> dims);

/// Dense row-major tensor. Extents are fixed at construction.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
    data_.assign(checked_count(dims_), T{});
  }

  Tensor(std::vector<std::size_t> dims, std::vector<T> data)
      : dims_(std::move(dims)), data_(std::move(data)) {
    if (data_.size() != checked_count(dims_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match dims " + format_dims(dims_));
    }
  }

  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::size_t rows() const { return extent(0); }
  std::size_t cols() const { return rank() >= 2 ? extent(1) : 1; }

  T& at(std::size_t r, std::size_t c) { return data_[r * dims_.at(1) + c]; }
  const T& at(std::size_t r, std::size_t c) const { return data_[r * dims_.at(1) + c]; }

  std::span<T> row(std::size_t r) { return std::span<T>(data_).subspan(r * cols(), cols()); }
  std::span<const T> row(std::size_t r) const {
    return std::span<const T>(data_).subspan(r * cols(), cols());
  }

  void fill(const T& value) { std::fill(data_.begin(), data_.end(), value); }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t extent(std::size_t axis) const {
    if (axis >= dims_.size()) {
      throw ShapeError("axis " + std::to_string(axis) + " out of range for dims " +
                       format_dims(dims_));
    }
    return dims_[axis];
  }

  static std::size_t checked_count(const std::vector<std::size_t>& dims) {
    if (dims.empty()) {
      throw ShapeError("tensor needs at least one dimension");
    }
    std::size_t count = 1;
    for (const std::size_t d : dims) {
      if (d == 0) {
        throw ShapeError("tensor extents must be positive, got " + format_dims(dims));
      }
      count *= d;
    }
    return count;
  }

  std::vector<std::size_t> dims_;
  std::vector<T> data_;
};

using TensorF16 = Tensor<Half>;
using TensorF32 = Tensor<float>;

TensorF16 to_f16(const TensorF32& t);
TensorF32 to_f32(const TensorF16& t);

}  // namespace mlstm::numerics
