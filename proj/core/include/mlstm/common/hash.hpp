#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace mlstm {

// 64-bit FNV-1a. Used for replica fingerprints and checkpoint checksums.
class Fnv1a64 {
 public:
  void update(std::span<const std::byte> bytes) noexcept;

  template <typename T>
  void update_values(std::span<const T> values) noexcept {
    update(std::as_bytes(values));
  }

  std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::uint64_t fnv1a64(std::span<const std::byte> bytes) noexcept;

}  // namespace mlstm
