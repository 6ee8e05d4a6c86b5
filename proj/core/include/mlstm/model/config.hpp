#pragma once

#include <cstddef>
#include <string_view>

namespace mlstm::model {

enum class Precision {
  kMixed,  // binary16 storage and products, binary32 accumulation
  kFp32,   // everything binary32; reference path for gradient checks
};

std::string_view to_string(Precision p) noexcept;
Precision parse_precision(std::string_view text);

struct MlstmConfig {
  static constexpr std::size_t kByteVocab = 256;

  std::size_t vocab_size = kByteVocab;
  std::size_t embed_dim = 64;
  std::size_t hidden_dim = 256;
  std::size_t seq_len = 256;

  std::size_t gate_dim() const noexcept { return 4 * hidden_dim; }

  // Throws ConfigError.
  void validate() const;

  friend bool operator==(const MlstmConfig&, const MlstmConfig&) = default;
};

}  // namespace mlstm::model
