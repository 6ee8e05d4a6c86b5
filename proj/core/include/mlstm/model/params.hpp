#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mlstm/model/config.hpp"
#include "mlstm/numerics/tensor.hpp"

namespace mlstm::model {

using numerics::TensorF16;
using numerics::TensorF32;

// Master parameter inventory. The four weight-normalized matrices are stored
// as (direction, gain) pairs; gains hold one entry per output row.
enum class ParamId : std::size_t {
  kEmbedding,      // vocab x e
  kMxDirection,    // h x e
  kMxGain,         // h
  kMhDirection,    // h x h
  kMhGain,         // h
  kIhDirection,    // 4h x e
  kIhGain,         // 4h
  kHmDirection,    // 4h x h
  kHmGain,         // 4h
  kGateBias,       // 4h
  kDecoderWeight,  // vocab x h
  kDecoderBias,    // vocab
};

inline constexpr std::size_t kParamCount = 12;

std::string_view param_name(ParamId id) noexcept;
std::string_view param_name(std::size_t index) noexcept;
std::vector<std::size_t> param_dims(ParamId id, const MlstmConfig& config);

/// One tensor per ParamId. Used for masters, gradients and optimizer moments.
class ParamTensors {
 public:
  ParamTensors() = default;
  static ParamTensors zeros(const MlstmConfig& config);
  static ParamTensors zeros_like(const ParamTensors& other);

  TensorF32& operator[](ParamId id) { return tensors_[static_cast<std::size_t>(id)]; }
  const TensorF32& operator[](ParamId id) const { return tensors_[static_cast<std::size_t>(id)]; }
  TensorF32& operator[](std::size_t i) { return tensors_[i]; }
  const TensorF32& operator[](std::size_t i) const { return tensors_[i]; }

  auto begin() { return tensors_.begin(); }
  auto end() { return tensors_.end(); }
  auto begin() const { return tensors_.begin(); }
  auto end() const { return tensors_.end(); }

  std::size_t element_count() const noexcept;
  bool all_finite() const noexcept;
  void fill(float value);

  // Concatenation in ParamId order; the all-reduce operates on this layout.
  std::vector<float> flatten() const;
  void unflatten(std::span<const float> flat);

  friend bool operator==(const ParamTensors&, const ParamTensors&) = default;

 private:
  std::array<TensorF32, kParamCount> tensors_;
};

using SequenceGrads = ParamTensors;

/// Weight normalization w_i = g_i * v_i / ||v_i||. The squared sum is
/// accumulated in binary32; the norm and the weights are emitted as halves.
/// Throws SingularParameterError for an all-zero row.
TensorF16 weight_norm_build(const TensorF32& direction, const TensorF32& gain);

struct WeightNormOutput {
  TensorF32 weight;          // on the binary16 grid for Precision::kMixed
  std::vector<float> norms;  // binary32 row norms, used by the backward pass
};

WeightNormOutput weight_norm_apply(const TensorF32& direction, const TensorF32& gain,
                                   Precision precision);

/// The compute view of the parameters. Under mixed precision every tensor
/// here holds the widened binary16 working copy (widening is exact).
struct WorkingWeights {
  TensorF32 embedding;
  TensorF32 w_mx;
  TensorF32 w_mh;
  TensorF32 w_ih;
  TensorF32 w_hm;
  TensorF32 gate_bias;
  TensorF32 decoder;
  TensorF32 decoder_bias;
  std::vector<float> mx_norms;
  std::vector<float> mh_norms;
  std::vector<float> ih_norms;
  std::vector<float> hm_norms;
};

class MlstmParams {
 public:
  MlstmParams(MlstmConfig config, Precision precision, ParamTensors masters);

  // Directions ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); gains start at the row
  // norm so the effective weights equal the directions; biases zero.
  static MlstmParams initialize(const MlstmConfig& config, Precision precision,
                                std::uint64_t seed);

  const MlstmConfig& config() const noexcept { return config_; }
  Precision precision() const noexcept { return precision_; }

  const ParamTensors& masters() const noexcept { return masters_; }
  ParamTensors& mutable_masters() noexcept { return masters_; }

  const WorkingWeights& working() const noexcept { return working_; }

  /// Rebuild every working copy from the masters. Call after any change to
  /// the masters; this is the only place weight normalization runs.
  void refresh_working();

  /// Hash over the master bytes.
  std::uint64_t fingerprint() const;

 private:
  MlstmConfig config_;
  Precision precision_;
  ParamTensors masters_;
  WorkingWeights working_;
};

}  // namespace mlstm::model
