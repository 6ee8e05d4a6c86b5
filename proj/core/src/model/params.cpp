#include "mlstm/model/params.hpp"

#include <cmath>
#include <string>

#include "mlstm/common/error.hpp"
#include "mlstm/common/hash.hpp"
#include "mlstm/common/rng.hpp"
#include "mlstm/numerics/reduce.hpp"

namespace mlstm::model {

using numerics::round_to_half;

std::string_view to_string(Precision p) noexcept {
  return p == Precision::kMixed ? "mixed" : "fp32";
}

Precision parse_precision(std::string_view text) {
  if (text == "mixed") {
    return Precision::kMixed;
  }
  if (text == "fp32") {
    return Precision::kFp32;
  }
  throw ConfigError("precision must be 'mixed' or 'fp32', got '" + std::string(text) + "'");
}

void MlstmConfig::validate() const {
  if (vocab_size != kByteVocab) {
    throw ConfigError("vocab_size must be 256 (byte-level tokens)");
  }
  if (embed_dim == 0 || hidden_dim == 0) {
    throw ConfigError("embed_dim and hidden_dim must be positive");
  }
  if (seq_len == 0) {
    throw ConfigError("seq_len must be at least 1");
  }
}

namespace {

constexpr std::array<std::string_view, kParamCount> kNames = {
    "embedding",   "w_mx.v", "w_mx.g", "w_mh.v",    "w_mh.g",       "w_ih.v",
    "w_ih.g",      "w_hm.v", "w_hm.g", "gate_bias", "decoder.w", "decoder.b",
};

void check_masters(const ParamTensors& masters, const MlstmConfig& config) {
  for (std::size_t i = 0; i < kParamCount; ++i) {
    const auto expected = param_dims(static_cast<ParamId>(i), config);
    if (masters[i].dims() != expected) {
      throw ShapeError("parameter " + std::string(kNames[i]) + " has dims " +
                       numerics::format_dims(masters[i].dims()) + ", expected " +
                       numerics::format_dims(expected));
    }
  }
}

TensorF32 working_copy(const TensorF32& master, Precision precision) {
  TensorF32 out = master;
  if (precision == Precision::kMixed) {
    round_to_half(out.data());
  }
  return out;
}

float row_norm(std::span<const float> row) { return std::sqrt(numerics::sum_squares_f32(row)); }

}  // namespace

std::string_view param_name(ParamId id) noexcept { return kNames[static_cast<std::size_t>(id)]; }
std::string_view param_name(std::size_t index) noexcept { return kNames[index]; }

std::vector<std::size_t> param_dims(ParamId id, const MlstmConfig& c) {
  const std::size_t v = c.vocab_size;
  const std::size_t e = c.embed_dim;
  const std::size_t h = c.hidden_dim;
  switch (id) {
    case ParamId::kEmbedding:
      return {v, e};
    case ParamId::kMxDirection:
      return {h, e};
    case ParamId::kMhDirection:
      return {h, h};
    case ParamId::kIhDirection:
      return {4 * h, e};
    case ParamId::kHmDirection:
      return {4 * h, h};
    case ParamId::kMxGain:
    case ParamId::kMhGain:
      return {h};
    case ParamId::kIhGain:
    case ParamId::kHmGain:
    case ParamId::kGateBias:
      return {4 * h};
    case ParamId::kDecoderWeight:
      return {v, h};
    case ParamId::kDecoderBias:
      return {v};
  }
  throw ContractViolation("unknown parameter id");
}

ParamTensors ParamTensors::zeros(const MlstmConfig& config) {
  ParamTensors out;
  for (std::size_t i = 0; i < kParamCount; ++i) {
    out.tensors_[i] = TensorF32(param_dims(static_cast<ParamId>(i), config));
  }
  return out;
}

ParamTensors ParamTensors::zeros_like(const ParamTensors& other) {
  ParamTensors out;
  for (std::size_t i = 0; i < kParamCount; ++i) {
    out.tensors_[i] = TensorF32(other.tensors_[i].dims());
  }
  return out;
}

std::size_t ParamTensors::element_count() const noexcept {
  std::size_t n = 0;
  for (const auto& t : tensors_) {
    n += t.size();
  }
  return n;
}

bool ParamTensors::all_finite() const noexcept {
  bool ok = true;
  for (const auto& t : tensors_) {
    ok &= numerics::all_finite(t.data());
  }
  return ok;
}

void ParamTensors::fill(float value) {
  for (auto& t : tensors_) {
    t.fill(value);
  }
}

std::vector<float> ParamTensors::flatten() const {
  std::vector<float> flat;
  flat.reserve(element_count());
  for (const auto& t : tensors_) {
    flat.insert(flat.end(), t.data().begin(), t.data().end());
  }
  return flat;
}

void ParamTensors::unflatten(std::span<const float> flat) {
  if (flat.size() != element_count()) {
    throw ShapeError("unflatten: expected " + std::to_string(element_count()) + " values, got " +
                     std::to_string(flat.size()));
  }
  std::size_t offset = 0;
  for (auto& t : tensors_) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), t.size(), t.data().begin());
    offset += t.size();
  }
}

WeightNormOutput weight_norm_apply(const TensorF32& direction, const TensorF32& gain,
                                   Precision precision) {
  if (direction.rank() != 2 || gain.rank() != 1 || gain.size() != direction.rows()) {
    throw ShapeError("weight norm: direction " + numerics::format_dims(direction.dims()) +
                     " needs one gain per row, got " + numerics::format_dims(gain.dims()));
  }
  WeightNormOutput out{TensorF32(direction.dims()), std::vector<float>(direction.rows())};
  for (std::size_t r = 0; r < direction.rows(); ++r) {
    const auto v = direction.row(r);
    const float norm = row_norm(v);
    if (!(norm > 0.0F) || !std::isfinite(norm)) {
      throw SingularParameterError("weight norm: row " + std::to_string(r) + " has norm " +
                                   std::to_string(norm));
    }
    out.norms[r] = norm;
    // The accumulated norm is emitted at working precision.
    const float used_norm = precision == Precision::kMixed ? round_to_half(norm) : norm;
    const float scale = gain[r] / used_norm;
    auto w = out.weight.row(r);
    for (std::size_t c = 0; c < v.size(); ++c) {
      w[c] = scale * v[c];
    }
  }
  if (precision == Precision::kMixed) {
    round_to_half(out.weight.data());
  }
  return out;
}

TensorF16 weight_norm_build(const TensorF32& direction, const TensorF32& gain) {
  return numerics::to_f16(weight_norm_apply(direction, gain, Precision::kMixed).weight);
}

MlstmParams::MlstmParams(MlstmConfig config, Precision precision, ParamTensors masters)
    : config_(config), precision_(precision), masters_(std::move(masters)) {
  config_.validate();
  check_masters(masters_, config_);
  refresh_working();
}

MlstmParams MlstmParams::initialize(const MlstmConfig& config, Precision precision,
                                    std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ParamTensors m = ParamTensors::zeros(config);

  auto init_uniform = [&rng](TensorF32& t, float bound) {
    for (float& x : t.data()) {
      x = rng.uniform(-bound, bound);
    }
  };
  auto init_direction = [&](ParamId dir, ParamId gain) {
    TensorF32& v = m[dir];
    init_uniform(v, 1.0F / std::sqrt(static_cast<float>(v.cols())));
    TensorF32& g = m[gain];
    for (std::size_t r = 0; r < v.rows(); ++r) {
      g[r] = row_norm(v.row(r));
    }
  };

  init_uniform(m[ParamId::kEmbedding], 1.0F / std::sqrt(static_cast<float>(config.embed_dim)));
  init_direction(ParamId::kMxDirection, ParamId::kMxGain);
  init_direction(ParamId::kMhDirection, ParamId::kMhGain);
  init_direction(ParamId::kIhDirection, ParamId::kIhGain);
  init_direction(ParamId::kHmDirection, ParamId::kHmGain);
  init_uniform(m[ParamId::kDecoderWeight], 1.0F / std::sqrt(static_cast<float>(config.hidden_dim)));
  return MlstmParams(config, precision, std::move(m));
}

void MlstmParams::refresh_working() {
  auto mx = weight_norm_apply(masters_[ParamId::kMxDirection], masters_[ParamId::kMxGain], precision_);
  auto mh = weight_norm_apply(masters_[ParamId::kMhDirection], masters_[ParamId::kMhGain], precision_);
  auto ih = weight_norm_apply(masters_[ParamId::kIhDirection], masters_[ParamId::kIhGain], precision_);
  auto hm = weight_norm_apply(masters_[ParamId::kHmDirection], masters_[ParamId::kHmGain], precision_);
  working_.w_mx = std::move(mx.weight);
  working_.mx_norms = std::move(mx.norms);
  working_.w_mh = std::move(mh.weight);
  working_.mh_norms = std::move(mh.norms);
  working_.w_ih = std::move(ih.weight);
  working_.ih_norms = std::move(ih.norms);
  working_.w_hm = std::move(hm.weight);
  working_.hm_norms = std::move(hm.norms);
  working_.embedding = working_copy(masters_[ParamId::kEmbedding], precision_);
  working_.gate_bias = working_copy(masters_[ParamId::kGateBias], precision_);
  working_.decoder = working_copy(masters_[ParamId::kDecoderWeight], precision_);
  working_.decoder_bias = working_copy(masters_[ParamId::kDecoderBias], precision_);
}

std::uint64_t MlstmParams::fingerprint() const {
  Fnv1a64 h;
  for (const auto& t : masters_) {
    h.update_values(t.data());
  }
  return h.digest();
}

}  // namespace mlstm::model
