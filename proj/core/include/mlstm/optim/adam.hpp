#pragma once

#include <cstdint>

#include "mlstm/model/params.hpp"

namespace mlstm::optim {

struct AdamState {
  model::ParamTensors m;
  model::ParamTensors v;
  float beta1 = 0.9F;
  float beta2 = 0.999F;
  float eps = 1e-8F;
  std::uint64_t t = 0;  // applied updates only

  static AdamState zeros_like(const model::ParamTensors& params, float beta1 = 0.9F,
                              float beta2 = 0.999F, float eps = 1e-8F);

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

/// One bias-corrected Adam step on binary32 masters, in place:
///   m <- b1 m + (1 - b1) g
///   v <- b2 v + (1 - b2) g^2
///   p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
/// The caller refreshes the binary16 working copies afterwards (MlstmParams
/// does this in adam_apply below). Non-finite gradients are a
/// ContractViolation: the loss scaler must gate them.
void adam_step(model::ParamTensors& masters, const model::SequenceGrads& grads, AdamState& state,
               float lr);

/// adam_step on the parameter masters followed by a working-copy refresh.
void adam_apply(model::MlstmParams& params, const model::SequenceGrads& grads, AdamState& state,
                float lr);

}  // namespace mlstm::optim
