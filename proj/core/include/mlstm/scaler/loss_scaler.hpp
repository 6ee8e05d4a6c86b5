#pragma once

#include <cstdint>

#include "mlstm/model/params.hpp"

namespace mlstm::scaler {

enum class ScaleDecision { kSkipUpdate, kApplyUpdate };

/// Automatic loss scaling: start high, halve and skip on overflow, double
/// after `growth_interval` consecutive clean updates. alpha stays a power of
/// two inside [alpha_min, alpha_max].
struct LossScaleState {
  float alpha = 65536.0F;
  std::uint32_t growth_interval = 2000;
  std::uint32_t clean_steps = 0;
  float backoff_factor = 2.0F;
  float growth_factor = 2.0F;
  float alpha_min = 1.0F;
  float alpha_max = 16777216.0F;

  // Throws ConfigError when the invariants do not hold.
  void validate() const;

  friend bool operator==(const LossScaleState&, const LossScaleState&) = default;
};

bool is_power_of_two(float x) noexcept;

ScaleDecision scaler_step(LossScaleState& state, bool overflow);

/// Divide every master gradient by alpha. Gradients must be finite: overflow
/// is the scaler's job, so non-finite input is a ContractViolation.
model::SequenceGrads unscale_master_grads(model::SequenceGrads grads, float alpha);

}  // namespace mlstm::scaler
