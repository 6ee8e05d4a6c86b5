#include "mlstm/scaler/loss_scaler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mlstm/common/error.hpp"

namespace mlstm::scaler {

bool is_power_of_two(float x) noexcept {
  if (!(x > 0.0F) || !std::isfinite(x)) {
    return false;
  }
  int exponent = 0;
  return std::frexp(x, &exponent) == 0.5F;
}

void LossScaleState::validate() const {
  if (!is_power_of_two(alpha_min) || !is_power_of_two(alpha_max) || !is_power_of_two(alpha)) {
    throw ConfigError("loss scale alpha, alpha_min and alpha_max must be powers of two");
  }
  if (alpha_min > alpha_max || alpha < alpha_min || alpha > alpha_max) {
    throw ConfigError("loss scale must satisfy alpha_min <= alpha <= alpha_max");
  }
  if (growth_interval == 0) {
    throw ConfigError("loss scale growth_interval must be positive");
  }
  if (backoff_factor != 2.0F || growth_factor != 2.0F) {
    throw ConfigError("loss scale backoff and growth factors are fixed at 2");
  }
}

ScaleDecision scaler_step(LossScaleState& state, bool overflow) {
  if (overflow) {
    state.alpha = std::max(state.alpha / state.backoff_factor, state.alpha_min);
    state.clean_steps = 0;
    return ScaleDecision::kSkipUpdate;
  }
  ++state.clean_steps;
  if (state.clean_steps >= state.growth_interval) {
    state.alpha = std::min(state.alpha * state.growth_factor, state.alpha_max);
    state.clean_steps = 0;
  }
  return ScaleDecision::kApplyUpdate;
}

model::SequenceGrads unscale_master_grads(model::SequenceGrads grads, float alpha) {
  if (!(alpha > 0.0F) || !std::isfinite(alpha)) {
    throw ContractViolation("unscale_master_grads: alpha must be positive, got " +
                            std::to_string(alpha));
  }
  if (!grads.all_finite()) {
    throw ContractViolation("unscale_master_grads: gradients are not finite; "
                            "run scaler_step on the overflow flag first");
  }
  for (auto& t : grads) {
    for (float& x : t.data()) {
      x /= alpha;
    }
  }
  return grads;
}

}  // namespace mlstm::scaler
