#include "mlstm/optim/lr_policy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mlstm/common/error.hpp"

namespace mlstm::optim {

std::string_view to_string(ScalingRule r) noexcept {
  switch (r) {
    case ScalingRule::kLinear:
      return "linear";
    case ScalingRule::kSqrt:
      return "sqrt";
    case ScalingRule::kNone:
      break;
  }
  return "none";
}

ScalingRule parse_scaling_rule(std::string_view text) {
  if (text == "none") {
    return ScalingRule::kNone;
  }
  if (text == "linear") {
    return ScalingRule::kLinear;
  }
  if (text == "sqrt") {
    return ScalingRule::kSqrt;
  }
  throw ConfigError("lr_rule must be none, linear or sqrt, got '" + std::string(text) + "'");
}

void LrPolicy::validate() const {
  if (!(base_lr > 0.0) || !std::isfinite(base_lr)) {
    throw ConfigError("base_lr must be positive");
  }
  if (decay_iters == 0) {
    throw ConfigError("decay_iters must be positive");
  }
  if (batch_size == 0) {
    throw ConfigError("batch_size must be at least 1");
  }
}

double scale_lr(const LrPolicy& policy) {
  policy.validate();
  const double ratio =
      static_cast<double>(policy.batch_size) / static_cast<double>(LrPolicy::kReferenceBatch);
  switch (policy.rule) {
    case ScalingRule::kLinear:
      return policy.base_lr * ratio;
    case ScalingRule::kSqrt:
      return policy.base_lr * std::sqrt(ratio);
    case ScalingRule::kNone:
      break;
  }
  return policy.base_lr;
}

double lr_at(const LrPolicy& policy, double initial_lr, std::uint64_t iter) {
  const double progress = static_cast<double>(iter) / static_cast<double>(policy.decay_iters);
  return initial_lr * std::max(0.0, 1.0 - progress);
}

RegimeAdvice check_large_batch_regime(std::uint64_t batch_size, std::uint64_t dataset_sequences,
                                      double threshold) {
  if (batch_size == 0 || dataset_sequences == 0) {
    throw ContractViolation("check_large_batch_regime: B and N must be at least 1");
  }
  RegimeAdvice advice;
  advice.ratio = static_cast<double>(dataset_sequences) / static_cast<double>(batch_size);
  advice.warn = advice.ratio < threshold;
  if (advice.warn) {
    std::ostringstream msg;
    msg << "dataset holds only " << advice.ratio << " batches of " << batch_size
        << " sequences (threshold " << threshold
        << "); learning-rate scaling rules assume N >> B";
    advice.message = msg.str();
  }
  return advice;
}

}  // namespace mlstm::optim
