#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace mlstm::optim {

enum class ScalingRule { kNone, kLinear, kSqrt };

std::string_view to_string(ScalingRule r) noexcept;
ScalingRule parse_scaling_rule(std::string_view text);

/// Learning-rate policy. base_lr is quoted at reference_batch (128); the
/// schedule decays linearly to zero over decay_iters.
struct LrPolicy {
  static constexpr std::size_t kReferenceBatch = 128;

  double base_lr = 5e-4;
  ScalingRule rule = ScalingRule::kNone;
  std::size_t batch_size = kReferenceBatch;
  std::uint64_t decay_iters = 100000;
  std::uint32_t max_epochs = 3;

  void validate() const;
};

/// none -> base; linear -> base * B/128; sqrt -> base * sqrt(B/128).
double scale_lr(const LrPolicy& policy);

/// initial_lr * max(0, 1 - iter / decay_iters).
double lr_at(const LrPolicy& policy, double initial_lr, std::uint64_t iter);

struct RegimeAdvice {
  bool warn = false;
  double ratio = 0.0;  // N / B
  std::string message;
};

/// Advisory check that the dataset is large relative to the batch (N >> B).
/// Warns when N / B falls below `threshold`. Never blocks.
RegimeAdvice check_large_batch_regime(std::uint64_t batch_size, std::uint64_t dataset_sequences,
                                      double threshold = 1000.0);

}  // namespace mlstm::optim
