#pragma once

#include <span>

namespace mlstm::numerics {

/// Binary32 sum in strict left-to-right order. Every loss, norm and gradient
/// reduction goes through here (or follows the same order) so results do not
/// depend on how work was partitioned. Throws ContractViolation when empty.
float reduce_f32(std::span<const float> values);

/// Left-to-right binary32 sum of squares.
float sum_squares_f32(std::span<const float> values);

bool all_finite(std::span<const float> values) noexcept;

}  // namespace mlstm::numerics
