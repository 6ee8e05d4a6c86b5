#pragma once

#include <algorithm>
#include <cstdint>

namespace oracle {

// The loss-scale state machine restated over integer exponents:
// alpha = 2^exp, clamped to [2^exp_min, 2^exp_max].
struct ScalerModel {
  int exp = 16;
  int exp_min = 0;
  int exp_max = 24;
  std::uint32_t interval = 2000;
  std::uint32_t clean = 0;

  // Returns true when the update is applied.
  bool step(bool overflow) {
    if (overflow) {
      exp = std::max(exp - 1, exp_min);
      clean = 0;
      return false;
    }
    if (++clean == interval) {
      exp = std::min(exp + 1, exp_max);
      clean = 0;
    }
    return true;
  }
};

}  // namespace oracle
