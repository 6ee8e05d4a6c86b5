#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mlstm/model/params.hpp"

namespace mlstm::model {

/// Recurrent state carried between TBTT windows. h is held at working
/// precision (on the binary16 grid under mixed precision); c is binary32.
struct HiddenState {
  TensorF32 h;  // batch x hidden
  TensorF32 c;  // batch x hidden

  static HiddenState zeros(std::size_t batch, std::size_t hidden);

  std::size_t batch() const { return h.rows(); }
  std::size_t hidden() const { return h.cols(); }

  void reset_row(std::size_t b);
  bool all_finite() const noexcept;
  // Zero every row holding a non-finite entry; returns how many were reset.
  std::size_t reset_non_finite_rows();
  // Rows [first, first + count) as a new state.
  HiddenState slice(std::size_t first, std::size_t count) const;
  void assign_rows(std::size_t first, const HiddenState& part);

  friend bool operator==(const HiddenState&, const HiddenState&) = default;
};

/// Everything the backward pass needs from one forward window. Rows are laid
/// out time-major: row t * batch + b is sequence b at step t, so each step's
/// rows are contiguous. tokens keeps the caller's batch-major order.
struct ForwardCache {
  std::size_t batch = 0;
  std::size_t steps = 0;
  std::vector<std::uint8_t> tokens;

  std::size_t index(std::size_t b, std::size_t t) const noexcept { return t * batch + b; }

  TensorF32 x;        // embedded inputs, rows x e
  TensorF32 mx;       // W_mx x, rows x h
  TensorF32 hm;       // W_mh h_prev, rows x h
  TensorF32 m;        // multiplicative state, rows x h
  TensorF32 gates;    // sigma(i), sigma(f), sigma(o), tanh(u), rows x 4h
  TensorF32 c;        // cell state after the step, rows x h
  TensorF32 tanh_c;   // rows x h
  TensorF32 h_prev;   // hidden state entering the step, rows x h
  TensorF32 h;        // hidden state leaving the step, rows x h
  TensorF32 c0;       // cell state entering the window, batch x h
};

struct ForwardResult {
  TensorF32 logits;  // batch x steps x vocab, binary32
  HiddenState state;  // final state, detached from gradient flow
  ForwardCache cache;  // empty unless requested
};

enum class CacheMode { kKeep, kDiscard };

/// Runs the cell over a [batch x steps] window of byte tokens (batch-major).
/// Throws ShapeError when the state batch or hidden width does not match and
/// NonFiniteError when the incoming state is not finite.
ForwardResult forward_sequence(const MlstmParams& params, std::span<const std::uint8_t> tokens,
                               std::size_t batch, std::size_t steps, const HiddenState& state,
                               CacheMode cache_mode = CacheMode::kKeep);

struct CellResult {
  HiddenState state;
  TensorF32 mx;     // W_mx x
  TensorF32 hm;     // W_mh h_prev
  TensorF32 m;
  TensorF32 preactivations;  // z = W_ih x + W_hm m + b, batch x 4h (i, f, o, u)
};

/// One step of the cell on already-embedded inputs x [batch x e]:
///   m = (W_mx x) * (W_mh h_prev)
///   z = W_ih x + W_hm m + b  -> (i, f, o, u)
///   c = sigma(f) c_prev + sigma(i) tanh(u)
///   h = sigma(o) tanh(c)
CellResult mlstm_cell(const MlstmParams& params, const TensorF32& x, const HiddenState& state);

struct LossOptions {
  float loss_scale = 1.0F;
  // Divides the summed token loss. Zero means "number of scored positions".
  // Data-parallel workers pass the global count so that the sum of their
  // gradients equals the gradient of the global mean loss.
  float normalizer = 0.0F;
};

struct BackwardResult {
  float loss_nats = 0.0F;      // summed scored loss / normalizer (unscaled)
  float loss_sum_nats = 0.0F;  // summed scored loss
  std::size_t scored = 0;      // positions that contributed
  SequenceGrads grads;         // loss_scale-scaled master gradients
  bool overflow = false;       // any gradient non-finite
};

/// Per-position softmax cross entropy in nats (binary32). Positions with
/// valid[r] == 0 report 0. An empty `valid` scores every position.
std::vector<float> token_losses(const TensorF32& logits, std::span<const std::uint8_t> targets,
                                std::span<const std::uint8_t> valid = {});

/// Mean softmax cross entropy over scored positions and the loss_scale-scaled
/// backward pass. Activation gradients are stored at working precision; all
/// weight-gradient accumulation is binary32.
BackwardResult loss_and_backward(const MlstmParams& params, const ForwardResult& forward,
                                 std::span<const std::uint8_t> targets,
                                 std::span<const std::uint8_t> valid, const LossOptions& options);

}  // namespace mlstm::model
