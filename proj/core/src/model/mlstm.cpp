#include "mlstm/model/mlstm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mlstm/common/error.hpp"
#include "mlstm/numerics/fastmath.hpp"
#include "mlstm/numerics/gemm.hpp"
#include "mlstm/numerics/reduce.hpp"

namespace mlstm::model {

using numerics::Accumulate;
using numerics::as_matrix;
using numerics::ConstMatrixView;
using numerics::gemm;
using numerics::MatrixView;
using numerics::PackedRhs;
using numerics::Transpose;

namespace {

// Rows [step * batch, (step + 1) * batch) of a time-major [steps*batch x cols] tensor.
MatrixView step_rows(TensorF32& t, std::size_t step, std::size_t batch) {
  const std::size_t cols = t.cols();
  return {t.data().data() + step * batch * cols, batch, cols, cols};
}

ConstMatrixView step_rows(const TensorF32& t, std::size_t step, std::size_t batch) {
  const std::size_t cols = t.cols();
  return {t.data().data() + step * batch * cols, batch, cols, cols};
}

void round_rows(MatrixView v, bool mixed) {
  if (!mixed) {
    return;
  }
  for (std::size_t r = 0; r < v.rows; ++r) {
    numerics::round_to_half(std::span<float>(v.data + r * v.stride, v.cols));
  }
}

struct StepOutputs {
  MatrixView hm;
  MatrixView m;
  MatrixView gates;
  MatrixView c;
  MatrixView tanh_c;
  MatrixView h;
};

// Gate nonlinearities and the cell update for one row.
void cell_row(std::size_t hidden, const float* __restrict z, const float* __restrict c_prev,
              float* __restrict gates, float* __restrict c, float* __restrict tanh_c,
              float* __restrict h) {
  for (std::size_t j = 0; j < 3 * hidden; ++j) {
    gates[j] = numerics::sigmoid_f32(z[j]);
  }
  for (std::size_t j = 3 * hidden; j < 4 * hidden; ++j) {
    gates[j] = numerics::tanh_f32(z[j]);
  }
  for (std::size_t j = 0; j < hidden; ++j) {
    c[j] = gates[hidden + j] * c_prev[j] + gates[j] * gates[3 * hidden + j];
  }
  for (std::size_t j = 0; j < hidden; ++j) {
    tanh_c[j] = numerics::tanh_f32(c[j]);
    h[j] = gates[2 * hidden + j] * tanh_c[j];
  }
}

// One recurrent step for `batch` rows given the precomputed input projections.
void cell_step(const WorkingWeights& w, bool mixed, ConstMatrixView mx, ConstMatrixView pih,
               ConstMatrixView h_prev, ConstMatrixView c_prev, const PackedRhs& w_mh_t,
               const PackedRhs& w_hm_t, TensorF32& z, const StepOutputs& out) {
  const std::size_t batch = h_prev.rows;
  const std::size_t hidden = h_prev.cols;

  gemm(h_prev, Transpose::kNo, w_mh_t, out.hm, Accumulate::kOverwrite);
  for (std::size_t b = 0; b < batch; ++b) {
    const float* __restrict mxr = mx.data + b * mx.stride;
    const float* __restrict hmr = out.hm.data + b * out.hm.stride;
    float* __restrict mr = out.m.data + b * out.m.stride;
    for (std::size_t j = 0; j < hidden; ++j) {
      mr[j] = mxr[j] * hmr[j];
    }
  }
  round_rows(out.m, mixed);

  MatrixView zv = as_matrix(z);
  gemm(out.m, Transpose::kNo, w_hm_t, zv, Accumulate::kOverwrite);
  const float* __restrict bias = w.gate_bias.data().data();
  for (std::size_t b = 0; b < batch; ++b) {
    float* __restrict zr = zv.data + b * zv.stride;
    const float* __restrict pr = pih.data + b * pih.stride;
    for (std::size_t j = 0; j < 4 * hidden; ++j) {
      zr[j] = (zr[j] + pr[j]) + bias[j];
    }
  }

  for (std::size_t b = 0; b < batch; ++b) {
    cell_row(hidden, zv.data + b * zv.stride, c_prev.data + b * c_prev.stride,
             out.gates.data + b * out.gates.stride, out.c.data + b * out.c.stride,
             out.tanh_c.data + b * out.tanh_c.stride, out.h.data + b * out.h.stride);
  }
  round_rows(out.h, mixed);
}

void check_state(const HiddenState& state, std::size_t batch, std::size_t hidden) {
  if (state.h.rank() != 2 || state.c.rank() != 2 || state.h.dims() != state.c.dims()) {
    throw ShapeError("hidden state h and c must both be [batch x hidden]");
  }
  if (state.batch() != batch || state.hidden() != hidden) {
    throw ShapeError("hidden state is " + numerics::format_dims(state.h.dims()) + ", expected [" +
                     std::to_string(batch) + "x" + std::to_string(hidden) + "]");
  }
  if (!state.all_finite()) {
    throw NonFiniteError("incoming hidden state holds non-finite values");
  }
}

void add_bias_rows(MatrixView out, std::span<const float> bias) {
  for (std::size_t r = 0; r < out.rows; ++r) {
    for (std::size_t j = 0; j < out.cols; ++j) {
      out(r, j) += bias[j];
    }
  }
}

// Column sums in ascending row order.
void column_sums(const TensorF32& t, std::span<float> out) {
  std::fill(out.begin(), out.end(), 0.0F);
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const auto row = t.row(r);
    for (std::size_t j = 0; j < out.size(); ++j) {
      out[j] += row[j];
    }
  }
}

// Effective-weight gradient -> (direction, gain) gradients for w = g v / ||v||.
void weight_norm_backward(const TensorF32& grad_w, const TensorF32& direction, const TensorF32& gain,
                          std::span<const float> norms, TensorF32& grad_v, TensorF32& grad_g) {
  for (std::size_t r = 0; r < direction.rows(); ++r) {
    const auto gw = grad_w.row(r);
    const auto v = direction.row(r);
    auto gv = grad_v.row(r);
    float dot = 0.0F;
    for (std::size_t c = 0; c < v.size(); ++c) {
      dot += gw[c] * v[c];
    }
    const float norm = norms[r];
    const float dg = dot / norm;
    const float coef = gain[r] / norm;
    const float proj = dg / norm;
    for (std::size_t c = 0; c < v.size(); ++c) {
      gv[c] = coef * (gw[c] - proj * v[c]);
    }
    grad_g[r] = dg;
  }
}

}  // namespace

HiddenState HiddenState::zeros(std::size_t batch, std::size_t hidden) {
  return HiddenState{TensorF32({batch, hidden}), TensorF32({batch, hidden})};
}

void HiddenState::reset_row(std::size_t b) {
  std::fill(h.row(b).begin(), h.row(b).end(), 0.0F);
  std::fill(c.row(b).begin(), c.row(b).end(), 0.0F);
}

bool HiddenState::all_finite() const noexcept {
  return numerics::all_finite(h.data()) && numerics::all_finite(c.data());
}

std::size_t HiddenState::reset_non_finite_rows() {
  std::size_t reset = 0;
  for (std::size_t b = 0; b < batch(); ++b) {
    if (!numerics::all_finite(h.row(b)) || !numerics::all_finite(c.row(b))) {
      reset_row(b);
      ++reset;
    }
  }
  return reset;
}

HiddenState HiddenState::slice(std::size_t first, std::size_t count) const {
  if (first + count > batch() || count == 0) {
    throw ShapeError("hidden state slice out of range");
  }
  HiddenState out = zeros(count, hidden());
  const std::size_t width = hidden();
  std::copy_n(h.data().begin() + static_cast<std::ptrdiff_t>(first * width), count * width,
              out.h.data().begin());
  std::copy_n(c.data().begin() + static_cast<std::ptrdiff_t>(first * width), count * width,
              out.c.data().begin());
  return out;
}

void HiddenState::assign_rows(std::size_t first, const HiddenState& part) {
  if (part.hidden() != hidden() || first + part.batch() > batch()) {
    throw ShapeError("hidden state assign out of range");
  }
  const std::size_t width = hidden();
  std::copy(part.h.data().begin(), part.h.data().end(),
            h.data().begin() + static_cast<std::ptrdiff_t>(first * width));
  std::copy(part.c.data().begin(), part.c.data().end(),
            c.data().begin() + static_cast<std::ptrdiff_t>(first * width));
}

ForwardResult forward_sequence(const MlstmParams& params, std::span<const std::uint8_t> tokens,
                               std::size_t batch, std::size_t steps, const HiddenState& state,
                               CacheMode cache_mode) {
  const MlstmConfig& cfg = params.config();
  const WorkingWeights& w = params.working();
  const bool mixed = params.precision() == Precision::kMixed;
  const std::size_t hidden = cfg.hidden_dim;
  const std::size_t embed = cfg.embed_dim;
  const std::size_t vocab = cfg.vocab_size;
  const std::size_t rows = batch * steps;

  if (batch == 0 || steps == 0 || tokens.size() != rows) {
    throw ShapeError("forward_sequence: expected " + std::to_string(batch) + "x" +
                     std::to_string(steps) + " tokens, got " + std::to_string(tokens.size()));
  }
  check_state(state, batch, hidden);

  ForwardCache cache;
  cache.batch = batch;
  cache.steps = steps;
  cache.tokens.assign(tokens.begin(), tokens.end());
  cache.x = TensorF32({rows, embed});
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t b = 0; b < batch; ++b) {
      const auto src = w.embedding.row(tokens[b * steps + t]);
      std::copy(src.begin(), src.end(), cache.x.row(cache.index(b, t)).begin());
    }
  }

  cache.mx = TensorF32({rows, hidden});
  TensorF32 pih({rows, 4 * hidden});
  gemm(as_matrix(cache.x), Transpose::kNo, as_matrix(w.w_mx), Transpose::kYes, as_matrix(cache.mx),
       Accumulate::kOverwrite);
  gemm(as_matrix(cache.x), Transpose::kNo, as_matrix(w.w_ih), Transpose::kYes, as_matrix(pih),
       Accumulate::kOverwrite);

  const PackedRhs w_mh_t(as_matrix(w.w_mh), Transpose::kYes);
  const PackedRhs w_hm_t(as_matrix(w.w_hm), Transpose::kYes);

  cache.hm = TensorF32({rows, hidden});
  cache.m = TensorF32({rows, hidden});
  cache.gates = TensorF32({rows, 4 * hidden});
  cache.c = TensorF32({rows, hidden});
  cache.tanh_c = TensorF32({rows, hidden});
  cache.h_prev = TensorF32({rows, hidden});
  cache.h = TensorF32({rows, hidden});
  cache.c0 = state.c;
  TensorF32 z({batch, 4 * hidden});

  for (std::size_t t = 0; t < steps; ++t) {
    ConstMatrixView h_prev =
        t == 0 ? as_matrix(state.h) : step_rows(std::as_const(cache.h), t - 1, batch);
    ConstMatrixView c_prev =
        t == 0 ? as_matrix(state.c) : step_rows(std::as_const(cache.c), t - 1, batch);
    MatrixView hp_store = step_rows(cache.h_prev, t, batch);
    std::copy_n(h_prev.data, batch * hidden, hp_store.data);
    const StepOutputs out{
        step_rows(cache.hm, t, batch),     step_rows(cache.m, t, batch),
        step_rows(cache.gates, t, batch),  step_rows(cache.c, t, batch),
        step_rows(cache.tanh_c, t, batch), step_rows(cache.h, t, batch),
    };
    cell_step(w, mixed, step_rows(std::as_const(cache.mx), t, batch),
              step_rows(std::as_const(pih), t, batch), h_prev, c_prev, w_mh_t, w_hm_t, z, out);
  }

  // Decoder over all positions at once, then reordered batch-major.
  TensorF32 logits_tm({rows, vocab});
  gemm(as_matrix(cache.h), Transpose::kNo, as_matrix(w.decoder), Transpose::kYes,
       as_matrix(logits_tm), Accumulate::kOverwrite);
  add_bias_rows(as_matrix(logits_tm), w.decoder_bias.data());
  ForwardResult result;
  result.logits = TensorF32({batch, steps, vocab});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < steps; ++t) {
      const auto src = logits_tm.row(cache.index(b, t));
      std::copy(src.begin(), src.end(),
                result.logits.data().begin() + static_cast<std::ptrdiff_t>((b * steps + t) * vocab));
    }
  }

  result.state = HiddenState::zeros(batch, hidden);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t last = cache.index(b, steps - 1);
    std::copy(cache.h.row(last).begin(), cache.h.row(last).end(), result.state.h.row(b).begin());
    std::copy(cache.c.row(last).begin(), cache.c.row(last).end(), result.state.c.row(b).begin());
  }
  if (cache_mode == CacheMode::kKeep) {
    result.cache = std::move(cache);
  }
  return result;
}

CellResult mlstm_cell(const MlstmParams& params, const TensorF32& x, const HiddenState& state) {
  const MlstmConfig& cfg = params.config();
  const WorkingWeights& w = params.working();
  const bool mixed = params.precision() == Precision::kMixed;
  const std::size_t hidden = cfg.hidden_dim;
  if (x.rank() != 2 || x.cols() != cfg.embed_dim) {
    throw ShapeError("mlstm_cell: input must be [batch x " + std::to_string(cfg.embed_dim) + "]");
  }
  const std::size_t batch = x.rows();
  check_state(state, batch, hidden);

  CellResult r;
  r.mx = TensorF32({batch, hidden});
  TensorF32 pih({batch, 4 * hidden});
  gemm(as_matrix(x), Transpose::kNo, as_matrix(w.w_mx), Transpose::kYes, as_matrix(r.mx),
       Accumulate::kOverwrite);
  gemm(as_matrix(x), Transpose::kNo, as_matrix(w.w_ih), Transpose::kYes, as_matrix(pih),
       Accumulate::kOverwrite);
  r.hm = TensorF32({batch, hidden});
  r.m = TensorF32({batch, hidden});
  r.preactivations = TensorF32({batch, 4 * hidden});
  TensorF32 gates({batch, 4 * hidden});
  TensorF32 tanh_c({batch, hidden});
  r.state = HiddenState::zeros(batch, hidden);
  const StepOutputs out{as_matrix(r.hm), as_matrix(r.m),      as_matrix(gates),
                        as_matrix(r.state.c), as_matrix(tanh_c), as_matrix(r.state.h)};
  cell_step(w, mixed, as_matrix(std::as_const(r.mx)), as_matrix(std::as_const(pih)),
            as_matrix(state.h), as_matrix(state.c), PackedRhs(as_matrix(w.w_mh), Transpose::kYes),
            PackedRhs(as_matrix(w.w_hm), Transpose::kYes), r.preactivations, out);
  return r;
}

std::vector<float> token_losses(const TensorF32& logits, std::span<const std::uint8_t> targets,
                                std::span<const std::uint8_t> valid) {
  const std::size_t vocab = logits.dims().back();
  const std::size_t rows = logits.size() / vocab;
  if (targets.size() != rows || (!valid.empty() && valid.size() != rows)) {
    throw ShapeError("token_losses: " + std::to_string(rows) + " positions but " +
                     std::to_string(targets.size()) + " targets");
  }
  std::vector<float> out(rows, 0.0F);
  std::vector<float> scratch(vocab);
  const float* z = logits.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    if (!valid.empty() && valid[r] == 0) {
      continue;
    }
    const float* row = z + r * vocab;
    const float top = *std::max_element(row, row + vocab);
    for (std::size_t k = 0; k < vocab; ++k) {
      scratch[k] = numerics::exp_f32(row[k] - top);
    }
    float sum = 0.0F;
    for (std::size_t k = 0; k < vocab; ++k) {
      sum += scratch[k];
    }
    out[r] = (top + std::log(sum)) - row[targets[r]];
  }
  return out;
}

BackwardResult loss_and_backward(const MlstmParams& params, const ForwardResult& forward,
                                 std::span<const std::uint8_t> targets,
                                 std::span<const std::uint8_t> valid, const LossOptions& options) {
  const ForwardCache& cache = forward.cache;
  if (cache.batch == 0) {
    throw ContractViolation("loss_and_backward: forward pass was run without a cache");
  }
  if (!(options.loss_scale > 0.0F) || !std::isfinite(options.loss_scale)) {
    throw ContractViolation("loss_and_backward: loss scale must be positive and finite");
  }
  const MlstmConfig& cfg = params.config();
  const WorkingWeights& w = params.working();
  const ParamTensors& masters = params.masters();
  const bool mixed = params.precision() == Precision::kMixed;
  const std::size_t batch = cache.batch;
  const std::size_t steps = cache.steps;
  const std::size_t rows = batch * steps;
  const std::size_t hidden = cfg.hidden_dim;
  const std::size_t vocab = cfg.vocab_size;

  BackwardResult result;
  const std::vector<float> losses = token_losses(forward.logits, targets, valid);
  result.scored = valid.empty() ? rows
                                : static_cast<std::size_t>(std::count_if(
                                      valid.begin(), valid.end(), [](std::uint8_t v) { return v != 0; }));
  result.loss_sum_nats = numerics::reduce_f32(losses);
  const float normalizer =
      options.normalizer > 0.0F ? options.normalizer : static_cast<float>(result.scored);
  result.loss_nats = normalizer > 0.0F ? result.loss_sum_nats / normalizer : 0.0F;
  result.grads = ParamTensors::zeros(cfg);
  if (result.scored == 0) {
    return result;
  }

  // d(scaled loss)/d(logits) in time-major row order, stored at working
  // precision.
  const float coef = options.loss_scale / normalizer;
  TensorF32 dlogits({rows, vocab});
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t src = b * steps + t;
      if (!valid.empty() && valid[src] == 0) {
        continue;
      }
      const float* __restrict z = forward.logits.data().data() + src * vocab;
      float* __restrict d = dlogits.row(cache.index(b, t)).data();
      const float top = *std::max_element(z, z + vocab);
      for (std::size_t k = 0; k < vocab; ++k) {
        d[k] = numerics::exp_f32(z[k] - top);
      }
      float sum = 0.0F;
      for (std::size_t k = 0; k < vocab; ++k) {
        sum += d[k];
      }
      for (std::size_t k = 0; k < vocab; ++k) {
        d[k] = (d[k] / sum) * coef;
      }
      d[targets[src]] -= coef;
    }
  }
  if (mixed) {
    numerics::round_to_half(dlogits.data());
  }

  SequenceGrads& g = result.grads;
  gemm(as_matrix(dlogits), Transpose::kYes, as_matrix(cache.h), Transpose::kNo,
       as_matrix(g[ParamId::kDecoderWeight]), Accumulate::kOverwrite);
  column_sums(dlogits, g[ParamId::kDecoderBias].data());

  TensorF32 dh_out({rows, hidden});
  gemm(as_matrix(dlogits), Transpose::kNo, as_matrix(w.decoder), Transpose::kNo, as_matrix(dh_out),
       Accumulate::kOverwrite);
  if (mixed) {
    numerics::round_to_half(dh_out.data());
  }

  TensorF32 dz_all({rows, 4 * hidden});
  TensorF32 dmx_all({rows, hidden});
  TensorF32 dhm_all({rows, hidden});
  TensorF32 dh_rec({batch, hidden});
  TensorF32 dc_next({batch, hidden});
  TensorF32 dm({batch, hidden});
  const PackedRhs w_hm(as_matrix(w.w_hm), Transpose::kNo);
  const PackedRhs w_mh(as_matrix(w.w_mh), Transpose::kNo);

  for (std::size_t t = steps; t-- > 0;) {
    MatrixView dz = step_rows(dz_all, t, batch);
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t r = cache.index(b, t);
      const float* __restrict gates = cache.gates.row(r).data();
      const float* __restrict tanh_c = cache.tanh_c.row(r).data();
      const float* __restrict c_prev =
          t == 0 ? cache.c0.row(b).data() : cache.c.row(r - batch).data();
      const float* __restrict dh_top = dh_out.row(r).data();
      const float* __restrict dh_r = dh_rec.row(b).data();
      float* __restrict dcn = dc_next.row(b).data();
      float* __restrict dzr = dz.data + b * dz.stride;
      for (std::size_t j = 0; j < hidden; ++j) {
        const float ig = gates[j];
        const float fg = gates[hidden + j];
        const float og = gates[2 * hidden + j];
        const float ug = gates[3 * hidden + j];
        const float tc = tanh_c[j];
        const float dh = dh_top[j] + dh_r[j];
        const float dc = dcn[j] + dh * og * (1.0F - tc * tc);
        dzr[j] = dc * ug * ig * (1.0F - ig);
        dzr[hidden + j] = dc * c_prev[j] * fg * (1.0F - fg);
        dzr[2 * hidden + j] = dh * tc * og * (1.0F - og);
        dzr[3 * hidden + j] = dc * ig * (1.0F - ug * ug);
        dcn[j] = dc * fg;
      }
    }
    round_rows(dz, mixed);

    gemm(dz, Transpose::kNo, w_hm, as_matrix(dm), Accumulate::kOverwrite);
    MatrixView dmx = step_rows(dmx_all, t, batch);
    MatrixView dhm = step_rows(dhm_all, t, batch);
    const ConstMatrixView mx = step_rows(cache.mx, t, batch);
    const ConstMatrixView hm = step_rows(cache.hm, t, batch);
    {
      const std::size_t n = batch * hidden;
      const float* __restrict d = dm.data().data();
      const float* __restrict hmp = hm.data;
      const float* __restrict mxp = mx.data;
      float* __restrict dmxp = dmx.data;
      float* __restrict dhmp = dhm.data;
      for (std::size_t i = 0; i < n; ++i) {
        dmxp[i] = d[i] * hmp[i];
        dhmp[i] = d[i] * mxp[i];
      }
    }
    round_rows(dmx, mixed);
    round_rows(dhm, mixed);

    if (t > 0) {
      gemm(dhm, Transpose::kNo, w_mh, as_matrix(dh_rec), Accumulate::kOverwrite);
      if (mixed) {
        numerics::round_to_half(dh_rec.data());
      }
    }
  }

  // Effective-weight gradients, accumulated over every position in order.
  TensorF32 g_ih({4 * hidden, cfg.embed_dim});
  TensorF32 g_hm({4 * hidden, hidden});
  TensorF32 g_mx({hidden, cfg.embed_dim});
  TensorF32 g_mh({hidden, hidden});
  gemm(as_matrix(dz_all), Transpose::kYes, as_matrix(cache.x), Transpose::kNo, as_matrix(g_ih),
       Accumulate::kOverwrite);
  gemm(as_matrix(dz_all), Transpose::kYes, as_matrix(cache.m), Transpose::kNo, as_matrix(g_hm),
       Accumulate::kOverwrite);
  gemm(as_matrix(dmx_all), Transpose::kYes, as_matrix(cache.x), Transpose::kNo, as_matrix(g_mx),
       Accumulate::kOverwrite);
  gemm(as_matrix(dhm_all), Transpose::kYes, as_matrix(cache.h_prev), Transpose::kNo,
       as_matrix(g_mh), Accumulate::kOverwrite);
  column_sums(dz_all, g[ParamId::kGateBias].data());

  TensorF32 dx({rows, cfg.embed_dim});
  gemm(as_matrix(dz_all), Transpose::kNo, as_matrix(w.w_ih), Transpose::kNo, as_matrix(dx),
       Accumulate::kOverwrite);
  gemm(as_matrix(dmx_all), Transpose::kNo, as_matrix(w.w_mx), Transpose::kNo, as_matrix(dx),
       Accumulate::kAdd);
  if (mixed) {
    numerics::round_to_half(dx.data());
  }
  TensorF32& g_embed = g[ParamId::kEmbedding];
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t b = r % batch;
    const std::size_t t = r / batch;
    auto dst = g_embed.row(cache.tokens[b * steps + t]);
    const auto src = dx.row(r);
    for (std::size_t j = 0; j < dst.size(); ++j) {
      dst[j] += src[j];
    }
  }

  weight_norm_backward(g_mx, masters[ParamId::kMxDirection], masters[ParamId::kMxGain], w.mx_norms,
                       g[ParamId::kMxDirection], g[ParamId::kMxGain]);
  weight_norm_backward(g_mh, masters[ParamId::kMhDirection], masters[ParamId::kMhGain], w.mh_norms,
                       g[ParamId::kMhDirection], g[ParamId::kMhGain]);
  weight_norm_backward(g_ih, masters[ParamId::kIhDirection], masters[ParamId::kIhGain], w.ih_norms,
                       g[ParamId::kIhDirection], g[ParamId::kIhGain]);
  weight_norm_backward(g_hm, masters[ParamId::kHmDirection], masters[ParamId::kHmGain], w.hm_norms,
                       g[ParamId::kHmDirection], g[ParamId::kHmGain]);

  result.overflow = !g.all_finite();
  return result;
}

}  // namespace mlstm::model
