#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mlstm/common/rng.hpp"
#include "mlstm/model/mlstm.hpp"
#include "reference_mlstm.hpp"

namespace oracle {

struct TensorGradError {
  std::string name;
  double rel_err = 0.0;  // ||analytic - fd||_inf / ||fd||_inf
};

struct GradCheckResult {
  std::vector<TensorGradError> tensors;
  double loss_model = 0.0;
  double loss_reference = 0.0;

  double worst() const {
    double w = 0.0;
    for (const auto& t : tensors) {
      w = std::max(w, t.rel_err);
    }
    return w;
  }
};

// Random small fp32 model and window; compares loss_and_backward against
// central differences of the double reference. Gains and biases are
// perturbed away from their initial values so every tensor carries signal.
inline GradCheckResult gradient_check(std::uint64_t seed, std::size_t hidden = 4,
                                      std::size_t embed = 3, std::size_t batch = 2,
                                      std::size_t steps = 5) {
  using namespace mlstm::model;
  MlstmConfig cfg;
  cfg.hidden_dim = hidden;
  cfg.embed_dim = embed;
  cfg.seq_len = steps;
  MlstmParams init = MlstmParams::initialize(cfg, Precision::kFp32, seed);
  ParamTensors masters = init.masters();
  mlstm::Rng rng(seed ^ 0x5151U);
  for (auto id : {ParamId::kMxGain, ParamId::kMhGain, ParamId::kIhGain, ParamId::kHmGain}) {
    for (float& g : masters[id].data()) {
      g *= rng.uniform(0.6F, 1.6F);
    }
  }
  for (auto id : {ParamId::kGateBias, ParamId::kDecoderBias}) {
    for (float& b : masters[id].data()) {
      b = rng.uniform(-0.3F, 0.3F);
    }
  }
  // Scale up the recurrent path so the gradient through time is not tiny.
  for (float& g : masters[ParamId::kMhGain].data()) {
    g *= 2.0F;
  }
  const MlstmParams params(cfg, Precision::kFp32, masters);

  // Few distinct symbols so embedding rows receive several contributions.
  std::vector<std::uint8_t> tokens(batch * steps);
  std::vector<std::uint8_t> targets(batch * steps);
  std::vector<std::uint8_t> valid(batch * steps, 1);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    tokens[i] = static_cast<std::uint8_t>(97 + rng.uniform_index(5));
    targets[i] = static_cast<std::uint8_t>(97 + rng.uniform_index(5));
  }
  valid.back() = 0;

  const auto fwd =
      forward_sequence(params, tokens, batch, steps, HiddenState::zeros(batch, hidden));
  const auto bwd = loss_and_backward(params, fwd, targets, valid, LossOptions{});

  const RefModel ref = RefModel::from(masters, cfg);
  const auto fd = finite_difference_grads(ref, tokens, targets, valid, batch, steps);

  GradCheckResult out;
  out.loss_model = bwd.loss_nats;
  std::size_t scored = 0;
  for (const auto v : valid) {
    scored += v;
  }
  out.loss_reference = ref.loss_sum(tokens, targets, valid, batch, steps) / scored;
  for (std::size_t i = 0; i < kParamCount; ++i) {
    const auto g = bwd.grads[i].data();
    double diff = 0.0;
    double scale = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      diff = std::max(diff, std::fabs(static_cast<double>(g[k]) - fd[i][k]));
      scale = std::max(scale, std::fabs(fd[i][k]));
    }
    out.tensors.push_back({std::string(param_name(i)), scale > 0.0 ? diff / scale : diff});
  }
  return out;
}

}  // namespace oracle
