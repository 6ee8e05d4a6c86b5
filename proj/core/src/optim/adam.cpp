#include "mlstm/optim/adam.hpp"

#include <cmath>
#include <string>

#include "mlstm/common/error.hpp"

namespace mlstm::optim {

AdamState AdamState::zeros_like(const model::ParamTensors& params, float beta1, float beta2,
                                float eps) {
  AdamState s;
  s.m = model::ParamTensors::zeros_like(params);
  s.v = model::ParamTensors::zeros_like(params);
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.eps = eps;
  return s;
}

void adam_step(model::ParamTensors& masters, const model::SequenceGrads& grads, AdamState& state,
               float lr) {
  if (!(lr >= 0.0F)) {
    throw ContractViolation("adam: learning rate must be non-negative");
  }
  if (!grads.all_finite()) {
    throw ContractViolation("adam: gradients are not finite");
  }
  for (std::size_t i = 0; i < model::kParamCount; ++i) {
    if (grads[i].dims() != masters[i].dims() || state.m[i].dims() != masters[i].dims() ||
        state.v[i].dims() != masters[i].dims()) {
      throw ShapeError("adam: shape mismatch on " + std::string(model::param_name(i)));
    }
  }

  ++state.t;
  const auto t = static_cast<double>(state.t);
  const auto bias1 = static_cast<float>(1.0 - std::pow(static_cast<double>(state.beta1), t));
  const auto bias2 = static_cast<float>(1.0 - std::pow(static_cast<double>(state.beta2), t));
  const float b1 = state.beta1;
  const float b2 = state.beta2;

  for (std::size_t i = 0; i < model::kParamCount; ++i) {
    auto p = masters[i].data();
    const auto g = grads[i].data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = b1 * m[k] + (1.0F - b1) * g[k];
      v[k] = b2 * v[k] + (1.0F - b2) * (g[k] * g[k]);
      const float m_hat = m[k] / bias1;
      const float v_hat = v[k] / bias2;
      p[k] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

void adam_apply(model::MlstmParams& params, const model::SequenceGrads& grads, AdamState& state,
                float lr) {
  adam_step(params.mutable_masters(), grads, state, lr);
  params.refresh_working();
}

}  // namespace mlstm::optim
