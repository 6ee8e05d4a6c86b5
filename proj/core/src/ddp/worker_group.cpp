#include "mlstm/ddp/worker_group.hpp"

#include <exception>
#include <thread>

#include "mlstm/common/error.hpp"
#include "mlstm/common/hash.hpp"
#include "mlstm/numerics/reduce.hpp"

namespace mlstm::ddp {

using model::HiddenState;

WorkerGroup::WorkerGroup(const model::MlstmParams& initial, const optim::AdamState& adam,
                         std::size_t n_workers, std::size_t global_batch)
    : global_batch_(global_batch),
      transport_(initial.precision() == model::Precision::kMixed ? Transport::kHalf
                                                                 : Transport::kSingle) {
  if (n_workers == 0 || global_batch == 0 || global_batch % n_workers != 0) {
    throw ConfigError("batch size " + std::to_string(global_batch) +
                      " is not divisible by n_workers " + std::to_string(n_workers));
  }
  const std::size_t hidden = initial.config().hidden_dim;
  for (std::size_t w = 0; w < n_workers; ++w) {
    replicas_.push_back(initial);
    adams_.push_back(adam);
    states_.push_back(HiddenState::zeros(global_batch / n_workers, hidden));
  }
}

std::uint64_t WorkerGroup::fingerprint(std::size_t w) const {
  Fnv1a64 h;
  for (const auto& t : replicas_.at(w).masters()) {
    h.update_values<float>(t.data());
  }
  const optim::AdamState& a = adams_.at(w);
  for (const auto& t : a.m) {
    h.update_values<float>(t.data());
  }
  for (const auto& t : a.v) {
    h.update_values<float>(t.data());
  }
  const std::uint64_t step = a.t;
  h.update_values<std::uint64_t>(std::span<const std::uint64_t>(&step, 1));
  return h.digest();
}

HiddenState WorkerGroup::global_state() const {
  const std::size_t local = local_batch();
  HiddenState out = HiddenState::zeros(global_batch_, states_.front().hidden());
  for (std::size_t w = 0; w < states_.size(); ++w) {
    out.assign_rows(w * local, states_[w]);
  }
  return out;
}

void WorkerGroup::set_global_state(const HiddenState& state) {
  if (state.batch() != global_batch_ || state.hidden() != states_.front().hidden()) {
    throw ShapeError("hidden state does not match the worker group");
  }
  const std::size_t local = local_batch();
  for (std::size_t w = 0; w < states_.size(); ++w) {
    states_[w] = state.slice(w * local, local);
  }
}

void WorkerGroup::reset_state() {
  for (auto& s : states_) {
    s = HiddenState::zeros(s.batch(), s.hidden());
  }
}

WorkerGroup::LocalResult WorkerGroup::run_local(std::size_t w, const data::Minibatch& batch,
                                                float alpha, float normalizer) {
  const std::size_t local = local_batch();
  const std::size_t first = w * local;
  const std::size_t steps = batch.steps;
  HiddenState& state = states_[w];
  for (std::size_t r = 0; r < local; ++r) {
    if (batch.reset_mask[first + r] != 0 || batch.active[first + r] == 0) {
      state.reset_row(r);
    }
  }
  const auto tokens = std::span(batch.inputs).subspan(first * steps, local * steps);
  const auto targets = std::span(batch.targets).subspan(first * steps, local * steps);
  const auto valid = std::span(batch.valid).subspan(first * steps, local * steps);

  const model::MlstmParams& params = replicas_[w];
  model::ForwardResult fwd = model::forward_sequence(params, tokens, local, steps, state);
  model::BackwardResult bwd =
      model::loss_and_backward(params, fwd, targets, valid, {alpha, normalizer});

  LocalResult out;
  out.grads = bwd.grads.flatten();
  out.loss_sum = bwd.loss_sum_nats;
  out.scored = bwd.scored;
  out.overflow = bwd.overflow || (injector_ && injector_(w, steps_));
  state = std::move(fwd.state);
  out.reset_rows = state.reset_non_finite_rows();
  return out;
}

StepOutcome WorkerGroup::step(const data::Minibatch& batch, double lr,
                              scaler::LossScaleState& scaler) {
  if (batch.batch != global_batch_) {
    throw ShapeError("minibatch has " + std::to_string(batch.batch) + " rows, group expects " +
                     std::to_string(global_batch_));
  }
  const std::size_t n = replicas_.size();
  StepOutcome out;
  out.alpha = scaler.alpha;
  out.scored = batch.valid_count();
  // Each worker divides by the global count, so its gradient is already its
  // share of the global mean and the ring only sums. Partial sums on a
  // binary16 wire then stay within the range of the mean itself instead of
  // growing with N and overflowing earlier than a single worker would.
  const auto normalizer = static_cast<float>(out.scored);

  std::vector<LocalResult> local(n);
  if (n == 1) {
    local[0] = run_local(0, batch, out.alpha, normalizer);
  } else {
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> threads;
    threads.reserve(n);
    for (std::size_t w = 0; w < n; ++w) {
      threads.emplace_back([&, w] {
        try {
          local[w] = run_local(w, batch, out.alpha, normalizer);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : threads) {
      t.join();
    }
    for (const auto& e : errors) {
      if (e) {
        std::rethrow_exception(e);
      }
    }
  }

  std::vector<std::vector<float>> buffers(n);
  double loss_sum = 0.0;
  bool overflow = false;
  for (std::size_t w = 0; w < n; ++w) {
    buffers[w] = std::move(local[w].grads);
    loss_sum += local[w].loss_sum;
    overflow = overflow || local[w].overflow;
    out.reset_rows += local[w].reset_rows;
  }
  out.loss_nats = out.scored > 0 ? loss_sum / static_cast<double>(out.scored) : 0.0;

  RingResult reduced = ring_allreduce(buffers, transport_, Reduction::kSum);
  out.payload_bytes = reduced.stats.bytes_sent.front();
  overflow = overflow || !numerics::all_finite(reduced.reduced);
  out.overflow = overflow;

  const scaler::ScaleDecision decision = scaler::scaler_step(scaler, overflow);
  if (decision == scaler::ScaleDecision::kApplyUpdate) {
    model::SequenceGrads grads = model::ParamTensors::zeros(replicas_.front().config());
    grads.unflatten(reduced.reduced);
    grads = scaler::unscale_master_grads(std::move(grads), out.alpha);
    for (std::size_t w = 0; w < n; ++w) {
      optim::adam_apply(replicas_[w], grads, adams_[w], static_cast<float>(lr));
    }
    out.applied = true;
  }
  ++steps_;

  out.fingerprint = fingerprint(0);
  for (std::size_t w = 1; w < n; ++w) {
    if (fingerprint(w) != out.fingerprint) {
      throw ConsistencyError("replica " + std::to_string(w) + " diverged from replica 0 at step " +
                             std::to_string(steps_));
    }
  }
  return out;
}

}  // namespace mlstm::ddp
