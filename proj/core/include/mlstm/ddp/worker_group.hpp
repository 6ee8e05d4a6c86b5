#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "mlstm/data/minibatch.hpp"
#include "mlstm/ddp/ring_allreduce.hpp"
#include "mlstm/model/mlstm.hpp"
#include "mlstm/optim/adam.hpp"
#include "mlstm/scaler/loss_scaler.hpp"

namespace mlstm::ddp {

struct StepOutcome {
  double loss_nats = 0.0;   // global mean over scored positions, unscaled
  std::size_t scored = 0;
  float alpha = 1.0F;       // loss scale used for this step
  bool overflow = false;
  bool applied = false;
  std::size_t reset_rows = 0;  // rows whose state went non-finite and was zeroed
  std::uint64_t fingerprint = 0;
  std::uint64_t payload_bytes = 0;  // per worker, this step
};

/// Returns true to force worker `worker` to report overflow at `step`.
using OverflowInjector = std::function<bool(std::size_t worker, std::uint64_t step)>;

/// N replicas of one model, each reading an equal contiguous slice of the
/// global batch rows and holding its own master weights, Adam moments and
/// recurrent state. Loss scale and learning rate come from the coordinator.
class WorkerGroup {
 public:
  /// Throws ConfigError unless n_workers divides global_batch.
  WorkerGroup(const model::MlstmParams& initial, const optim::AdamState& adam,
              std::size_t n_workers, std::size_t global_batch);

  std::size_t size() const noexcept { return replicas_.size(); }
  std::size_t global_batch() const noexcept { return global_batch_; }
  std::size_t local_batch() const noexcept { return global_batch_ / replicas_.size(); }

  /// Forward/backward on every worker, all-reduce, one scaler decision, and an
  /// identical Adam update on every replica when the decision is to apply.
  /// Throws ConsistencyError if the replicas stop being bit-identical.
  StepOutcome step(const data::Minibatch& batch, double lr, scaler::LossScaleState& scaler);

  const model::MlstmParams& replica(std::size_t w) const { return replicas_.at(w); }
  const optim::AdamState& adam(std::size_t w) const { return adams_.at(w); }
  std::uint64_t fingerprint(std::size_t w) const;

  /// The recurrent state of all rows, concatenated in worker order.
  model::HiddenState global_state() const;
  void set_global_state(const model::HiddenState& state);
  void reset_state();

  void set_overflow_injector(OverflowInjector injector) { injector_ = std::move(injector); }

 private:
  struct LocalResult {
    std::vector<float> grads;
    double loss_sum = 0.0;
    std::size_t scored = 0;
    bool overflow = false;
    std::size_t reset_rows = 0;
  };

  LocalResult run_local(std::size_t w, const data::Minibatch& batch, float alpha, float normalizer);

  std::vector<model::MlstmParams> replicas_;
  std::vector<optim::AdamState> adams_;
  std::vector<model::HiddenState> states_;
  std::size_t global_batch_;
  Transport transport_;
  std::uint64_t steps_ = 0;
  OverflowInjector injector_;
};

}  // namespace mlstm::ddp
