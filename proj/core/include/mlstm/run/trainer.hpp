#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "mlstm/data/corpus.hpp"
#include "mlstm/ddp/worker_group.hpp"
#include "mlstm/eval/evaluate.hpp"
#include "mlstm/run/checkpoint.hpp"
#include "mlstm/run/config.hpp"

namespace mlstm::run {

/// One row of the metrics log.
struct IterationMetrics {
  std::uint64_t iter = 0;  // 1-based
  std::uint64_t epoch = 0;
  double lr = 0.0;
  float alpha = 0.0F;
  bool skipped = false;
  double loss_nats = 0.0;
  double bpc = 0.0;
  double wall_seconds = 0.0;
};

inline constexpr const char* kMetricsHeader =
    "iter,epoch,lr,alpha,skipped,loss_nats,bpc,wall_seconds";

/// The CSV line for one row, without the newline.
std::string format_metrics_row(const IterationMetrics& m);

enum class StopReason { kDecayComplete, kMaxEpochs, kMaxIters, kDiverged, kStopRequested };

std::string to_string(StopReason reason);

struct TrainResult {
  StopReason reason = StopReason::kDecayComplete;
  std::string message;
  TrainingState state;
  double last_loss_nats = 0.0;
};

struct TrainHooks {
  /// Called after every iteration; return false to stop after it.
  std::function<bool(const IterationMetrics&)> on_iteration;
  ddp::OverflowInjector overflow_injector;
};

/// Owns the model replicas, optimizer and scaler state, the training
/// iterator and the output files of one run.
class Trainer {
 public:
  /// Fresh run: initializes parameters from config.seed and shards the
  /// training split with config.data_seed.
  Trainer(RunConfig config, const data::CorpusSplits& splits);

  /// Continues from a checkpoint. The checkpoint's config is used except for
  /// out_dir, which comes from `out_dir`.
  Trainer(const Checkpoint& checkpoint, const data::CorpusSplits& splits,
          std::filesystem::path out_dir);

  ~Trainer();
  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  /// Trains until the schedule completes, max_epochs or max_iters is reached,
  /// the divergence detector fires, or a hook asks to stop. Appends to
  /// out_dir/metrics.csv and writes out_dir/final.ckpt (plus
  /// out_dir/iter_<n>.ckpt every checkpoint_every iterations) when out_dir is
  /// set.
  TrainResult run(const TrainHooks& hooks = {});

  Checkpoint checkpoint() const;
  const model::MlstmParams& params() const;
  const RunConfig& config() const noexcept { return config_; }
  double initial_lr() const noexcept { return initial_lr_; }

 private:
  void init_from(const TrainingState& state, const data::CorpusSplits& splits);

  RunConfig config_;
  double initial_lr_ = 0.0;
  TrainingState counters_;  // counters and scaler; tensors live in group_
  std::unique_ptr<ddp::WorkerGroup> group_;
  std::unique_ptr<data::MinibatchIterator> iterator_;
};

/// Held-out evaluation settings for a run: eval_batch_size shards, the run's
/// window length, and a shard shuffle derived from data_seed.
eval::EvalOptions eval_options(const RunConfig& config);

/// Loads the corpus named by the config and splits it 1000:1:1 with
/// config.data_seed.
data::CorpusSplits load_splits(const RunConfig& config);

}  // namespace mlstm::run
