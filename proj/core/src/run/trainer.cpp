#include "mlstm/run/trainer.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "mlstm/common/error.hpp"
#include "mlstm/data/sharding.hpp"
#include "mlstm/eval/evaluate.hpp"

namespace mlstm::run {

namespace {

// Shard shuffles use a stream distinct from the split shuffle.
constexpr std::uint64_t kTrainShardSalt = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kEvalShardSalt = 0xC2B2AE3D27D4EB4FULL;

std::string shortest(double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

std::string format_metrics_row(const IterationMetrics& m) {
  char wall[32];
  std::snprintf(wall, sizeof wall, "%.3f", m.wall_seconds);
  return std::to_string(m.iter) + "," + std::to_string(m.epoch) + "," + shortest(m.lr) + "," +
         shortest(static_cast<double>(m.alpha)) + "," + (m.skipped ? "1" : "0") + "," +
         shortest(m.loss_nats) + "," + shortest(m.bpc) + "," + wall;
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kDecayComplete:
      return "decay_complete";
    case StopReason::kMaxEpochs:
      return "max_epochs";
    case StopReason::kMaxIters:
      return "max_iters";
    case StopReason::kDiverged:
      return "diverged";
    case StopReason::kStopRequested:
      return "stop_requested";
  }
  return "unknown";
}

eval::EvalOptions eval_options(const RunConfig& config) {
  return {config.eval_batch_size, config.model.seq_len, config.data_seed ^ kEvalShardSalt};
}

data::CorpusSplits load_splits(const RunConfig& config) {
  if (config.corpus.empty()) {
    throw ConfigError("no corpus configured");
  }
  return data::split_corpus(
      data::load_corpus(config.corpus, config.corpus_format, config.data_seed));
}

Trainer::Trainer(RunConfig config, const data::CorpusSplits& splits) : config_(std::move(config)) {
  config_.validate();
  TrainingState state;
  model::MlstmParams params =
      model::MlstmParams::initialize(config_.model, config_.precision, config_.seed);
  state.masters = params.masters();
  state.adam = optim::AdamState::zeros_like(state.masters);
  state.hidden = model::HiddenState::zeros(config_.batch_size, config_.model.hidden_dim);
  state.scaler = config_.scaler_state();
  init_from(state, splits);
  counters_.cursor = iterator_->state();
}

Trainer::Trainer(const Checkpoint& checkpoint, const data::CorpusSplits& splits,
                 std::filesystem::path out_dir)
    : config_(checkpoint.config) {
  config_.out_dir = std::move(out_dir);
  config_.validate();
  init_from(checkpoint.state, splits);
  iterator_->restore(checkpoint.state.cursor);
}

Trainer::~Trainer() = default;

void Trainer::init_from(const TrainingState& state, const data::CorpusSplits& splits) {
  initial_lr_ = optim::scale_lr(config_.lr_policy());
  counters_ = state;
  const model::MlstmParams params(config_.model, config_.precision, state.masters);
  group_ = std::make_unique<ddp::WorkerGroup>(params, state.adam, config_.n_workers,
                                              config_.batch_size);
  group_->set_global_state(state.hidden);
  std::vector<data::Shard> shards = data::make_shards(
      splits.train, config_.batch_size, data::ShardKind::kTrain, config_.data_seed ^ kTrainShardSalt);
  iterator_ = std::make_unique<data::MinibatchIterator>(std::move(shards), config_.batch_size,
                                                        config_.model.seq_len);
  // Keep the tensors only in the group; counters_ holds scalars and cursor.
  counters_.masters = {};
  counters_.adam.m = {};
  counters_.adam.v = {};
  counters_.hidden = {};
}

const model::MlstmParams& Trainer::params() const { return group_->replica(0); }

Checkpoint Trainer::checkpoint() const {
  Checkpoint ck;
  ck.config = config_;
  ck.state = counters_;
  ck.state.masters = group_->replica(0).masters();
  ck.state.adam = group_->adam(0);
  ck.state.hidden = group_->global_state();
  ck.state.cursor = iterator_->state();
  return ck;
}

TrainResult Trainer::run(const TrainHooks& hooks) {
  if (hooks.overflow_injector) {
    group_->set_overflow_injector(hooks.overflow_injector);
  }
  std::ofstream metrics;
  if (!config_.out_dir.empty()) {
    std::filesystem::create_directories(config_.out_dir);
    const auto path = config_.out_dir / "metrics.csv";
    const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
    metrics.open(path, std::ios::app);
    if (!metrics) {
      throw ConfigError("cannot write " + path.string());
    }
    if (fresh) {
      metrics << kMetricsHeader << '\n';
    }
  }

  const optim::LrPolicy policy = config_.lr_policy();
  const auto start = std::chrono::steady_clock::now();
  TrainResult result;
  double last_loss = 0.0;

  while (true) {
    if (counters_.iteration >= config_.decay_iters) {
      result.reason = StopReason::kDecayComplete;
      break;
    }
    if (config_.max_iters != 0 && counters_.iteration >= config_.max_iters) {
      result.reason = StopReason::kMaxIters;
      break;
    }
    std::optional<data::Minibatch> mb = iterator_->next();
    if (!mb) {
      ++counters_.epoch;
      if (counters_.epoch >= config_.max_epochs) {
        result.reason = StopReason::kMaxEpochs;
        break;
      }
      iterator_->restart();
      group_->reset_state();
      continue;
    }

    const std::uint64_t clock = config_.schedule_clock == ScheduleClock::kAllBatches
                                    ? counters_.iteration
                                    : counters_.applied;
    const double lr = optim::lr_at(policy, initial_lr_, clock);
    const ddp::StepOutcome out = group_->step(*mb, lr, counters_.scaler);
    ++counters_.iteration;
    if (out.applied) {
      ++counters_.applied;
    } else {
      ++counters_.skipped;
    }

    const bool bad = !std::isfinite(out.loss_nats) || out.loss_nats > config_.divergence_loss_nats;
    counters_.divergence_streak = bad ? counters_.divergence_streak + 1 : 0;
    last_loss = out.loss_nats;

    IterationMetrics m;
    m.iter = counters_.iteration;
    m.epoch = counters_.epoch;
    m.lr = lr;
    m.alpha = out.alpha;
    m.skipped = !out.applied;
    m.loss_nats = out.loss_nats;
    m.bpc = std::isfinite(out.loss_nats) ? out.loss_nats * std::numbers::log2e : out.loss_nats;
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (metrics.is_open()) {
      metrics << format_metrics_row(m) << '\n';
    }
    if (!config_.out_dir.empty() && config_.checkpoint_every != 0 &&
        counters_.iteration % config_.checkpoint_every == 0) {
      save_checkpoint(config_.out_dir / ("iter_" + std::to_string(counters_.iteration) + ".ckpt"),
                      checkpoint());
    }

    if (counters_.divergence_streak >= config_.divergence_window) {
      result.reason = StopReason::kDiverged;
      result.message = "training loss was non-finite or above " +
                       shortest(config_.divergence_loss_nats) + " nats for " +
                       std::to_string(counters_.divergence_streak) +
                       " consecutive iterations (last loss " + shortest(out.loss_nats) +
                       ", loss scale " + shortest(counters_.scaler.alpha) + ")";
      break;
    }
    if (hooks.on_iteration && !hooks.on_iteration(m)) {
      result.reason = StopReason::kStopRequested;
      break;
    }
  }

  if (metrics.is_open()) {
    metrics.flush();
  }
  if (!config_.out_dir.empty()) {
    save_checkpoint(config_.out_dir / "final.ckpt", checkpoint());
  }
  result.state = checkpoint().state;
  result.last_loss_nats = last_loss;
  return result;
}

}  // namespace mlstm::run
