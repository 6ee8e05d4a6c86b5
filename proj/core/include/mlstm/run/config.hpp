#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mlstm/data/corpus.hpp"
#include "mlstm/model/config.hpp"
#include "mlstm/optim/lr_policy.hpp"
#include "mlstm/scaler/loss_scaler.hpp"

namespace mlstm::run {

enum class ScheduleClock {
  kAllBatches,      // the decay clock advances on every batch, skipped or not
  kAppliedUpdates,  // only applied updates advance it
};

struct RunConfig {
  model::MlstmConfig model;
  model::Precision precision = model::Precision::kMixed;

  std::size_t batch_size = 128;
  std::size_t n_workers = 1;

  double base_lr = 5e-4;
  optim::ScalingRule lr_rule = optim::ScalingRule::kNone;
  std::uint64_t decay_iters = 100000;
  std::uint32_t max_epochs = 3;
  std::uint64_t max_iters = 0;  // 0: run until decay_iters or max_epochs
  ScheduleClock schedule_clock = ScheduleClock::kAllBatches;

  float loss_scale = 65536.0F;
  std::uint32_t scale_growth_interval = 2000;
  float loss_scale_min = 1.0F;
  float loss_scale_max = 16777216.0F;

  std::uint32_t divergence_window = 50;
  // A batch counts toward divergence when its loss is non-finite or above
  // this ceiling. The default is the loss of a uniform guess over 256 bytes.
  double divergence_loss_nats = 5.545177444479562;

  std::uint64_t seed = 1;       // parameter initialization
  std::uint64_t data_seed = 1;  // split and shard shuffles

  std::filesystem::path corpus;
  data::CorpusFormat corpus_format = data::CorpusFormat::kLines;
  std::size_t eval_batch_size = 16;

  std::filesystem::path out_dir;
  std::uint64_t checkpoint_every = 0;  // 0: final checkpoint only

  /// Throws ConfigError naming the first invalid field.
  void validate() const;

  optim::LrPolicy lr_policy() const;
  scaler::LossScaleState scaler_state() const;

  /// key=value lines in a fixed order. Output locations (out_dir) are left
  /// out so that a run's identity does not depend on where it writes.
  std::string serialize() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// The recognized keys in serialization order, plus out_dir.
const std::vector<std::string>& config_keys();

/// Applies one key=value setting. Throws ConfigError on unknown keys or
/// unparsable values.
void set_config_value(RunConfig& config, const std::string& key, const std::string& value);

/// Parses "key = value" lines; '#' starts a comment. Does not validate.
RunConfig parse_config(const std::string& text, RunConfig base = {});

RunConfig load_config_file(const std::filesystem::path& path, RunConfig base = {});

std::string to_string(ScheduleClock clock);

}  // namespace mlstm::run
