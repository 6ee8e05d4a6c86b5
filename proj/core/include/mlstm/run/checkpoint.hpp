#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "mlstm/data/minibatch.hpp"
#include "mlstm/model/mlstm.hpp"
#include "mlstm/optim/adam.hpp"
#include "mlstm/run/config.hpp"
#include "mlstm/scaler/loss_scaler.hpp"

namespace mlstm::run {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything needed to continue a run bit-for-bit.
struct TrainingState {
  std::uint64_t iteration = 0;   // batches consumed
  std::uint64_t epoch = 0;
  std::uint64_t applied = 0;
  std::uint64_t skipped = 0;
  std::uint64_t divergence_streak = 0;
  scaler::LossScaleState scaler;
  model::ParamTensors masters;
  optim::AdamState adam;
  model::HiddenState hidden;     // all batch rows
  data::IteratorState cursor;

  friend bool operator==(const TrainingState&, const TrainingState&) = default;
};

struct Checkpoint {
  RunConfig config;
  TrainingState state;
};

/// Layout: "MLMF", u32 version, u64 header length, header text of key=value
/// lines (config, then counters and scaler/optimizer scalars), tensor records
/// (u16 name length, name, u8 dtype 0=f16 1=f32, u8 rank, u64 dims, payload),
/// and an FNV-1a 64 checksum of every preceding byte. All integers and
/// payloads little-endian.
std::string encode_checkpoint(const Checkpoint& checkpoint);

/// Throws CheckpointError on bad magic, foreign version, truncation, checksum
/// mismatch, or missing fields.
Checkpoint decode_checkpoint(const std::string& bytes);

/// Writes through a temporary file and renames it into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mlstm::run
