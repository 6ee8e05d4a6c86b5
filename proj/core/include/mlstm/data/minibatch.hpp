#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "mlstm/data/sharding.hpp"

namespace mlstm::data {

/// Row-major [batch x steps] byte windows. targets[b][t] is the byte that
/// follows inputs[b][t] in the same shard. Positions with valid == 0 carry no
/// target (inactive row, or the short final window of a shard when tails are
/// kept) and must be excluded from the loss.
struct Minibatch {
  std::size_t batch = 0;
  std::size_t steps = 0;
  std::vector<std::uint8_t> inputs;
  std::vector<std::uint8_t> targets;
  std::vector<std::uint8_t> valid;
  std::vector<std::uint8_t> reset_mask;  // per row: first window of a shard
  std::vector<std::uint8_t> active;      // per row: row still has a shard
  std::vector<std::int64_t> shard_of_row;

  std::size_t valid_count() const noexcept;
};

enum class TailPolicy {
  kDrop,  // a window needs steps + 1 bytes; shorter remainders are skipped
  kKeep,  // a final short window is emitted with the missing positions masked
};

/// Cursor for checkpointing: which shard each row is reading and where.
struct IteratorState {
  std::vector<std::int64_t> row_shard;  // -1 once the row has run dry
  std::vector<std::uint64_t> row_offset;
  std::vector<std::uint8_t> row_fresh;
  std::uint64_t next_shard = 0;
  std::uint64_t epoch = 0;

  bool operator==(const IteratorState&) const = default;
};

/// Each of the B rows reads one shard at a time front to back. When a row's
/// shard has no further window the row pulls the next shard from a shared
/// queue (shards in index order) and raises reset_mask on that shard's first
/// window. next() returns nullopt once every row has run out of shards.
class MinibatchIterator {
 public:
  MinibatchIterator(std::vector<Shard> shards, std::size_t batch, std::size_t steps,
                    TailPolicy tail = TailPolicy::kDrop);

  std::optional<Minibatch> next();

  /// Starts a new pass over the same shards, in the same order.
  void restart();

  const std::vector<Shard>& shards() const noexcept { return shards_; }
  std::size_t batch() const noexcept { return batch_; }
  std::size_t steps() const noexcept { return steps_; }
  std::uint64_t epoch() const noexcept { return state_.epoch; }

  const IteratorState& state() const noexcept { return state_; }
  /// Throws ContractViolation if the cursor does not fit these shards.
  void restore(const IteratorState& state);

 private:
  bool has_window(std::int64_t shard, std::uint64_t offset) const noexcept;
  void settle_row(std::size_t row);

  std::vector<Shard> shards_;
  std::size_t batch_;
  std::size_t steps_;
  TailPolicy tail_;
  IteratorState state_;
};

}  // namespace mlstm::data
