#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mlstm::data {

/// Records sampled without replacement from one split, concatenated with a
/// newline between records.
struct Shard {
  std::string text;
  std::size_t cursor = 0;
};

enum class ShardKind { kTrain, kEval };

/// Eval: B shards. Train: max(1000, B) shards.
std::size_t shard_count(ShardKind kind, std::size_t batch_size) noexcept;

/// Seeded shuffle of the split, then records dealt round-robin to shards.
/// Throws ShardsExceedRecordsError when there are fewer records than shards.
std::vector<Shard> make_shards(const std::vector<std::string>& split, std::size_t batch_size,
                               ShardKind kind, std::uint64_t seed);

}  // namespace mlstm::data
