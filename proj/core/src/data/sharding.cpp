#include "mlstm/data/sharding.hpp"

#include <algorithm>
#include <numeric>

#include "mlstm/common/error.hpp"
#include "mlstm/common/rng.hpp"

namespace mlstm::data {

namespace {
constexpr std::size_t kMinTrainShards = 1000;
}

std::size_t shard_count(ShardKind kind, std::size_t batch_size) noexcept {
  return kind == ShardKind::kEval ? batch_size : std::max(kMinTrainShards, batch_size);
}

std::vector<Shard> make_shards(const std::vector<std::string>& split, std::size_t batch_size,
                               ShardKind kind, std::uint64_t seed) {
  if (split.empty()) {
    throw InsufficientDataError("cannot shard an empty split");
  }
  if (batch_size == 0) {
    throw ConfigError("batch size must be at least 1");
  }
  const std::size_t count = shard_count(kind, batch_size);
  if (split.size() < count) {
    throw ShardsExceedRecordsError(
        "split has " + std::to_string(split.size()) + " records but " + std::to_string(count) +
        " shards are required; lower the batch size or supply more records");
  }

  std::vector<std::size_t> order(split.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  std::vector<Shard> shards(count);
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::string& text = shards[i % count].text;
    if (i >= count) {
      text.push_back('\n');
    }
    text += split[order[i]];
  }
  return shards;
}

}  // namespace mlstm::data
