#include "mlstm/data/minibatch.hpp"

#include <algorithm>
#include <numeric>

#include "mlstm/common/error.hpp"

namespace mlstm::data {

std::size_t Minibatch::valid_count() const noexcept {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

MinibatchIterator::MinibatchIterator(std::vector<Shard> shards, std::size_t batch,
                                     std::size_t steps, TailPolicy tail)
    : shards_(std::move(shards)), batch_(batch), steps_(steps), tail_(tail) {
  if (batch_ == 0 || steps_ == 0) {
    throw ConfigError("minibatch needs positive batch size and sequence length");
  }
  restart();
  state_.epoch = 0;
}

void MinibatchIterator::restart() {
  state_.row_shard.assign(batch_, -1);
  state_.row_offset.assign(batch_, 0);
  state_.row_fresh.assign(batch_, 1);
  state_.next_shard = 0;
  ++state_.epoch;
  for (std::size_t r = 0; r < batch_; ++r) {
    settle_row(r);
  }
}

bool MinibatchIterator::has_window(std::int64_t shard, std::uint64_t offset) const noexcept {
  const std::size_t len = shards_[static_cast<std::size_t>(shard)].text.size();
  if (tail_ == TailPolicy::kDrop) {
    return offset + steps_ + 1 <= len;
  }
  return offset + 1 < len;
}

// Moves the row forward to a shard position that has a window, pulling fresh
// shards from the queue as needed; leaves it at -1 once the queue is empty.
void MinibatchIterator::settle_row(std::size_t row) {
  std::int64_t& shard = state_.row_shard[row];
  std::uint64_t& offset = state_.row_offset[row];
  while (shard < 0 || !has_window(shard, offset)) {
    if (state_.next_shard >= shards_.size()) {
      shard = -1;
      offset = 0;
      return;
    }
    shard = static_cast<std::int64_t>(state_.next_shard++);
    offset = 0;
    state_.row_fresh[row] = 1;
  }
}

std::optional<Minibatch> MinibatchIterator::next() {
  const bool any_active = std::any_of(state_.row_shard.begin(), state_.row_shard.end(),
                                      [](std::int64_t s) { return s >= 0; });
  if (!any_active) {
    return std::nullopt;
  }

  Minibatch mb;
  mb.batch = batch_;
  mb.steps = steps_;
  mb.inputs.assign(batch_ * steps_, 0);
  mb.targets.assign(batch_ * steps_, 0);
  mb.valid.assign(batch_ * steps_, 0);
  mb.reset_mask.assign(batch_, 0);
  mb.active.assign(batch_, 0);
  mb.shard_of_row.assign(batch_, -1);

  for (std::size_t r = 0; r < batch_; ++r) {
    const std::int64_t shard = state_.row_shard[r];
    if (shard < 0) {
      continue;
    }
    const std::string& text = shards_[static_cast<std::size_t>(shard)].text;
    const std::uint64_t offset = state_.row_offset[r];
    const std::size_t avail = std::min<std::size_t>(steps_, text.size() - offset - 1);
    auto* in = mb.inputs.data() + r * steps_;
    auto* tg = mb.targets.data() + r * steps_;
    auto* va = mb.valid.data() + r * steps_;
    for (std::size_t t = 0; t < avail; ++t) {
      in[t] = static_cast<std::uint8_t>(text[offset + t]);
      tg[t] = static_cast<std::uint8_t>(text[offset + t + 1]);
      va[t] = 1;
    }
    mb.reset_mask[r] = state_.row_fresh[r];
    mb.active[r] = 1;
    mb.shard_of_row[r] = shard;

    state_.row_fresh[r] = 0;
    state_.row_offset[r] = offset + steps_;
    settle_row(r);
  }
  return mb;
}

void MinibatchIterator::restore(const IteratorState& state) {
  if (state.row_shard.size() != batch_ || state.row_offset.size() != batch_ ||
      state.row_fresh.size() != batch_ || state.next_shard > shards_.size()) {
    throw ContractViolation("iterator cursor does not match batch size or shard count");
  }
  for (std::size_t r = 0; r < batch_; ++r) {
    const std::int64_t s = state.row_shard[r];
    if (s >= static_cast<std::int64_t>(shards_.size()) ||
        (s >= 0 && state.row_offset[r] > shards_[static_cast<std::size_t>(s)].text.size())) {
      throw ContractViolation("iterator cursor points outside its shard");
    }
  }
  state_ = state;
}

}  // namespace mlstm::data
