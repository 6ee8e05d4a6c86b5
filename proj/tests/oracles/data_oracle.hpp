#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mlstm/common/rng.hpp"
#include "mlstm/data/corpus.hpp"
#include "mlstm/data/minibatch.hpp"
#include "mlstm/data/sharding.hpp"

namespace oracle {

// Random printable records without newlines; lengths skewed short so that
// many shards end up shorter than a window.
inline std::vector<std::string> tiny_records(mlstm::Rng& rng, std::size_t count,
                                             std::size_t max_len) {
  std::vector<std::string> out(count);
  for (auto& r : out) {
    const std::size_t len = rng.uniform_index(max_len + 1);
    for (std::size_t i = 0; i < len; ++i) {
      r.push_back(static_cast<char>(32 + rng.uniform_index(95)));
    }
  }
  return out;
}

inline std::string split_lines_back(const std::string& text, std::vector<std::string>& out) {
  std::size_t start = 0;
  while (true) {
    const std::size_t nl = text.find('\n', start);
    out.push_back(text.substr(start, nl == std::string::npos ? std::string::npos : nl - start));
    if (nl == std::string::npos) {
      break;
    }
    start = nl + 1;
  }
  return {};
}

// Number of windows a shard of `len` bytes yields.
inline std::size_t expected_windows(std::size_t len, std::size_t steps, bool keep_tail) {
  if (len < 2) {
    return 0;
  }
  if (keep_tail) {
    return (len - 2) / steps + 1;  // offsets 0, T, ... while offset + 1 < len
  }
  return len >= steps + 1 ? (len - 1) / steps : 0;
}

// Sharding invariants: shard count, records dealt exactly once.
inline std::string check_shards(const std::vector<std::string>& split,
                                const std::vector<mlstm::data::Shard>& shards,
                                std::size_t expected_count) {
  if (shards.size() != expected_count) {
    return "shard count " + std::to_string(shards.size()) + " != " +
           std::to_string(expected_count);
  }
  std::vector<std::string> recovered;
  for (const auto& s : shards) {
    split_lines_back(s.text, recovered);
  }
  std::vector<std::string> want = split;
  std::sort(want.begin(), want.end());
  std::sort(recovered.begin(), recovered.end());
  if (want != recovered) {
    return "shards do not hold each record exactly once";
  }
  // Round-robin dealing keeps shard record counts within one of each other.
  std::size_t lo = SIZE_MAX;
  std::size_t hi = 0;
  for (const auto& s : shards) {
    const auto n = static_cast<std::size_t>(std::count(s.text.begin(), s.text.end(), '\n')) + 1;
    lo = std::min(lo, n);
    hi = std::max(hi, n);
  }
  if (hi - lo > 1) {
    return "unbalanced shards";
  }
  return {};
}

// Drains an iterator and checks contiguity, coverage, reconstruction,
// reset_mask placement, queue order and masking against the shard texts.
inline std::string check_iteration(const std::vector<mlstm::data::Shard>& shards,
                                   std::size_t batch, std::size_t steps, bool keep_tail) {
  using mlstm::data::MinibatchIterator;
  using mlstm::data::TailPolicy;
  MinibatchIterator it(shards, batch, steps, keep_tail ? TailPolicy::kKeep : TailPolicy::kDrop);
  std::ostringstream err;
  std::vector<std::int64_t> row_shard(batch, -1);
  std::vector<std::size_t> row_offset(batch, 0);
  std::map<std::int64_t, std::size_t> windows_seen;
  std::map<std::int64_t, std::string> rebuilt;
  std::int64_t last_started = -1;
  std::size_t mb_index = 0;
  while (auto mb = it.next()) {
    if (mb->batch != batch || mb->steps != steps || mb->inputs.size() != batch * steps) {
      return "bad minibatch shape";
    }
    bool any_active = false;
    for (std::size_t r = 0; r < batch; ++r) {
      const std::int64_t s = mb->shard_of_row[r];
      const auto* va = mb->valid.data() + r * steps;
      if (s < 0) {
        if (mb->active[r] != 0 || mb->reset_mask[r] != 0 ||
            std::any_of(va, va + steps, [](std::uint8_t v) { return v != 0; })) {
          err << "inactive row " << r << " carries data in batch " << mb_index;
          return err.str();
        }
        row_shard[r] = -1;
        continue;
      }
      any_active = true;
      const bool fresh = s != row_shard[r];
      if (fresh) {
        if (windows_seen.count(s) != 0) {
          err << "shard " << s << " visited twice";
          return err.str();
        }
        if (s <= last_started) {
          err << "shard " << s << " started out of queue order";
          return err.str();
        }
        last_started = s;
        row_shard[r] = s;
        row_offset[r] = 0;
      }
      if ((mb->reset_mask[r] != 0) != fresh) {
        err << "reset_mask wrong for row " << r << " in batch " << mb_index;
        return err.str();
      }
      const std::string& text = shards[static_cast<std::size_t>(s)].text;
      const std::size_t off = row_offset[r];
      const std::size_t avail = std::min(steps, text.size() - off - 1);
      if (!keep_tail && avail != steps) {
        return "short window emitted under the drop policy";
      }
      for (std::size_t t = 0; t < steps; ++t) {
        const bool should = t < avail;
        if ((va[t] != 0) != should) {
          err << "valid mask wrong at row " << r << " step " << t;
          return err.str();
        }
        if (should && (mb->inputs[r * steps + t] != static_cast<std::uint8_t>(text[off + t]) ||
                       mb->targets[r * steps + t] != static_cast<std::uint8_t>(text[off + t + 1]))) {
          err << "window not contiguous with shard " << s << " at offset " << off + t;
          return err.str();
        }
      }
      std::string& acc = rebuilt[s];
      if (acc.empty()) {
        acc.push_back(text[off]);
      }
      for (std::size_t t = 0; t < avail; ++t) {
        acc.push_back(static_cast<char>(mb->targets[r * steps + t]));
      }
      ++windows_seen[s];
      row_offset[r] = off + steps;
    }
    if (!any_active) {
      return "minibatch with no active row";
    }
    ++mb_index;
  }
  for (std::size_t s = 0; s < shards.size(); ++s) {
    const std::size_t want = expected_windows(shards[s].text.size(), steps, keep_tail);
    const auto key = static_cast<std::int64_t>(s);
    const std::size_t got = windows_seen.count(key) != 0 ? windows_seen[key] : 0;
    if (got != want) {
      err << "shard " << s << " of " << shards[s].text.size() << " bytes gave " << got
          << " windows, expected " << want;
      return err.str();
    }
    if (want > 0) {
      const std::string& text = shards[s].text;
      const std::size_t covered = keep_tail ? text.size() : want * steps + 1;
      if (rebuilt[key] != text.substr(0, covered)) {
        err << "shard " << s << " does not reconstruct";
        return err.str();
      }
    }
  }
  return {};
}

// Split invariants: sizes and a partition of the record multiset.
inline std::string check_split(const mlstm::data::Corpus& corpus,
                               const mlstm::data::CorpusSplits& s) {
  const std::size_t n = corpus.records.size();
  const auto share = static_cast<std::size_t>(std::max<long long>(1, std::llround(n / 1002.0)));
  if (s.val.size() != share || s.test.size() != share || s.train.size() != n - 2 * share) {
    return "split sizes " + std::to_string(s.train.size()) + "/" + std::to_string(s.val.size()) +
           "/" + std::to_string(s.test.size()) + " for " + std::to_string(n) + " records";
  }
  std::vector<std::string> all = s.train;
  all.insert(all.end(), s.val.begin(), s.val.end());
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::vector<std::string> want = corpus.records;
  std::sort(all.begin(), all.end());
  std::sort(want.begin(), want.end());
  return all == want ? std::string{} : std::string("split is not a partition");
}

struct PipelineCase {
  std::size_t records = 0;
  std::size_t max_len = 0;
  std::size_t batch = 0;
  std::size_t steps = 0;
  std::uint64_t seed = 0;
};

inline PipelineCase random_case(mlstm::Rng& rng, std::uint64_t seed) {
  PipelineCase c;
  c.seed = seed;
  c.batch = 1 + rng.uniform_index(24);
  c.steps = 1 + rng.uniform_index(40);
  // >= 1002 records so every split can feed max(1000, B) training shards,
  // total size kept under 64 KB.
  c.records = 1002 + rng.uniform_index(1500);
  c.max_len = 2 + rng.uniform_index(60000 / c.records);
  return c;
}

// Full corpus -> split -> shards -> minibatch check for one case.
inline std::string check_pipeline(const PipelineCase& c) {
  using namespace mlstm::data;
  mlstm::Rng rng(c.seed);
  Corpus corpus{tiny_records(rng, c.records, c.max_len), c.seed};
  const CorpusSplits splits = split_corpus(corpus, {});
  if (auto e = check_split(corpus, splits); !e.empty()) {
    return e;
  }
  const std::size_t train_count = std::max<std::size_t>(1000, c.batch);
  const auto train = make_shards(splits.train, c.batch, ShardKind::kTrain, c.seed + 1);
  if (auto e = check_shards(splits.train, train, train_count); !e.empty()) {
    return "train: " + e;
  }
  if (auto e = check_iteration(train, c.batch, c.steps, false); !e.empty()) {
    return "train: " + e;
  }
  // Eval shards come from a split large enough for B shards; reuse the
  // training records for this.
  const auto eval = make_shards(splits.train, 16, ShardKind::kEval, c.seed + 2);
  if (auto e = check_shards(splits.train, eval, 16); !e.empty()) {
    return "eval: " + e;
  }
  if (auto e = check_iteration(eval, 16, c.steps, true); !e.empty()) {
    return "eval: " + e;
  }
  return {};
}

}  // namespace oracle
