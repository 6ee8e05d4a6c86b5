#include "mlstm/eval/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mlstm/common/error.hpp"
#include "mlstm/data/minibatch.hpp"
#include "mlstm/data/sharding.hpp"

namespace mlstm::eval {

double bpc_from_nats(double nats) {
  if (!(nats >= 0.0) || !std::isfinite(nats)) {
    throw ContractViolation("bpc_from_nats: loss must be finite and non-negative");
  }
  return nats * std::numbers::log2e;
}

EvalReport evaluate(const model::MlstmParams& params, const std::vector<std::string>& split,
                    const EvalOptions& options) {
  if (split.empty()) {
    throw InsufficientDataError("evaluation split is empty");
  }
  std::vector<data::Shard> shards =
      data::make_shards(split, options.batch_size, data::ShardKind::kEval, options.shard_seed);
  data::MinibatchIterator it(std::move(shards), options.batch_size, options.seq_len,
                             data::TailPolicy::kKeep);

  std::vector<double> loss(options.batch_size, 0.0);
  std::vector<std::uint64_t> count(options.batch_size, 0);
  model::HiddenState state =
      model::HiddenState::zeros(options.batch_size, params.config().hidden_dim);
  while (auto mb = it.next()) {
    for (std::size_t r = 0; r < mb->batch; ++r) {
      if (mb->reset_mask[r] != 0 || mb->active[r] == 0) {
        state.reset_row(r);
      }
    }
    model::ForwardResult fwd = model::forward_sequence(params, mb->inputs, mb->batch, mb->steps,
                                                       state, model::CacheMode::kDiscard);
    const std::vector<float> losses = model::token_losses(fwd.logits, mb->targets, mb->valid);
    for (std::size_t r = 0; r < mb->batch; ++r) {
      if (mb->active[r] == 0) {
        continue;
      }
      const auto shard = static_cast<std::size_t>(mb->shard_of_row[r]);
      for (std::size_t t = 0; t < mb->steps; ++t) {
        const std::size_t i = r * mb->steps + t;
        if (mb->valid[i] != 0) {
          loss[shard] += losses[i];
          ++count[shard];
        }
      }
    }
    state = std::move(fwd.state);
    state.reset_non_finite_rows();
  }

  EvalReport report;
  double total = 0.0;
  for (std::size_t s = 0; s < loss.size(); ++s) {
    report.shard_tokens.push_back(count[s]);
    report.shard_bpc.push_back(count[s] ? bpc_from_nats(loss[s] / count[s]) : 0.0);
    total += loss[s];
    report.tokens += count[s];
  }
  if (report.tokens == 0) {
    throw InsufficientDataError("evaluation split has no scorable characters");
  }
  report.mean_bpc = bpc_from_nats(total / static_cast<double>(report.tokens));
  return report;
}

FeatureKind parse_feature_kind(const std::string& text) {
  if (text == "cell" || text == "c") {
    return FeatureKind::kCell;
  }
  if (text == "hidden" || text == "h") {
    return FeatureKind::kHidden;
  }
  throw ConfigError("feature kind must be 'cell' or 'hidden', got '" + text + "'");
}

namespace {

// Keeps the forward cache of one featurization batch under ~64 MB.
constexpr std::size_t kFeatureCacheFloats = std::size_t{16} << 20;

void featurize_batch(const model::MlstmParams& params, const std::vector<std::string>& texts,
                     std::size_t first, std::size_t count, FeatureKind kind,
                     std::vector<std::vector<float>>& out) {
  std::size_t steps = 0;
  for (std::size_t i = first; i < first + count; ++i) {
    steps = std::max(steps, texts[i].size());
  }
  std::vector<std::uint8_t> tokens(count * steps, 0);
  for (std::size_t b = 0; b < count; ++b) {
    const std::string& t = texts[first + b];
    std::copy(t.begin(), t.end(), tokens.begin() + static_cast<std::ptrdiff_t>(b * steps));
  }
  const std::size_t hidden = params.config().hidden_dim;
  const model::ForwardResult fwd = model::forward_sequence(
      params, tokens, count, steps, model::HiddenState::zeros(count, hidden));
  const numerics::TensorF32& src = kind == FeatureKind::kCell ? fwd.cache.c : fwd.cache.h;
  for (std::size_t b = 0; b < count; ++b) {
    const auto row = src.row(fwd.cache.index(b, texts[first + b].size() - 1));
    out[first + b].assign(row.begin(), row.end());
  }
}

}  // namespace

std::vector<float> featurize(const model::MlstmParams& params, const std::string& text,
                             FeatureKind kind) {
  return featurize_all(params, {text}, kind).front();
}

std::vector<std::vector<float>> featurize_all(const model::MlstmParams& params,
                                              const std::vector<std::string>& texts,
                                              FeatureKind kind) {
  for (const auto& t : texts) {
    if (t.empty()) {
      throw DataError("cannot featurize an empty text");
    }
  }
  std::vector<std::vector<float>> out(texts.size());
  const std::size_t per_row = 12 * params.config().hidden_dim + params.config().vocab_size;
  std::size_t i = 0;
  while (i < texts.size()) {
    // Grow the batch while the padded cache stays within budget.
    std::size_t count = 1;
    std::size_t steps = texts[i].size();
    while (i + count < texts.size() && count < 64) {
      const std::size_t s = std::max(steps, texts[i + count].size());
      if ((count + 1) * s * per_row > kFeatureCacheFloats) {
        break;
      }
      steps = s;
      ++count;
    }
    featurize_batch(params, texts, i, count, kind, out);
    i += count;
  }
  return out;
}

}  // namespace mlstm::eval
