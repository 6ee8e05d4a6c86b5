#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mlstm/model/mlstm.hpp"

namespace mlstm::eval {

/// l * log2(e). Throws ContractViolation for negative or non-finite l.
double bpc_from_nats(double nats);

struct EvalReport {
  double mean_bpc = 0.0;             // token-weighted over shards
  std::vector<double> shard_bpc;
  std::vector<std::uint64_t> shard_tokens;
  std::uint64_t tokens = 0;
};

struct EvalOptions {
  std::size_t batch_size = 16;
  std::size_t seq_len = 256;
  std::uint64_t shard_seed = 0;
};

/// Cuts the split into batch_size shards and streams each one in seq_len
/// windows, zero state at each shard start and carried between windows. The
/// short final window of a shard is scored too. Throws InsufficientDataError
/// for an empty split.
EvalReport evaluate(const model::MlstmParams& params, const std::vector<std::string>& split,
                    const EvalOptions& options = {});

enum class FeatureKind { kCell, kHidden };

FeatureKind parse_feature_kind(const std::string& text);

/// Final recurrent state after reading the whole text from zero state.
/// Throws DataError for an empty text.
std::vector<float> featurize(const model::MlstmParams& params, const std::string& text,
                             FeatureKind kind = FeatureKind::kCell);

/// featurize over many texts, run in small padded batches.
std::vector<std::vector<float>> featurize_all(const model::MlstmParams& params,
                                              const std::vector<std::string>& texts,
                                              FeatureKind kind = FeatureKind::kCell);

}  // namespace mlstm::eval
