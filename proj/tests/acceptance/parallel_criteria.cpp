#include <algorithm>
#include <cmath>
#include <vector>

#include <fmt/core.h>

#include "criteria.hpp"
#include "data_oracle.hpp"
#include "mlstm/common/rng.hpp"
#include "mlstm/data/corpus.hpp"
#include "mlstm/data/minibatch.hpp"
#include "mlstm/data/sharding.hpp"
#include "mlstm/data/synthetic.hpp"
#include "mlstm/ddp/worker_group.hpp"
#include "mlstm/optim/lr_policy.hpp"

namespace acceptance {

Outcome data_pipeline(const Context&) {
  constexpr std::uint64_t kCases = 100;
  mlstm::Rng rng(909);
  std::size_t max_bytes = 0;
  for (std::uint64_t i = 0; i < kCases; ++i) {
    const oracle::PipelineCase c = oracle::random_case(rng, 1000 + i);
    max_bytes = std::max(max_bytes, c.records * c.max_len);
    if (auto e = oracle::check_pipeline(c); !e.empty()) {
      return {false, fmt::format("case {} (records {}, B {}, T {}): {}", i, c.records, c.batch,
                                 c.steps, e)};
    }
  }
  return {true, fmt::format("{} random corpora (at most {} bytes each): split, shard counts, "
                            "contiguity, coverage, reconstruction and reset_mask all hold",
                            kCases, max_bytes)};
}

namespace {

struct DdpRun {
  std::vector<float> masters;
  std::vector<bool> applied;
  std::size_t fingerprint_checks = 0;
};

DdpRun train_group(const mlstm::model::MlstmParams& init,
                   const std::vector<mlstm::data::Minibatch>& stream, std::size_t workers) {
  using namespace mlstm;
  ddp::WorkerGroup group(init, optim::AdamState::zeros_like(init.masters()), workers,
                         stream.front().batch);
  scaler::LossScaleState s;
  if (init.precision() == model::Precision::kFp32) {
    s.alpha = 1.0F;
    s.alpha_max = 1.0F;
  }
  optim::LrPolicy policy;
  policy.base_lr = 3e-3;
  policy.decay_iters = stream.size();
  DdpRun run;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const auto out = group.step(stream[i], optim::lr_at(policy, policy.base_lr, i), s);
    // step() already compares every replica's hash with replica 0 and throws
    // on a mismatch; check it independently here as well.
    for (std::size_t w = 0; w < workers; ++w) {
      if (group.fingerprint(w) != out.fingerprint) {
        throw std::runtime_error(fmt::format("replica {} hash differs at step {}", w, i));
      }
      ++run.fingerprint_checks;
    }
    run.applied.push_back(out.applied);
  }
  run.masters = group.replica(workers - 1).masters().flatten();
  return run;
}

// Largest per-tensor ||a - b||_inf / ||b||_inf.
double max_tensor_rel_diff(const mlstm::model::MlstmConfig& cfg, const std::vector<float>& a,
                           const std::vector<float>& b) {
  double worst = 0.0;
  std::size_t offset = 0;
  for (std::size_t id = 0; id < mlstm::model::kParamCount; ++id) {
    std::size_t n = 1;
    for (auto d : mlstm::model::param_dims(static_cast<mlstm::model::ParamId>(id), cfg)) {
      n *= d;
    }
    double diff = 0.0;
    double ref = 0.0;
    for (std::size_t i = offset; i < offset + n; ++i) {
      diff = std::max(diff, std::fabs(static_cast<double>(a[i]) - b[i]));
      ref = std::max(ref, std::fabs(static_cast<double>(b[i])));
    }
    worst = std::max(worst, ref > 0.0 ? diff / ref : diff);
    offset += n;
  }
  return worst;
}

}  // namespace

Outcome ddp_equivalence(const Context&) {
  using namespace mlstm;
  constexpr std::size_t kBatch = 32;
  constexpr std::size_t kSteps = 64;
  constexpr std::size_t kIters = 100;
  constexpr double kTol = 1e-3;

  data::Corpus corpus{data::synthetic_review_corpus(1 << 20, 31), 31};
  const data::CorpusSplits splits = data::split_corpus(corpus);
  data::MinibatchIterator it(data::make_shards(splits.train, kBatch, data::ShardKind::kTrain, 32),
                             kBatch, kSteps);
  std::vector<data::Minibatch> stream;
  while (stream.size() < kIters) {
    auto mb = it.next();
    if (!mb) {
      return {false, "corpus too small for the batch stream"};
    }
    stream.push_back(std::move(*mb));
  }

  model::MlstmConfig cfg;
  cfg.hidden_dim = 64;
  cfg.embed_dim = 32;
  cfg.seq_len = kSteps;
  bool pass = true;
  std::string detail;
  std::size_t checks = 0;
  for (auto precision : {model::Precision::kMixed, model::Precision::kFp32}) {
    const auto init = model::MlstmParams::initialize(cfg, precision, 5);
    const DdpRun serial = train_group(init, stream, 1);
    detail += precision == model::Precision::kMixed ? "mixed:" : "; fp32:";
    for (std::size_t n : {2, 4, 8}) {
      const DdpRun par = train_group(init, stream, n);
      checks += par.fingerprint_checks;
      const double rel = max_tensor_rel_diff(cfg, par.masters, serial.masters);
      const bool same_skips = par.applied == serial.applied;
      pass = pass && rel <= kTol && same_skips;
      detail += fmt::format(" N={} {:.2e}{}", n, rel, same_skips ? "" : " (skip pattern differs)");
    }
  }
  detail = fmt::format("max per-tensor rel diff vs N=1 after {} iters (tol {:.0e}), {}; {} replica "
                       "hash checks equal",
                       kIters, kTol, detail, checks);
  return {pass, detail};
}

}  // namespace acceptance
