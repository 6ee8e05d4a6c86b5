#include <benchmark/benchmark.h>

#include <vector>

#include "mlstm/common/rng.hpp"
#include "mlstm/ddp/worker_group.hpp"
#include "mlstm/model/mlstm.hpp"

namespace {

using namespace mlstm;

struct Fixture {
  model::MlstmConfig config;
  std::size_t batch;
  std::vector<std::uint8_t> tokens;
  std::vector<std::uint8_t> targets;
  std::vector<std::uint8_t> valid;

  Fixture(std::size_t hidden, std::size_t b, std::size_t steps) : batch(b) {
    config.hidden_dim = hidden;
    config.embed_dim = 64;
    config.seq_len = steps;
    Rng rng(11);
    tokens.resize(b * steps);
    targets.resize(b * steps);
    valid.assign(b * steps, 1);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      tokens[i] = static_cast<std::uint8_t>(97 + rng.uniform_index(26));
      targets[i] = static_cast<std::uint8_t>(97 + rng.uniform_index(26));
    }
  }
};

model::Precision precision_arg(std::int64_t v) {
  return v == 0 ? model::Precision::kMixed : model::Precision::kFp32;
}

void BM_Forward(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)), 32, 256);
  const auto params = model::MlstmParams::initialize(f.config, precision_arg(state.range(1)), 1);
  const auto h0 = model::HiddenState::zeros(f.batch, f.config.hidden_dim);
  for (auto _ : state) {
    auto out = model::forward_sequence(params, f.tokens, f.batch, f.config.seq_len, h0);
    benchmark::DoNotOptimize(out.logits.data().data());
  }
}
BENCHMARK(BM_Forward)->Args({256, 0})->Args({256, 1})->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)), 32, 256);
  const auto params = model::MlstmParams::initialize(f.config, precision_arg(state.range(1)), 1);
  const auto h0 = model::HiddenState::zeros(f.batch, f.config.hidden_dim);
  for (auto _ : state) {
    auto out = model::forward_sequence(params, f.tokens, f.batch, f.config.seq_len, h0);
    auto back = model::loss_and_backward(params, out, f.targets, f.valid, {1024.0F, 0.0F});
    benchmark::DoNotOptimize(back.loss_nats);
  }
}
BENCHMARK(BM_ForwardBackward)->Args({256, 0})->Args({256, 1})->Unit(benchmark::kMillisecond);

void BM_TrainStep(benchmark::State& state) {
  const Fixture f(256, 32, 256);
  const auto params = model::MlstmParams::initialize(f.config, model::Precision::kMixed, 1);
  ddp::WorkerGroup group(params, optim::AdamState::zeros_like(params.masters()),
                         static_cast<std::size_t>(state.range(0)), f.batch);
  data::Minibatch mb;
  mb.batch = f.batch;
  mb.steps = f.config.seq_len;
  mb.inputs = f.tokens;
  mb.targets = f.targets;
  mb.valid = f.valid;
  mb.reset_mask.assign(f.batch, 0);
  mb.active.assign(f.batch, 1);
  mb.shard_of_row.assign(f.batch, 0);
  scaler::LossScaleState scaler;
  for (auto _ : state) {
    auto out = group.step(mb, 1e-4, scaler);
    benchmark::DoNotOptimize(out.loss_nats);
  }
}
BENCHMARK(BM_TrainStep)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
