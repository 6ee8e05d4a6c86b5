#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "mlstm/common/error.hpp"
#include "mlstm/data/minibatch.hpp"
#include "mlstm/ddp/ring_allreduce.hpp"
#include "mlstm/ddp/speedup.hpp"
#include "mlstm/ddp/worker_group.hpp"
#include "mlstm/numerics/half.hpp"

namespace {

using namespace mlstm::ddp;

std::vector<std::vector<float>> random_buffers(std::size_t n, std::size_t len, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<float> nd(0.0F, 10.0F);
  std::vector<std::vector<float>> out(n, std::vector<float>(len));
  for (auto& b : out) {
    for (float& x : b) {
      x = nd(gen);
    }
  }
  return out;
}

class RingSizes : public ::testing::TestWithParam<std::size_t> {};

TEST_P(RingSizes, SingleTransportMatchesDoubleMean) {
  const std::size_t n = GetParam();
  for (std::size_t len : {1UL, 7UL, 64UL, 1001UL}) {
    const auto bufs = random_buffers(n, len, n * 1000 + len);
    const auto r = ring_allreduce(bufs, Transport::kSingle);
    ASSERT_EQ(r.reduced.size(), len);
    for (std::size_t i = 0; i < len; ++i) {
      double want = 0.0;
      for (const auto& b : bufs) {
        want += b[i];
      }
      want /= static_cast<double>(n);
      ASSERT_NEAR(r.reduced[i], want, 1e-5 * (1.0 + std::fabs(want)) * static_cast<double>(n));
    }
    EXPECT_EQ(r.stats.steps, 2 * (n - 1));
  }
}

TEST_P(RingSizes, HalfTransportStaysWithinHalfRounding) {
  const std::size_t n = GetParam();
  const auto bufs = random_buffers(n, 500, n);
  const auto r = ring_allreduce(bufs, Transport::kHalf);
  for (std::size_t i = 0; i < 500; ++i) {
    double want = 0.0;
    double mag = 0.0;
    for (const auto& b : bufs) {
      want += b[i];
      mag += std::fabs(b[i]);
    }
    want /= static_cast<double>(n);
    // One half rounding per hop plus the final one, each <= 2^-11 relative
    // to the running partial sums.
    ASSERT_NEAR(r.reduced[i], want, mag * static_cast<double>(n + 1) * 0x1p-11) << i;
    ASSERT_EQ(mlstm::numerics::round_to_half(r.reduced[i]), r.reduced[i]);
  }
}

TEST_P(RingSizes, PayloadIsTwoNMinusOneOverN) {
  const std::size_t n = GetParam();
  const std::size_t len = 840;  // divisible by 1..8
  const auto r = ring_allreduce(random_buffers(n, len, 3), Transport::kHalf);
  for (const auto bytes : r.stats.bytes_sent) {
    EXPECT_EQ(bytes, ring_payload_bytes(len, n, Transport::kHalf));
  }
  EXPECT_EQ(ring_payload_bytes(len, n, Transport::kSingle), 2 * (n - 1) * len * 4 / n);
}

INSTANTIATE_TEST_SUITE_P(Workers, RingSizes, ::testing::Values(1, 2, 3, 4, 8));

TEST(Ring, NonFinitePropagates) {
  auto bufs = random_buffers(4, 16, 1);
  bufs[2][5] = INFINITY;
  const auto r = ring_allreduce(bufs, Transport::kSingle);
  EXPECT_FALSE(std::isfinite(r.reduced[5]));
  bufs[2][5] = 1e6F;  // overflows binary16 on the wire
  EXPECT_FALSE(std::isfinite(ring_allreduce(bufs, Transport::kHalf).reduced[5]));
}

TEST(Ring, SumSkipsTheFinalDivision) {
  const std::vector<std::vector<float>> bufs{{1.0F, 2.0F}, {3.0F, 4.0F}, {5.0F, 6.0F}, {7.0F, 8.0F}};
  EXPECT_EQ(ring_allreduce(bufs, Transport::kHalf).reduced, (std::vector<float>{4.0F, 5.0F}));
  EXPECT_EQ(ring_allreduce(bufs, Transport::kHalf, Reduction::kSum).reduced,
            (std::vector<float>{16.0F, 20.0F}));
}

TEST(Ring, ShapeErrors) {
  std::vector<std::vector<float>> none;
  EXPECT_THROW(ring_allreduce(none, Transport::kHalf), mlstm::ShapeError);
  std::vector<std::vector<float>> ragged{{1.0F, 2.0F}, {1.0F}};
  EXPECT_THROW(ring_allreduce(ragged, Transport::kHalf), mlstm::ShapeError);
}

mlstm::data::Minibatch make_batch(std::size_t batch, std::size_t steps, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  mlstm::data::Minibatch mb;
  mb.batch = batch;
  mb.steps = steps;
  for (std::size_t i = 0; i < batch * steps; ++i) {
    mb.inputs.push_back(static_cast<std::uint8_t>(97 + gen() % 8));
    mb.targets.push_back(static_cast<std::uint8_t>(97 + gen() % 8));
    mb.valid.push_back(i % 7 == 6 ? 0 : 1);
  }
  mb.reset_mask.assign(batch, 0);
  mb.active.assign(batch, 1);
  mb.shard_of_row.assign(batch, 0);
  return mb;
}

mlstm::model::MlstmParams tiny_params(mlstm::model::Precision p) {
  mlstm::model::MlstmConfig cfg;
  cfg.hidden_dim = 8;
  cfg.embed_dim = 4;
  cfg.seq_len = 5;
  return mlstm::model::MlstmParams::initialize(cfg, p, 2);
}

TEST(WorkerGroup, FourWorkersTrackOneWorker) {
  const auto params = tiny_params(mlstm::model::Precision::kFp32);
  const auto adam = mlstm::optim::AdamState::zeros_like(params.masters());
  WorkerGroup one(params, adam, 1, 8);
  WorkerGroup four(params, adam, 4, 8);
  mlstm::scaler::LossScaleState s1;
  s1.alpha = 1.0F;
  auto s4 = s1;
  for (int i = 0; i < 10; ++i) {
    const auto mb = make_batch(8, 5, static_cast<std::uint64_t>(i));
    const auto a = one.step(mb, 1e-2, s1);
    const auto b = four.step(mb, 1e-2, s4);
    EXPECT_NEAR(a.loss_nats, b.loss_nats, 1e-5);
    EXPECT_TRUE(a.applied && b.applied);
  }
  const auto fa = one.replica(0).masters().flatten();
  const auto fb = four.replica(3).masters().flatten();
  for (std::size_t i = 0; i < fa.size(); ++i) {
    ASSERT_NEAR(fa[i], fb[i], 1e-4 * (1.0 + std::fabs(fa[i])));
  }
  EXPECT_EQ(four.fingerprint(0), four.fingerprint(3));
}

TEST(WorkerGroup, InjectedOverflowSkipsEverywhere) {
  const auto params = tiny_params(mlstm::model::Precision::kMixed);
  WorkerGroup g(params, mlstm::optim::AdamState::zeros_like(params.masters()), 2, 4);
  g.set_overflow_injector([](std::size_t w, std::uint64_t step) { return w == 1 && step == 0; });
  mlstm::scaler::LossScaleState s;
  s.alpha = 1024.0F;
  const auto before = g.replica(0).masters();
  const auto out = g.step(make_batch(4, 5, 1), 1e-2, s);
  EXPECT_TRUE(out.overflow);
  EXPECT_FALSE(out.applied);
  EXPECT_EQ(s.alpha, 512.0F);
  EXPECT_EQ(g.replica(0).masters(), before);
  EXPECT_EQ(g.replica(1).masters(), before);
  EXPECT_EQ(g.adam(0).t, 0U);
  const auto next = g.step(make_batch(4, 5, 2), 1e-2, s);
  EXPECT_TRUE(next.applied);
  EXPECT_EQ(out.payload_bytes, ring_payload_bytes(params.masters().element_count(), 2,
                                                  Transport::kHalf));
}

TEST(WorkerGroup, EightWorkersSkipWhereOneWorkerSkips) {
  const auto params = tiny_params(mlstm::model::Precision::kMixed);
  const auto adam = mlstm::optim::AdamState::zeros_like(params.masters());
  WorkerGroup one(params, adam, 1, 8);
  WorkerGroup eight(params, adam, 8, 8);
  mlstm::scaler::LossScaleState s1;
  s1.alpha = 16777216.0F;
  s1.growth_interval = 3;
  auto s8 = s1;
  for (int i = 0; i < 30; ++i) {
    const auto mb = make_batch(8, 5, static_cast<std::uint64_t>(i));
    EXPECT_EQ(one.step(mb, 1e-3, s1).applied, eight.step(mb, 1e-3, s8).applied) << i;
    EXPECT_EQ(s1.alpha, s8.alpha) << i;
  }
}

TEST(WorkerGroup, StateSlicesFollowWorkerOrder) {
  const auto params = tiny_params(mlstm::model::Precision::kFp32);
  WorkerGroup g(params, mlstm::optim::AdamState::zeros_like(params.masters()), 2, 4);
  auto st = mlstm::model::HiddenState::zeros(4, 8);
  st.h.at(3, 1) = 0.5F;
  g.set_global_state(st);
  EXPECT_EQ(g.global_state(), st);
  g.reset_state();
  EXPECT_EQ(g.global_state(), mlstm::model::HiddenState::zeros(4, 8));
  EXPECT_THROW(WorkerGroup(params, mlstm::optim::AdamState::zeros_like(params.masters()), 3, 4),
               mlstm::ConfigError);
}

TEST(Speedup, ArithmeticAndBaselineMatching) {
  const std::vector<IterationTiming> t{{1, 0.81, "ib"}, {8, 0.85, "ib"}, {1, 2.0, "big"},
                                       {128, 2.13, "big"}};
  const auto rows = speedup_report(t);
  ASSERT_EQ(rows.size(), 4U);
  EXPECT_NEAR(rows[1].speedup, 8 * 0.81 / 0.85, 1e-12);
  EXPECT_NEAR(rows[1].efficiency, 0.81 / 0.85, 1e-12);
  EXPECT_NEAR(rows[3].speedup, 128 * 2.0 / 2.13, 1e-12);
  EXPECT_THROW(speedup_report({{8, 1.0, "x"}}), mlstm::ReportError);
  EXPECT_THROW(speedup_report({{1, 0.0, "x"}}), mlstm::ReportError);
}

TEST(Speedup, CsvRoundTrip) {
  std::istringstream in("n_gpus,seconds_per_iter,label\n1,0.81,ib\n16,0.91,ib\n");
  const auto t = read_timings_csv(in);
  ASSERT_EQ(t.size(), 2U);
  EXPECT_EQ(t[1].n_gpus, 16);
  std::ostringstream out;
  write_speedup_csv(out, speedup_report(t));
  EXPECT_NE(out.str().find("16"), std::string::npos);
  std::istringstream bad("n_gpus,seconds_per_iter,label\nfoo,1,x\n");
  EXPECT_THROW(read_timings_csv(bad), mlstm::ReportError);
}

}  // namespace
