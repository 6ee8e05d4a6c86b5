#include <bit>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "gradient_check.hpp"
#include "mlstm/common/error.hpp"
#include "mlstm/model/mlstm.hpp"
#include "mlstm/numerics/half.hpp"
#include "reference_mlstm.hpp"

namespace {

using namespace mlstm::model;
using mlstm::numerics::TensorF32;

MlstmConfig small_config(std::size_t hidden = 8, std::size_t embed = 5, std::size_t steps = 6) {
  MlstmConfig cfg;
  cfg.hidden_dim = hidden;
  cfg.embed_dim = embed;
  cfg.seq_len = steps;
  return cfg;
}

std::vector<std::uint8_t> text_tokens(const std::string& s) { return {s.begin(), s.end()}; }

bool on_half_grid(std::span<const float> v) {
  for (const float x : v) {
    if (std::bit_cast<std::uint32_t>(mlstm::numerics::round_to_half(x)) !=
        std::bit_cast<std::uint32_t>(x)) {
      return false;
    }
  }
  return true;
}

class GradientCheck : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(GradientCheck, EveryTensorMatchesFiniteDifferences) {
  const auto r = oracle::gradient_check(GetParam());
  EXPECT_NEAR(r.loss_model, r.loss_reference, 1e-5);
  for (const auto& t : r.tensors) {
    EXPECT_LE(t.rel_err, 1e-4) << t.name;
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, GradientCheck, ::testing::Values(1, 2, 3, 4, 5));

TEST(Model, LossMatchesDoubleReference) {
  const auto cfg = small_config(16, 8, 12);
  const auto params = MlstmParams::initialize(cfg, Precision::kFp32, 9);
  const auto tokens = text_tokens("the quick brown fox jumps over ");
  const std::vector<std::uint8_t> in(tokens.begin(), tokens.begin() + 24);
  const std::vector<std::uint8_t> tg(tokens.begin() + 1, tokens.begin() + 25);
  const auto fwd = forward_sequence(params, in, 2, 12, HiddenState::zeros(2, 16));
  const auto bwd = loss_and_backward(params, fwd, tg, {}, LossOptions{});
  const auto ref = oracle::RefModel::from(params.masters(), cfg);
  EXPECT_NEAR(bwd.loss_nats, ref.loss_sum(in, tg, {}, 2, 12) / 24.0, 2e-6);
  EXPECT_EQ(bwd.scored, 24U);
}

TEST(Model, SequenceEqualsRepeatedCellSteps) {
  for (const auto precision : {Precision::kFp32, Precision::kMixed}) {
    const auto cfg = small_config();
    const auto params = MlstmParams::initialize(cfg, precision, 4);
    const auto in = text_tokens("abcdefghijkl");  // 2 rows x 6 steps
    const auto fwd = forward_sequence(params, in, 2, 6, HiddenState::zeros(2, 8));
    HiddenState state = HiddenState::zeros(2, 8);
    for (std::size_t t = 0; t < 6; ++t) {
      TensorF32 x({2, cfg.embed_dim});
      for (std::size_t b = 0; b < 2; ++b) {
        const auto e = params.working().embedding.row(in[b * 6 + t]);
        std::copy(e.begin(), e.end(), x.row(b).begin());
      }
      state = mlstm_cell(params, x, state).state;
    }
    EXPECT_EQ(state, fwd.state);
  }
}

TEST(Model, RowsAreIndependent) {
  const auto cfg = small_config();
  const auto params = MlstmParams::initialize(cfg, Precision::kMixed, 5);
  const auto in = text_tokens("hello worldsome thingsanother");
  const std::vector<std::uint8_t> three(in.begin(), in.begin() + 27);
  const auto all = forward_sequence(params, three, 3, 9, HiddenState::zeros(3, 8));
  for (std::size_t b = 0; b < 3; ++b) {
    const std::vector<std::uint8_t> one(three.begin() + b * 9, three.begin() + (b + 1) * 9);
    const auto single = forward_sequence(params, one, 1, 9, HiddenState::zeros(1, 8));
    EXPECT_EQ(single.state, all.state.slice(b, 1));
    for (std::size_t i = 0; i < 9 * 256; ++i) {
      ASSERT_EQ(single.logits[i], all.logits[b * 9 * 256 + i]);
    }
  }
}

TEST(Model, MixedPrecisionKeepsWorkingValuesOnHalfGrid) {
  const auto cfg = small_config();
  const auto params = MlstmParams::initialize(cfg, Precision::kMixed, 6);
  const auto& w = params.working();
  for (const auto* t : {&w.embedding, &w.w_mx, &w.w_mh, &w.w_ih, &w.w_hm, &w.decoder}) {
    EXPECT_TRUE(on_half_grid(t->data()));
  }
  const auto in = text_tokens("abcdefghijkl");
  const auto fwd = forward_sequence(params, in, 2, 6, HiddenState::zeros(2, 8));
  EXPECT_TRUE(on_half_grid(fwd.cache.m.data()));
  EXPECT_TRUE(on_half_grid(fwd.cache.h.data()));
  EXPECT_TRUE(on_half_grid(fwd.state.h.data()));
}

TEST(Model, LossScaleScalesGradientsExactly) {
  const auto cfg = small_config();
  const auto params = MlstmParams::initialize(cfg, Precision::kFp32, 7);
  const auto in = text_tokens("abcdefghijkl");
  const auto tg = text_tokens("bcdefghijklm");
  const auto fwd = forward_sequence(params, in, 2, 6, HiddenState::zeros(2, 8));
  const auto g1 = loss_and_backward(params, fwd, tg, {}, LossOptions{1.0F, 0.0F});
  const auto g2 = loss_and_backward(params, fwd, tg, {}, LossOptions{1024.0F, 0.0F});
  EXPECT_EQ(g1.loss_nats, g2.loss_nats);
  for (std::size_t i = 0; i < kParamCount; ++i) {
    for (std::size_t k = 0; k < g1.grads[i].size(); ++k) {
      ASSERT_EQ(g1.grads[i][k] * 1024.0F, g2.grads[i][k]) << param_name(i);
    }
  }
}

TEST(Model, MaskedPositionsContributeNothing) {
  const auto cfg = small_config();
  const auto params = MlstmParams::initialize(cfg, Precision::kFp32, 8);
  const auto in = text_tokens("abcdefghijkl");
  auto tg = text_tokens("bcdefghijklm");
  std::vector<std::uint8_t> valid(12, 1);
  valid[5] = 0;
  valid[11] = 0;
  const auto fwd = forward_sequence(params, in, 2, 6, HiddenState::zeros(2, 8));
  const auto a = loss_and_backward(params, fwd, tg, valid, LossOptions{});
  tg[5] = 'z';
  tg[11] = 'q';
  const auto b = loss_and_backward(params, fwd, tg, valid, LossOptions{});
  EXPECT_EQ(a.scored, 10U);
  EXPECT_EQ(a.loss_nats, b.loss_nats);
  EXPECT_EQ(a.grads, b.grads);
}

TEST(Model, TokenLossesAgreeWithLogSoftmax) {
  TensorF32 logits({2, 256});
  for (std::size_t i = 0; i < logits.size(); ++i) {
    logits[i] = std::sin(static_cast<float>(i)) * 3.0F;
  }
  const std::vector<std::uint8_t> tg{3, 250};
  const auto losses = token_losses(logits, tg);
  for (std::size_t r = 0; r < 2; ++r) {
    double z = 0.0;
    for (std::size_t k = 0; k < 256; ++k) {
      z += std::exp(static_cast<double>(logits.at(r, k)));
    }
    EXPECT_NEAR(losses[r], std::log(z) - logits.at(r, tg[r]), 2e-6);
  }
  const std::vector<std::uint8_t> mask{0, 1};
  EXPECT_EQ(token_losses(logits, tg, mask)[0], 0.0F);
}

TEST(Model, InitialEffectiveWeightsEqualDirections) {
  const auto cfg = small_config();
  const auto params = MlstmParams::initialize(cfg, Precision::kFp32, 10);
  const auto& v = params.masters()[ParamId::kHmDirection];
  const auto& w = params.working().w_hm;
  for (std::size_t i = 0; i < v.size(); ++i) {
    EXPECT_NEAR(w[i], v[i], 1e-6);
  }
  const float bound = 1.0F / std::sqrt(5.0F);
  for (const float e : params.masters()[ParamId::kEmbedding].data()) {
    EXPECT_LE(std::fabs(e), bound);
  }
}

TEST(Model, RejectsBadStateAndShapes) {
  const auto cfg = small_config();
  const auto params = MlstmParams::initialize(cfg, Precision::kFp32, 11);
  const auto in = text_tokens("abcdefghijkl");
  EXPECT_THROW(forward_sequence(params, in, 3, 6, HiddenState::zeros(2, 8)), mlstm::ShapeError);
  EXPECT_THROW(forward_sequence(params, in, 2, 6, HiddenState::zeros(3, 8)), mlstm::ShapeError);
  auto bad = HiddenState::zeros(2, 8);
  bad.c[3] = NAN;
  EXPECT_THROW(forward_sequence(params, in, 2, 6, bad), mlstm::NonFiniteError);
  const auto fwd = forward_sequence(params, in, 2, 6, HiddenState::zeros(2, 8), CacheMode::kDiscard);
  EXPECT_THROW(loss_and_backward(params, fwd, in, {}, LossOptions{}), mlstm::ContractViolation);
}

TEST(Model, SingularDirectionRowIsRejected) {
  const auto cfg = small_config();
  auto masters = MlstmParams::initialize(cfg, Precision::kFp32, 12).masters();
  auto row = masters[ParamId::kMxDirection].row(2);
  std::fill(row.begin(), row.end(), 0.0F);
  EXPECT_THROW(MlstmParams(cfg, Precision::kFp32, masters), mlstm::SingularParameterError);
}

TEST(Model, HiddenStateHelpers) {
  auto s = HiddenState::zeros(3, 2);
  s.h.at(1, 0) = INFINITY;
  s.c.at(2, 1) = 5.0F;
  EXPECT_FALSE(s.all_finite());
  EXPECT_EQ(s.reset_non_finite_rows(), 1U);
  EXPECT_TRUE(s.all_finite());
  auto part = s.slice(2, 1);
  EXPECT_EQ(part.c[1], 5.0F);
  auto t = HiddenState::zeros(3, 2);
  t.assign_rows(0, part);
  EXPECT_EQ(t.c.at(0, 1), 5.0F);
  EXPECT_THROW(s.slice(2, 2), mlstm::ShapeError);
}

}  // namespace
