#include <algorithm>
#include <cmath>
#include <vector>

#include <fmt/core.h>

#include "criteria.hpp"
#include "mlstm/data/corpus.hpp"
#include "mlstm/data/synthetic.hpp"
#include "mlstm/eval/evaluate.hpp"
#include "mlstm/eval/logreg.hpp"
#include "mlstm/run/trainer.hpp"
#include "newton_logreg.hpp"

namespace acceptance {

using namespace mlstm;

namespace {

struct Split {
  eval::FeatureRows x;
  std::vector<int> y;
};

Split featurize_reviews(const model::MlstmParams& params, std::size_t count, std::uint64_t seed) {
  std::vector<std::string> texts;
  Split s;
  for (auto& r : data::synthetic_labeled_reviews(count, seed)) {
    texts.push_back(std::move(r.text));
    s.y.push_back(r.label);
  }
  s.x = eval::widen(eval::featurize_all(params, texts));
  return s;
}

}  // namespace

Outcome transfer(const Context&) {
  constexpr double kOracleTol = 1e-4;
  run::RunConfig c;
  c.model.hidden_dim = 64;
  c.model.embed_dim = 32;
  c.model.seq_len = 64;
  c.batch_size = 32;
  c.base_lr = 3e-3;
  c.decay_iters = 800;
  c.seed = 9;
  c.data_seed = 9;
  const data::Corpus corpus{data::synthetic_review_corpus(1u << 20, 77), 77};
  run::Trainer trainer(c, data::split_corpus(corpus));
  const run::TrainResult trained = trainer.run();
  const double bpc = eval::bpc_from_nats(trained.last_loss_nats);

  const Split train = featurize_reviews(trainer.params(), 1000, 101);
  const Split val = featurize_reviews(trainer.params(), 300, 102);
  const Split test = featurize_reviews(trainer.params(), 600, 103);
  const eval::TransferReport report = eval::run_transfer(
      train.x, train.y, val.x, val.y, test.x, test.y, eval::default_l2_grid());

  // The same problem handed to an independent second-order solver.
  const eval::Standardizer z = eval::Standardizer::fit(train.x);
  const oracle::NewtonResult newton = oracle::newton_logreg(z.apply(train.x), train.y, report.l2);
  double diff = std::fabs(newton.bias - report.fit.model.bias);
  double scale = std::fabs(newton.bias);
  for (std::size_t i = 0; i < newton.weights.size(); ++i) {
    diff = std::max(diff, std::fabs(newton.weights[i] - report.fit.model.weights[i]));
    scale = std::max(scale, std::fabs(newton.weights[i]));
  }
  const double rel = diff / std::max(1.0, scale);

  Outcome out;
  out.pass = report.test_accuracy >= 0.9 && rel <= kOracleTol;
  out.detail = fmt::format(
      "train bpc {:.3f} after {} iters; test accuracy {:.1f}% vs majority {:.1f}% (l2 {:.0e}, "
      "{} features); logreg vs Newton max |dtheta| {:.2e} ({:.2e} relative, tol {:.0e})",
      bpc, trained.state.iteration, 100.0 * report.test_accuracy,
      100.0 * report.majority_baseline, report.l2, train.x.front().size(), diff, rel, kOracleTol);
  return out;
}

}  // namespace acceptance
