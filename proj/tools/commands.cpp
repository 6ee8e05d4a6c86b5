#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

#include <spdlog/spdlog.h>

#include "mlstm/common/error.hpp"
#include "mlstm/common/rng.hpp"
#include "mlstm/data/synthetic.hpp"
#include "mlstm/ddp/speedup.hpp"
#include "mlstm/eval/evaluate.hpp"
#include "mlstm/eval/logreg.hpp"
#include "mlstm/run/checkpoint.hpp"
#include "mlstm/run/trainer.hpp"

namespace mlstm::tools {

namespace {

constexpr std::uint64_t kLogEvery = 50;

eval::LabeledSet read_labeled(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open labeled set " + path);
  }
  return eval::read_labeled_tsv(in);
}

model::MlstmParams params_from(const run::Checkpoint& ck) {
  return model::MlstmParams(ck.config.model, ck.config.precision, ck.state.masters);
}

void log_eval(const char* name, const eval::EvalReport& r) {
  spdlog::info("{} bpc {:.4f} over {} characters in {} shards", name, r.mean_bpc, r.tokens,
               r.shard_bpc.size());
}

}  // namespace

int run_train(const TrainArgs& args) {
  std::optional<run::Checkpoint> resume;
  run::RunConfig config;
  if (!args.resume.empty()) {
    resume = run::load_checkpoint(args.resume);
    config = resume->config;
  } else if (!args.config_file.empty()) {
    config = run::load_config_file(args.config_file);
  }
  for (const auto& [key, value] : args.overrides) {
    run::set_config_value(config, key, value);
  }
  if (!args.out_dir.empty()) {
    config.out_dir = args.out_dir;
  }
  if (config.out_dir.empty()) {
    throw ConfigError("--out-dir is required");
  }
  config.validate();

  const data::CorpusSplits splits = run::load_splits(config);
  std::uint64_t train_bytes = 0;
  for (const auto& r : splits.train) {
    train_bytes += r.size() + 1;
  }
  const optim::RegimeAdvice advice =
      optim::check_large_batch_regime(config.batch_size, train_bytes / config.model.seq_len);
  if (advice.warn) {
    spdlog::warn("{}", advice.message);
  }

  std::unique_ptr<run::Trainer> trainer;
  if (resume) {
    resume->config = config;
    trainer = std::make_unique<run::Trainer>(*resume, splits, config.out_dir);
    spdlog::info("resuming at iteration {}", resume->state.iteration);
  } else {
    trainer = std::make_unique<run::Trainer>(config, splits);
  }
  spdlog::info("initial learning rate {} ({} rule, batch {})", trainer->initial_lr(),
               optim::to_string(config.lr_rule), config.batch_size);

  run::TrainHooks hooks;
  hooks.on_iteration = [](const run::IterationMetrics& m) {
    if (m.iter % kLogEvery == 0) {
      spdlog::info("iter {} epoch {} loss {:.4f} bpc {:.4f} lr {:.3g} alpha {}{}", m.iter, m.epoch,
                   m.loss_nats, m.bpc, m.lr, m.alpha, m.skipped ? " (skipped)" : "");
    }
    return true;
  };
  const run::TrainResult result = trainer->run(hooks);
  if (result.reason == run::StopReason::kDiverged) {
    spdlog::error("diverged: {}", result.message);
    return kExitDiverged;
  }
  spdlog::info("stopped ({}) after {} iterations, {} skipped", run::to_string(result.reason),
               result.state.iteration, result.state.skipped);

  const eval::EvalOptions opts = run::eval_options(config);
  eval::EvalReport val;
  eval::EvalReport test;
  try {
    val = eval::evaluate(trainer->params(), splits.val, opts);
    test = eval::evaluate(trainer->params(), splits.test, opts);
  } catch (const ShardsExceedRecordsError& e) {
    // The checkpoints are written; a held-out split too small for the eval
    // batch should not turn a finished run into a failure.
    spdlog::warn("skipping held-out evaluation: {}", e.what());
    return kExitOk;
  }
  log_eval("val", val);
  log_eval("test", test);
  std::ofstream out(config.out_dir / "eval.csv");
  out << "split,bpc,characters\n";
  out << "val," << val.mean_bpc << ',' << val.tokens << '\n';
  out << "test," << test.mean_bpc << ',' << test.tokens << '\n';
  std::cout << "test_bpc=" << test.mean_bpc << '\n';
  return kExitOk;
}

int run_eval(const EvalArgs& args) {
  run::Checkpoint ck = run::load_checkpoint(args.checkpoint);
  if (!args.corpus.empty()) {
    ck.config.corpus = args.corpus;
  }
  const data::CorpusSplits splits = run::load_splits(ck.config);
  const std::vector<std::string>& split = args.split == "test"  ? splits.test
                                          : args.split == "val" ? splits.val
                                                                : splits.train;
  eval::EvalOptions opts = run::eval_options(ck.config);
  opts.batch_size = args.batch_size;
  const eval::EvalReport r = eval::evaluate(params_from(ck), split, opts);
  std::cout << "shard,characters,bpc\n";
  for (std::size_t s = 0; s < r.shard_bpc.size(); ++s) {
    std::cout << s << ',' << r.shard_tokens[s] << ',' << r.shard_bpc[s] << '\n';
  }
  std::cout << "mean," << r.tokens << ',' << r.mean_bpc << '\n';
  return kExitOk;
}

int run_transfer(const TransferArgs& args) {
  const run::Checkpoint ck = run::load_checkpoint(args.checkpoint);
  const model::MlstmParams params = params_from(ck);
  const eval::FeatureKind kind = eval::parse_feature_kind(args.features);

  eval::LabeledSet train = read_labeled(args.train);
  eval::LabeledSet val;
  if (!args.val.empty()) {
    val = read_labeled(args.val);
  } else {
    // Seeded hold-out of a tenth of the training rows for l2 selection.
    std::vector<std::size_t> order(train.texts.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(ck.config.data_seed);
    rng.shuffle(std::span<std::size_t>(order));
    const std::size_t n_val = std::max<std::size_t>(1, order.size() / 10);
    eval::LabeledSet rest;
    for (std::size_t i = 0; i < order.size(); ++i) {
      eval::LabeledSet& dst = i < n_val ? val : rest;
      dst.texts.push_back(train.texts[order[i]]);
      dst.labels.push_back(train.labels[order[i]]);
    }
    train = std::move(rest);
  }
  const eval::LabeledSet test = read_labeled(args.test);

  spdlog::info("featurizing {} train / {} val / {} test texts", train.texts.size(),
               val.texts.size(), test.texts.size());
  const auto fx = [&](const eval::LabeledSet& s) {
    return eval::widen(eval::featurize_all(params, s.texts, kind));
  };
  const std::vector<double> grid = args.l2.empty() ? eval::default_l2_grid() : args.l2;
  const eval::TransferReport report = eval::run_transfer(
      fx(train), train.labels, fx(val), val.labels, fx(test), test.labels, grid);

  spdlog::info("l2 {} val accuracy {:.4f} test accuracy {:.4f} (majority {:.4f})", report.l2,
               report.val_accuracy, report.test_accuracy, report.majority_baseline);
  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!args.report.empty()) {
    file.open(args.report);
    if (!file) {
      throw DataError("cannot write " + args.report);
    }
    out = &file;
  }
  *out << "l2,val_accuracy\n";
  for (const auto& g : report.grid) {
    *out << g.l2 << ',' << g.val_accuracy << '\n';
  }
  *out << "selected_l2," << report.l2 << '\n';
  *out << "test_accuracy," << report.test_accuracy << '\n';
  *out << "majority_baseline," << report.majority_baseline << '\n';
  return kExitOk;
}

int run_speedup(const SpeedupArgs& args) {
  std::ifstream in(args.timings);
  if (!in) {
    throw DataError("cannot open timings " + args.timings);
  }
  const auto rows = ddp::speedup_report(ddp::read_timings_csv(in));
  if (args.out.empty()) {
    ddp::write_speedup_csv(std::cout, rows);
  } else {
    std::ofstream out(args.out);
    if (!out) {
      throw DataError("cannot write " + args.out);
    }
    ddp::write_speedup_csv(out, rows);
  }
  return kExitOk;
}

int run_synth(const SynthArgs& args) {
  std::ofstream out(args.out);
  if (!out) {
    throw DataError("cannot write " + args.out);
  }
  if (args.labeled > 0) {
    eval::LabeledSet set;
    for (auto& r : data::synthetic_labeled_reviews(args.labeled, args.seed)) {
      set.texts.push_back(std::move(r.text));
      set.labels.push_back(r.label);
    }
    eval::write_labeled_tsv(out, set);
    return kExitOk;
  }
  for (const auto& r : data::synthetic_review_corpus(args.bytes, args.seed)) {
    out << r << '\n';
  }
  return kExitOk;
}

}  // namespace mlstm::tools
