#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "mlstm/common/error.hpp"
#include "mlstm/run/config.hpp"

namespace {

void configure_logging() {
  spdlog::set_pattern("[%H:%M:%S] %^%l%$ %v");
  if (const char* level = std::getenv("MLSTM_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace mlstm::tools;
  configure_logging();

  CLI::App app{"Mixed-precision mLSTM language model trainer"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a model (or resume from a checkpoint)");
  train_cmd->add_option("--config", train.config_file, "key=value config file");
  train_cmd->add_option("--resume", train.resume, "checkpoint to continue from");
  train_cmd->add_option("--out-dir", train.out_dir, "directory for metrics.csv and checkpoints");
  for (const auto& key : mlstm::run::config_keys()) {
    if (key == "out_dir") {
      continue;
    }
    train_cmd->add_option_function<std::string>(
        "--" + key, [&train, key](const std::string& v) { train.overrides[key] = v; },
        "override config key " + key);
  }

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Bits per character on a held-out split");
  eval_cmd->add_option("--checkpoint", eval.checkpoint)->required();
  eval_cmd->add_option("--corpus", eval.corpus, "corpus file (default: from checkpoint)");
  eval_cmd->add_option("--split", eval.split)->check(CLI::IsMember({"test", "val", "train"}));
  eval_cmd->add_option("--batch-size", eval.batch_size)->check(CLI::PositiveNumber);

  TransferArgs transfer;
  auto* transfer_cmd =
      app.add_subcommand("transfer", "Logistic regression on frozen model features");
  transfer_cmd->add_option("--checkpoint", transfer.checkpoint)->required();
  transfer_cmd->add_option("--train", transfer.train, "label<TAB>text file")->required();
  transfer_cmd->add_option("--val", transfer.val, "label<TAB>text file");
  transfer_cmd->add_option("--test", transfer.test, "label<TAB>text file")->required();
  transfer_cmd->add_option("--features", transfer.features)
      ->check(CLI::IsMember({"cell", "hidden"}));
  transfer_cmd->add_option("--l2", transfer.l2, "candidate L2 strengths");
  transfer_cmd->add_option("--report", transfer.report, "write the accuracy report CSV here");

  SpeedupArgs speedup;
  auto* speedup_cmd =
      app.add_subcommand("speedup-report", "Relative speedup from per-iteration timings");
  speedup_cmd->add_option("--timings", speedup.timings, "CSV n_gpus,seconds_per_iter,label")
      ->required();
  speedup_cmd->add_option("--out", speedup.out, "output CSV (default stdout)");

  SynthArgs synth;
  auto* synth_cmd =
      app.add_subcommand("synth-corpus", "Write a synthetic review corpus or labeled set");
  synth_cmd->add_option("--bytes", synth.bytes, "target corpus size");
  synth_cmd->add_option("--labeled", synth.labeled, "write this many labeled TSV rows instead");
  synth_cmd->add_option("--seed", synth.seed);
  synth_cmd->add_option("--out", synth.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) {
      return run_train(train);
    }
    if (*eval_cmd) {
      return run_eval(eval);
    }
    if (*transfer_cmd) {
      return run_transfer(transfer);
    }
    if (*speedup_cmd) {
      return run_speedup(speedup);
    }
    return run_synth(synth);
  } catch (const mlstm::ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const mlstm::DataError& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  } catch (const mlstm::CheckpointError& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  } catch (const mlstm::ReportError& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  } catch (const mlstm::DivergenceError& e) {
    spdlog::error("{}", e.what());
    return kExitDiverged;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  }
}
