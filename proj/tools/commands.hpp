#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mlstm::tools {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitDiverged = 3,
};

struct TrainArgs {
  std::string config_file;
  std::string resume;
  std::string out_dir;
  std::map<std::string, std::string> overrides;
};

struct EvalArgs {
  std::string checkpoint;
  std::string corpus;  // empty: the corpus recorded in the checkpoint
  std::string split = "test";
  std::size_t batch_size = 16;
};

struct TransferArgs {
  std::string checkpoint;
  std::string train;
  std::string val;  // empty: hold out a tenth of train
  std::string test;
  std::string features = "cell";
  std::vector<double> l2;  // empty: the default grid
  std::string report;
};

struct SpeedupArgs {
  std::string timings;
  std::string out;
};

struct SynthArgs {
  std::size_t bytes = 4u << 20;
  std::size_t labeled = 0;
  std::uint64_t seed = 1;
  std::string out;
};

int run_train(const TrainArgs& args);
int run_eval(const EvalArgs& args);
int run_transfer(const TransferArgs& args);
int run_speedup(const SpeedupArgs& args);
int run_synth(const SynthArgs& args);

}  // namespace mlstm::tools
