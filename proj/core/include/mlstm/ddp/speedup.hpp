#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mlstm::ddp {

struct IterationTiming {
  int n_gpus = 0;
  double seconds_per_iter = 0.0;
  std::string label;
};

struct SpeedupRow {
  IterationTiming timing;
  double speedup = 0.0;     // n * t1 / tn
  double efficiency = 0.0;  // speedup / n
};

/// Rows are matched to the n_gpus == 1 timing with the same label. Throws
/// ReportError if a label has no single-GPU baseline or a value is not
/// positive.
std::vector<SpeedupRow> speedup_report(const std::vector<IterationTiming>& timings);

/// CSV with header "n_gpus,seconds_per_iter,label". Throws ReportError on
/// malformed rows.
std::vector<IterationTiming> read_timings_csv(std::istream& in);

void write_speedup_csv(std::ostream& out, const std::vector<SpeedupRow>& rows);

}  // namespace mlstm::ddp
