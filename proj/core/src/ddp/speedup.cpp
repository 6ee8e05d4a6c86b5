#include "mlstm/ddp/speedup.hpp"

#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "mlstm/common/error.hpp"

namespace mlstm::ddp {

std::vector<SpeedupRow> speedup_report(const std::vector<IterationTiming>& timings) {
  std::map<std::string, double> baseline;
  for (const auto& t : timings) {
    if (t.n_gpus <= 0 || !(t.seconds_per_iter > 0.0)) {
      throw ReportError("timing rows need positive n_gpus and seconds_per_iter");
    }
    if (t.n_gpus == 1) {
      baseline[t.label] = t.seconds_per_iter;
    }
  }
  std::vector<SpeedupRow> rows;
  rows.reserve(timings.size());
  for (const auto& t : timings) {
    const auto it = baseline.find(t.label);
    if (it == baseline.end()) {
      throw ReportError("no 1-GPU baseline for configuration '" + t.label + "'");
    }
    SpeedupRow row;
    row.timing = t;
    row.speedup = t.n_gpus * it->second / t.seconds_per_iter;
    row.efficiency = row.speedup / t.n_gpus;
    rows.push_back(row);
  }
  return rows;
}

std::vector<IterationTiming> read_timings_csv(std::istream& in) {
  std::vector<IterationTiming> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty() || (lineno == 1 && line.rfind("n_gpus", 0) == 0)) {
      continue;
    }
    std::istringstream fields(line);
    std::string n, secs, label;
    if (!std::getline(fields, n, ',') || !std::getline(fields, secs, ',')) {
      throw ReportError("timings line " + std::to_string(lineno) + ": expected n_gpus,seconds");
    }
    std::getline(fields, label);
    IterationTiming t;
    try {
      std::size_t used = 0;
      t.n_gpus = std::stoi(n, &used);
      if (used != n.size()) {
        throw std::invalid_argument(n);
      }
      t.seconds_per_iter = std::stod(secs, &used);
      if (used != secs.size()) {
        throw std::invalid_argument(secs);
      }
    } catch (const std::logic_error&) {
      throw ReportError("timings line " + std::to_string(lineno) + ": bad number");
    }
    t.label = label;
    out.push_back(std::move(t));
  }
  return out;
}

void write_speedup_csv(std::ostream& out, const std::vector<SpeedupRow>& rows) {
  out << "label,n_gpus,seconds_per_iter,speedup,efficiency\n";
  for (const auto& r : rows) {
    out << r.timing.label << ',' << r.timing.n_gpus << ',' << r.timing.seconds_per_iter << ','
        << r.speedup << ',' << r.efficiency << '\n';
  }
}

}  // namespace mlstm::ddp
