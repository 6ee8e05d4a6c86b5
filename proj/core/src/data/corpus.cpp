#include "mlstm/data/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "mlstm/common/error.hpp"
#include "mlstm/common/rng.hpp"

namespace mlstm::data {

namespace fs = std::filesystem;

CorpusFormat parse_corpus_format(const std::string& text) {
  if (text == "lines") {
    return CorpusFormat::kLines;
  }
  if (text == "dir" || text == "directory") {
    return CorpusFormat::kDirectory;
  }
  throw ConfigError("corpus_format must be 'lines' or 'dir', got '" + text + "'");
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

Corpus load_corpus(const fs::path& path, CorpusFormat format, std::uint64_t seed) {
  Corpus corpus;
  corpus.rng_seed = seed;
  if (format == CorpusFormat::kLines) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      throw DataError("cannot open corpus file " + path.string());
    }
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') {
        line.pop_back();
      }
      if (!line.empty()) {
        corpus.records.push_back(std::move(line));
      }
    }
    return corpus;
  }

  std::error_code ec;
  if (!fs::is_directory(path, ec)) {
    throw DataError("corpus directory " + path.string() + " does not exist");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file()) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::string text = read_file(f);
    if (!text.empty()) {
      corpus.records.push_back(std::move(text));
    }
  }
  return corpus;
}

CorpusSplits split_corpus(const Corpus& corpus, SplitRatio ratio) {
  const std::size_t n = corpus.records.size();
  if (n < 3) {
    throw InsufficientDataError("need at least 3 records to split, got " + std::to_string(n));
  }
  if (ratio.train == 0 || ratio.val == 0 || ratio.test == 0) {
    throw ConfigError("split ratio parts must be positive");
  }
  const double total = static_cast<double>(ratio.train) + ratio.val + ratio.test;
  auto share = [&](std::uint32_t part) {
    const auto k = static_cast<std::size_t>(std::llround(static_cast<double>(n) * part / total));
    return std::max<std::size_t>(1, k);
  };
  const std::size_t n_val = share(ratio.val);
  const std::size_t n_test = share(ratio.test);
  if (n_val + n_test >= n) {
    throw InsufficientDataError("corpus of " + std::to_string(n) +
                                " records leaves no training records");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(corpus.rng_seed);
  rng.shuffle(std::span<std::size_t>(order));

  CorpusSplits out;
  const std::size_t n_train = n - n_val - n_test;
  out.train.reserve(n_train);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& rec = corpus.records[order[i]];
    if (i < n_train) {
      out.train.push_back(rec);
    } else if (i < n_train + n_val) {
      out.val.push_back(rec);
    } else {
      out.test.push_back(rec);
    }
  }
  return out;
}

}  // namespace mlstm::data
