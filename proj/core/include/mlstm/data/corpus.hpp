#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mlstm::data {

struct Corpus {
  std::vector<std::string> records;
  std::uint64_t rng_seed = 0;
};

enum class CorpusFormat {
  kLines,      // one UTF-8 record per line; empty lines skipped
  kDirectory,  // one document per regular file, visited in sorted path order
};

CorpusFormat parse_corpus_format(const std::string& text);

/// Throws DataError when the path cannot be read.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format, std::uint64_t seed);

struct SplitRatio {
  std::uint32_t train = 1000;
  std::uint32_t val = 1;
  std::uint32_t test = 1;
};

struct CorpusSplits {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

/// Seeded shuffle, then proportional partition. Validation and test each get
/// max(1, round(n * share)) records and training keeps the rest, so 1002
/// records split exactly 1000/1/1. Throws InsufficientDataError for fewer than
/// three records.
CorpusSplits split_corpus(const Corpus& corpus, SplitRatio ratio = {});

}  // namespace mlstm::data
