#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace mlstm::data {

struct LabeledText {
  std::string text;
  int label = 0;  // 1 positive, 0 negative
};

/// Product-review-like records produced from a small grammar. Sentiment is
/// carried by polarity-specific vocabulary, so a character model trained on
/// the stream picks it up from the surface form. Balanced labels.
class ReviewGenerator {
 public:
  explicit ReviewGenerator(std::uint64_t seed);

  LabeledText next();

 private:
  std::uint64_t state_;
};

/// Generates records until their total size (without separators) reaches
/// target_bytes.
std::vector<std::string> synthetic_review_corpus(std::size_t target_bytes, std::uint64_t seed);

std::vector<LabeledText> synthetic_labeled_reviews(std::size_t count, std::uint64_t seed);

/// Order-0 (unigram byte) entropy in bits per character.
double unigram_entropy_bits(const std::vector<std::string>& records);

}  // namespace mlstm::data
