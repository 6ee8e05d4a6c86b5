#include "mlstm/data/synthetic.hpp"

#include <array>
#include <cmath>
#include <span>
#include <string_view>

#include "mlstm/common/rng.hpp"

namespace mlstm::data {

namespace {

using Words = std::span<const std::string_view>;

constexpr std::string_view kProducts[] = {
    "blender",   "kettle",     "novel",       "headset",  "backpack", "lamp",
    "toaster",   "phone case", "keyboard",    "mouse",    "jacket",   "tent",
    "cookbook",  "monitor",    "coffee maker", "vacuum",  "drill",    "speaker",
    "board game", "water bottle", "charger",  "frying pan", "pillow", "watch",
    "camera",    "printer",    "yoga mat",    "thermos",  "scarf",    "router"};

constexpr std::string_view kPeople[] = {"my wife", "my husband", "my son",  "my daughter",
                                        "my dad",  "my mom",     "a friend", "myself",
                                        "my sister", "my brother", "the office", "my neighbor"};

constexpr std::string_view kAspects[] = {"the build quality", "the price", "the design",
                                         "the battery",       "the packaging", "the size",
                                         "the color",         "the instructions", "the material",
                                         "the sound",         "the weight", "the finish"};

constexpr std::string_view kPosAdj[] = {"excellent", "wonderful", "fantastic", "great",
                                        "superb",    "lovely",    "perfect",   "amazing",
                                        "delightful", "sturdy",   "brilliant", "outstanding"};

constexpr std::string_view kNegAdj[] = {"terrible", "awful",    "horrible", "poor",
                                        "flimsy",   "useless",  "dreadful", "disappointing",
                                        "cheap",    "broken",   "worthless", "miserable"};

constexpr std::string_view kPosVerb[] = {"love", "adore", "recommend", "enjoy", "treasure"};
constexpr std::string_view kNegVerb[] = {"hate", "regret", "returned", "dislike", "despise"};

constexpr std::string_view kPosClose[] = {
    "Five stars.", "Would buy again.", "Highly recommended!", "Worth every penny.",
    "Best purchase this year.", "Very happy with it."};

constexpr std::string_view kNegClose[] = {
    "One star.", "Never again.", "Avoid this one.", "Total waste of money.",
    "Worst purchase this year.", "Very unhappy with it."};

constexpr std::string_view kNeutral[] = {
    "It arrived on a Tuesday.", "Shipping took about a week.", "I have had it for two months.",
    "It came in a brown box.", "I use it most mornings.", "The manual is in three languages.",
    "I ordered the blue one.", "It replaced an older model."};

}  // namespace

ReviewGenerator::ReviewGenerator(std::uint64_t seed) : state_(seed) {}

LabeledText ReviewGenerator::next() {
  // A fresh engine per record keeps records independent of how many draws
  // each template consumes.
  Rng rng(state_);
  state_ = rng.next_u64();
  auto pick = [&rng](Words words) -> std::string_view {
    return words[static_cast<std::size_t>(rng.uniform_index(words.size()))];
  };

  const int label = static_cast<int>(rng.uniform_index(2));
  const Words adj = label ? Words(kPosAdj) : Words(kNegAdj);
  const Words verb = label ? Words(kPosVerb) : Words(kNegVerb);
  const Words close = label ? Words(kPosClose) : Words(kNegClose);

  std::string product(pick(kProducts));
  std::string out;
  auto sentence = [&](int kind) {
    if (!out.empty()) {
      out.push_back(' ');
    }
    switch (kind) {
      case 0:
        out += "I bought this " + product + " for " + std::string(pick(kPeople)) + " and it is " +
               std::string(pick(adj)) + ".";
        break;
      case 1:
        out += "The " + product + " is " + std::string(pick(adj)) + " and " +
               std::string(pick(kAspects)) + " is " + std::string(pick(adj)) + ".";
        break;
      case 2:
        out += "I " + std::string(pick(verb)) + " this " + product + ".";
        break;
      case 3: {
        std::string aspect(pick(kAspects));
        aspect[0] = static_cast<char>(aspect[0] - 'a' + 'A');
        out += aspect + " is " + std::string(pick(adj)) + ".";
        break;
      }
      case 4:
        out += std::string(pick(kNeutral));
        break;
      default:
        out += std::string(pick(close));
        break;
    }
  };

  const auto sentences = 2 + rng.uniform_index(3);
  sentence(static_cast<int>(rng.uniform_index(3)));
  for (std::uint64_t i = 1; i + 1 < sentences; ++i) {
    sentence(static_cast<int>(1 + rng.uniform_index(4)));
  }
  sentence(5);
  return {std::move(out), label};
}

std::vector<std::string> synthetic_review_corpus(std::size_t target_bytes, std::uint64_t seed) {
  ReviewGenerator gen(seed);
  std::vector<std::string> records;
  std::size_t total = 0;
  while (total < target_bytes) {
    records.push_back(gen.next().text);
    total += records.back().size();
  }
  return records;
}

std::vector<LabeledText> synthetic_labeled_reviews(std::size_t count, std::uint64_t seed) {
  ReviewGenerator gen(seed);
  std::vector<LabeledText> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(gen.next());
  }
  return out;
}

double unigram_entropy_bits(const std::vector<std::string>& records) {
  std::array<std::uint64_t, 256> counts{};
  std::uint64_t total = 0;
  for (const auto& r : records) {
    for (unsigned char ch : r) {
      ++counts[ch];
    }
    total += r.size();
  }
  if (total == 0) {
    return 0.0;
  }
  double h = 0.0;
  for (std::uint64_t c : counts) {
    if (c != 0) {
      const double p = static_cast<double>(c) / static_cast<double>(total);
      h -= p * std::log2(p);
    }
  }
  return h;
}

}  // namespace mlstm::data
