#include "forge/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <span>
#include <string_view>

#include "forge/error.hpp"
#include "forge/rng.hpp"

namespace forge::synthetic {

namespace {

constexpr std::array<std::string_view, 7> kHatefulWords{
    "loathe", "despise", "banish", "vermin", "wretched", "odious", "scorn"};
constexpr std::array<std::string_view, 7> kOffensiveWords{
    "idiot", "stupid", "dumb", "moron", "jerk", "crap", "lousy"};
constexpr std::array<std::string_view, 8> kNeitherWords{
    "sunny", "garden", "coffee", "weekend", "music", "travel", "picnic", "recipe"};

constexpr std::array<std::string_view, 30> kFiller{
    "the",   "and",     "this",  "that",   "today",   "people", "think",  "really",
    "just",  "going",   "know",  "about",  "after",   "again",  "every",  "little",
    "never", "always",  "there", "what",   "when",    "with",   "because", "morning",
    "tonight", "still", "maybe", "some",   "those",   "a"};

constexpr std::array<std::string_view, 4> kEmoticons{":)", ":(", ";)", ":D"};

std::span<const std::string_view> keywords(std::size_t cls) {
  switch (cls) {
    case 0: return kHatefulWords;
    case 1: return kOffensiveWords;
    default: return kNeitherWords;
  }
}

template <typename Seq>
std::string_view pick(Rng& rng, const Seq& words) {
  return words[static_cast<std::size_t>(rng.below(words.size()))];
}

// Largest-remainder class counts summing to `total`.
std::array<std::size_t, 3> class_counts(std::size_t total,
                                        const std::array<double, 3>& p) {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> rest{};
  std::size_t used = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double exact = p[k] * static_cast<double>(total);
    counts[k] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rest[k] = exact - static_cast<double>(counts[k]);
    used += counts[k];
  }
  while (used < total) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < 3; ++k) {
      if (rest[k] > rest[best]) best = k;
    }
    ++counts[best];
    rest[best] = -1.0;
    ++used;
  }
  return counts;
}

}  // namespace

datasets::Corpus generate(const SyntheticConfig& config) {
  double total_p = 0.0;
  for (double p : config.proportions) {
    if (!(p >= 0.0)) throw Error(ErrorKind::Precondition, "negative class proportion");
    total_p += p;
  }
  if (std::abs(total_p - 1.0) > 1e-9) {
    throw Error(ErrorKind::Precondition, "class proportions must sum to 1");
  }
  if (config.min_filler > config.max_filler || config.max_keywords == 0) {
    throw Error(ErrorKind::Precondition, "invalid synthetic word counts");
  }

  Rng rng(config.seed);
  const auto counts = class_counts(config.size, config.proportions);
  std::vector<std::size_t> classes;
  for (std::size_t k = 0; k < 3; ++k) classes.insert(classes.end(), counts[k], k);
  rng.shuffle(classes);

  std::vector<datasets::LabeledExample> examples;
  examples.reserve(classes.size());
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const std::size_t cls = classes[i];
    const std::size_t fillers =
        config.min_filler + rng.below(config.max_filler - config.min_filler + 1);
    const std::size_t keys = 1 + rng.below(config.max_keywords);

    std::vector<std::string> words;
    for (std::size_t f = 0; f < fillers; ++f) words.emplace_back(pick(rng, kFiller));
    for (std::size_t q = 0; q < keys; ++q) {
      std::string word(pick(rng, keywords(cls)));
      if (config.decorate && rng.uniform() < 0.15) word = "#" + word;
      const auto at = rng.below(words.size() + 1);
      words.insert(words.begin() + static_cast<std::ptrdiff_t>(at), std::move(word));
    }

    if (config.decorate) {
      if (rng.uniform() < 0.3) words.insert(words.begin(), "@user" + std::to_string(rng.below(100)));
      if (rng.uniform() < 0.2) words.front()[0] = static_cast<char>(std::toupper(words.front()[0]));
      if (rng.uniform() < 0.25) words.back() += "!!";
      if (rng.uniform() < 0.15) words.emplace_back(pick(rng, kEmoticons));
      if (rng.uniform() < 0.2) words.push_back("http://t.co/x" + std::to_string(rng.below(1000)));
    }

    std::string text;
    for (const auto& w : words) {
      if (!text.empty()) text += ' ';
      text += w;
    }

    char id[32];
    std::snprintf(id, sizeof(id), "syn-%06zu", i + 1);
    examples.push_back({id, std::move(text), static_cast<ClassLabel>(cls),
                        datasets::CorpusId::Synthetic});
  }
  return datasets::Corpus(std::move(examples));
}

}  // namespace forge::synthetic
