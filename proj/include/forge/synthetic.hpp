#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "forge/datasets.hpp"

namespace forge::synthetic {

// Seeded three-class corpus built from per-class keyword vocabularies mixed
// into filler shared by all classes. Raw texts carry tweet-like noise
// (mentions, links, hashtags, punctuation, emoticons) so the preprocessing
// pipeline has something to strip.
struct SyntheticConfig {
  std::size_t size = 300;
  std::uint64_t seed = 7;
  std::array<double, 3> proportions{0.25, 0.45, 0.30};
  std::size_t min_filler = 3;
  std::size_t max_filler = 7;
  std::size_t max_keywords = 3;
  bool decorate = true;
};

datasets::Corpus generate(const SyntheticConfig& config = {});

}  // namespace forge::synthetic
