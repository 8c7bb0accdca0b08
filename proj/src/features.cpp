#include <algorithm>

#include "forge/baselines.hpp"
#include "forge/error.hpp"

namespace forge::baselines {

std::string FeatureSpec::name() const {
  switch (kind) {
    case FeatureKind::CharNgram:
      return "ngram" + std::to_string(min_n) + std::to_string(max_n);
    case FeatureKind::WordUnigram:
      return "word1";
    case FeatureKind::Dense:
      return "dense";
  }
  return "unknown";
}

FeatureSpec FeatureSpec::from_name(std::string_view name) {
  if (name == "ngram33") return {FeatureKind::CharNgram, 3, 3};
  if (name == "ngram35") return {FeatureKind::CharNgram, 3, 5};
  if (name == "word1") return {FeatureKind::WordUnigram, 1, 1};
  if (name == "dense") return {FeatureKind::Dense, 0, 0};
  // Generic "ngramAB" for single-digit bounds.
  if (name.size() == 7 && name.starts_with("ngram")) {
    const int lo = name[5] - '0';
    const int hi = name[6] - '0';
    if (lo >= 1 && lo <= 9 && hi >= lo && hi <= 9) {
      return {FeatureKind::CharNgram, lo, hi};
    }
  }
  throw Error(ErrorKind::Usage, "unknown feature head '" + std::string(name) +
                                    "' (expected ngram33, ngram35 or word1)");
}

FeatureVector FeatureVector::from_pairs(std::vector<Entry> pairs) {
  pairs.emplace_back(0u, 0.0);
  std::sort(pairs.begin(), pairs.end(),
            [](const Entry& a, const Entry& b) { return a.first < b.first; });
  FeatureVector v;
  v.entries_.clear();
  for (const auto& [index, value] : pairs) {
    if (!v.entries_.empty() && v.entries_.back().first == index) {
      v.entries_.back().second += value;
    } else {
      v.entries_.emplace_back(index, value);
    }
  }
  v.entries_.front().second = 1.0;  // bias
  return v;
}

double FeatureVector::at(std::uint32_t index) const {
  const auto it = std::lower_bound(
      entries_.begin(), entries_.end(), index,
      [](const Entry& e, std::uint32_t i) { return e.first < i; });
  return (it != entries_.end() && it->first == index) ? it->second : 0.0;
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint32_t feature_index(std::string_view feature, std::uint32_t dim) {
  return 1u + static_cast<std::uint32_t>(fnv1a(feature) % (dim - 1u));
}

FeatureVector featurize(std::string_view text, const FeatureSpec& spec,
                        std::uint32_t dim) {
  std::vector<FeatureVector::Entry> pairs;
  switch (spec.kind) {
    case FeatureKind::CharNgram: {
      for (int n = spec.min_n; n <= spec.max_n; ++n) {
        const auto len = static_cast<std::size_t>(n);
        for (std::size_t i = 0; i + len <= text.size(); ++i) {
          // The kind prefix keeps character and word features apart.
          std::string key = "c";
          key += text.substr(i, len);
          pairs.emplace_back(feature_index(key, dim), 1.0);
        }
      }
      break;
    }
    case FeatureKind::WordUnigram: {
      std::size_t i = 0;
      while (i < text.size()) {
        while (i < text.size() && text[i] == ' ') ++i;
        const std::size_t start = i;
        while (i < text.size() && text[i] != ' ') ++i;
        if (i > start) {
          std::string key = "w";
          key += text.substr(start, i - start);
          pairs.emplace_back(feature_index(key, dim), 1.0);
        }
      }
      break;
    }
    case FeatureKind::Dense:
      throw Error(ErrorKind::Precondition,
                  "dense feature specs carry precomputed features");
  }
  return FeatureVector::from_pairs(std::move(pairs));
}

LabeledFeatures featurize_all(std::span<const std::string> texts,
                              std::span<const int> labels,
                              const FeatureSpec& spec, std::uint32_t dim) {
  if (texts.size() != labels.size()) {
    throw Error(ErrorKind::Precondition, "texts and labels differ in length");
  }
  LabeledFeatures out;
  out.x.reserve(texts.size());
  for (const auto& t : texts) out.x.push_back(featurize(t, spec, dim));
  out.y.assign(labels.begin(), labels.end());
  return out;
}

}  // namespace forge::baselines
