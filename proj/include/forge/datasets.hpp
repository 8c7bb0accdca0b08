#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "forge/labels.hpp"
#include "forge/preprocess.hpp"

namespace forge::datasets {

enum class CorpusId : std::uint8_t { Davidson, HatEval2019, Olid, Synthetic };

std::string_view corpus_name(CorpusId id);
// Throws Error(Parse) for unknown names.
CorpusId corpus_from_name(std::string_view name);

struct LabeledExample {
  std::string id;
  std::string text;
  ClassLabel label = ClassLabel::Neither;
  CorpusId source = CorpusId::Davidson;
};

using Histogram = std::array<std::size_t, kNumClasses>;

// Ordered, immutable collection of examples with its per-class histogram.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<LabeledExample> examples);

  const std::vector<LabeledExample>& examples() const { return examples_; }
  const LabeledExample& operator[](std::size_t i) const { return examples_[i]; }
  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }
  const Histogram& histogram() const { return histogram_; }

  std::vector<int> labels() const;
  std::vector<std::string> texts() const;
  std::vector<std::string> ids() const;
  Corpus subset(std::span<const std::size_t> indices) const;

 private:
  std::vector<LabeledExample> examples_;
  Histogram histogram_{};
};

// Published layouts. Each returns one example per data row with raw text.
//   Davidson: comma-separated, columns `class` (0 hate, 1 offensive,
//     2 neither) and `tweet`; the unnamed first column is used as id.
//   HatEval:  columns `id`, `text`, `HS` (1 -> Hateful, 0 -> Neither);
//     comma- or tab-separated.
//   OLID:     tab-separated, columns `id`, `tweet`, `subtask_a`
//     (OFF -> Offensive, NOT -> Neither).
Corpus load_davidson(const std::filesystem::path& path);
Corpus load_hateval(const std::filesystem::path& path);
Corpus load_olid(const std::filesystem::path& path);

// Applies the preprocessing pipeline to every text, dropping examples the
// pipeline rejects. `dropped`, if given, receives the number removed.
Corpus normalize_corpus(const Corpus& corpus,
                        const preprocess::PreprocessConfig& config,
                        std::size_t* dropped = nullptr);

// Concatenates the corpora in order, keeping the first occurrence of every
// exact text.
Corpus fuse_dho(const Corpus& davidson, const Corpus& hateval,
                const Corpus& olid);

// Canonical corpus file: header `id,source,label,text`, one record per line.
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus read_corpus(const std::filesystem::path& path);

nlohmann::ordered_json histogram_json(const Corpus& corpus);

// Inverse-frequency class weights: N / (c * count_k).
class ClassWeights {
 public:
  ClassWeights() { weights_.fill(1.0); }
  explicit ClassWeights(std::array<double, kNumClasses> weights);

  double operator[](std::size_t k) const { return weights_[k]; }
  const std::array<double, kNumClasses>& values() const { return weights_; }

 private:
  std::array<double, kNumClasses> weights_{};
};

// Throws Error(Precondition) naming the empty class.
ClassWeights class_weights(const Histogram& counts);
ClassWeights class_weights(const Corpus& corpus);
ClassWeights class_weights(std::span<const int> labels);

// Train / validation / test partition of corpus indices.
struct SplitPlan {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
  std::array<double, 3> ratios{0.8, 0.1, 0.1};
  std::size_t corpus_size = 0;

  nlohmann::json to_json() const;
  static SplitPlan from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static SplitPlan load(const std::filesystem::path& path);
};

inline constexpr double kValidationRatio = 0.10;

// Per-class seeded shuffle followed by proportional allocation. The
// per-class count in every split is within one example of
// n_class * |split| / N. Throws Error(Precondition) naming the class when a
// split with a positive ratio would receive no example of some class.
SplitPlan stratified_split(std::span<const int> labels,
                           const std::array<double, 3>& ratios,
                           std::uint64_t seed);
SplitPlan stratified_split(const Corpus& corpus,
                           const std::array<double, 3>& ratios,
                           std::uint64_t seed);

// General stratified partition into `ratios.size()` groups, each sorted
// ascending; used for splits, folds and validation slices. With
// `require_every_class`, a group with a positive ratio that would receive no
// example of a present class raises Error(Precondition) naming the class.
std::vector<std::vector<std::size_t>> stratified_partition(
    std::span<const int> labels, std::span<const double> ratios,
    std::uint64_t seed, bool require_every_class = true);

}  // namespace forge::datasets
