#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "forge/datasets.hpp"
#include "forge/labels.hpp"
#include "forge/probability_matrix.hpp"

namespace forge::baselines {

/// Width of the hashed feature space; index 0 is the bias slot.
inline constexpr std::uint32_t kHashDim = 1u << 18;

enum class FeatureKind : std::uint8_t { CharNgram, WordUnigram, Dense };

/// Feature extractor configuration. Named heads:
///   ngram33 - character 3-grams
///   ngram35 - character 3- to 5-grams
///   word1   - word unigrams
struct FeatureSpec {
  FeatureKind kind = FeatureKind::CharNgram;
  int min_n = 3;
  int max_n = 5;

  std::string name() const;
  static FeatureSpec from_name(std::string_view name);

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

/// Sparse non-negative feature counts, sorted by index, with the bias
/// entry (index 0, value 1) always present.
class FeatureVector {
 public:
  using Entry = std::pair<std::uint32_t, double>;

  FeatureVector() : entries_{{0u, 1.0}} {}
  /// Builds from unsorted (index, value) pairs; duplicate indices are summed.
  static FeatureVector from_pairs(std::vector<Entry> pairs);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  /// Value at `index`, zero if absent.
  double at(std::uint32_t index) const;

 private:
  std::vector<Entry> entries_;
};

/// Stable 64-bit FNV-1a hash of the bytes of `text`.
std::uint64_t fnv1a(std::string_view text);

/// Maps a feature string into [1, dim).
std::uint32_t feature_index(std::string_view feature, std::uint32_t dim = kHashDim);

/// Counts the n-grams of `text` (characters, or whitespace-separated words)
/// hashed into `dim` slots.
FeatureVector featurize(std::string_view text, const FeatureSpec& spec,
                        std::uint32_t dim = kHashDim);

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t max_epochs = 50;
  double learning_rate = 0.5;
  std::size_t patience = 5;
  std::uint64_t seed = 17;

  /// Throws Error(Precondition) if batch_size is zero or the learning rate is
  /// not a positive finite number.
  void validate() const;
};

/// Features and integer labels of one data split.
struct LabeledFeatures {
  std::vector<FeatureVector> x;
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
};

LabeledFeatures featurize_all(std::span<const std::string> texts,
                              std::span<const int> labels,
                              const FeatureSpec& spec,
                              std::uint32_t dim = kHashDim);

/// Multinomial softmax regression over sparse features. The weight matrix is
/// num_classes x dim; column j holds the class scores for feature j.
class SoftmaxModel {
 public:
  SoftmaxModel() = default;
  SoftmaxModel(std::size_t num_classes, std::uint32_t dim, FeatureSpec spec);

  std::size_t num_classes() const { return static_cast<std::size_t>(weights_.rows()); }
  std::uint32_t dim() const { return static_cast<std::uint32_t>(weights_.cols()); }
  const FeatureSpec& features() const { return features_; }

  const Eigen::MatrixXd& weights() const { return weights_; }
  Eigen::MatrixXd& weights() { return weights_; }

  /// Class probabilities for one feature vector.
  Eigen::VectorXd probabilities(const FeatureVector& x) const;
  int predict(const FeatureVector& x) const;

  ProbabilityMatrix predict_proba(std::span<const FeatureVector> xs,
                                  std::string producer = {}) const;
  /// Featurizes each text with the model's own feature spec first.
  ProbabilityMatrix predict_proba(std::span<const std::string> texts,
                                  std::string producer = {}) const;

  double accuracy(const LabeledFeatures& data) const;

  // Training metadata.
  TrainConfig config;
  std::vector<double> validation_accuracy;  // one entry per completed epoch
  std::size_t best_epoch = 0;               // 0: untrained weights

  void save(const std::filesystem::path& path) const;
  static SoftmaxModel load(const std::filesystem::path& path);

 private:
  Eigen::MatrixXd weights_;
  FeatureSpec features_;
};

/// Class-weighted cross-entropy averaged over the batch:
///   (1/B) * sum_i w[y_i] * -log softmax(W x_i)[y_i].
double weighted_cross_entropy(const Eigen::MatrixXd& weights,
                              std::span<const FeatureVector> xs,
                              std::span<const int> ys,
                              const datasets::ClassWeights& class_weights);

/// Analytic gradient of weighted_cross_entropy with respect to the weights,
/// returned densely (same shape as `weights`).
Eigen::MatrixXd weighted_cross_entropy_gradient(
    const Eigen::MatrixXd& weights, std::span<const FeatureVector> xs,
    std::span<const int> ys, const datasets::ClassWeights& class_weights);

/// Mini-batch gradient descent from zero weights. After every epoch the
/// validation accuracy is logged; training stops once it has not improved
/// for `patience` epochs and the best-scoring epoch's weights are returned.
/// max_epochs == 0 returns the zero model. Throws Error(Numeric) if the loss
/// becomes non-finite and Error(Precondition) on empty train or validation
/// data.
SoftmaxModel train(const LabeledFeatures& train_set,
                   const LabeledFeatures& validation_set,
                   const TrainConfig& config,
                   const datasets::ClassWeights& class_weights,
                   std::uint32_t dim, const FeatureSpec& spec,
                   std::size_t num_classes = kNumClasses);

/// Featurizes texts with `spec` and trains in the hashed space.
SoftmaxModel train_text(std::span<const std::string> train_texts,
                        std::span<const int> train_labels,
                        std::span<const std::string> validation_texts,
                        std::span<const int> validation_labels,
                        const FeatureSpec& spec, const TrainConfig& config,
                        const datasets::ClassWeights& class_weights);

}  // namespace forge::baselines
