#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "forge/baselines.hpp"
#include "forge/datasets.hpp"
#include "forge/ensemble.hpp"
#include "forge/metrics.hpp"

namespace forge::experiment {

struct Head {
  std::string role;  // mlp, cnn or lstm
  baselines::FeatureSpec features;
};

// mlp -> ngram33, cnn -> ngram35, lstm -> word1.
std::vector<Head> default_heads();

struct ExperimentConfig {
  std::uint64_t seed = 17;
  baselines::TrainConfig train;
  ensemble::MetaConfig meta;
  std::size_t folds = 3;
};

struct ExperimentResult {
  std::vector<metrics::MetricsReport> reports;  // base learners first, then ensembles
  ensemble::MatrixRegistry test_predictions;      // by role
  std::vector<baselines::SoftmaxModel> heads;     // in default_heads() order
  ensemble::LeakageAudit stack_audit;
  metrics::Timings timings;  // every stage, e.g. "train:mlp", "combine:EM4-soft"

  const metrics::MetricsReport& report(std::string_view model) const;
};

// Trains the three heads on `train` (early stopping on `validation`), then
// evaluates on `test` every head, soft voting and maximum value for EM1..EM4,
// hard voting for EM4, and EM4 stacking trained out-of-fold on `train`.
ExperimentResult run(const datasets::Corpus& train, const datasets::Corpus& validation,
                     const datasets::Corpus& test, const ExperimentConfig& config,
                     const std::string& dataset_name);

// Model names of the rows run() produces, in order.
std::vector<std::string> report_rows();

}  // namespace forge::experiment
