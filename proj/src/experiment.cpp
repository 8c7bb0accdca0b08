#include "forge/experiment.hpp"

#include <future>

#include "forge/error.hpp"
#include "forge/rng.hpp"

namespace forge::experiment {

namespace {

using ensemble::Rule;
using ensemble::Topology;

constexpr std::array<Topology, 4> kTopologies{Topology::EM1, Topology::EM2,
                                             Topology::EM3, Topology::EM4};

std::string row_name(Topology t, Rule r) {
  return std::string(ensemble::topology_name(t)) + "-" + std::string(ensemble::rule_name(r));
}

baselines::TrainConfig head_config(const ExperimentConfig& config, std::size_t index) {
  baselines::TrainConfig c = config.train;
  c.seed = derive_seed(config.seed, index);
  return c;
}

}  // namespace

std::vector<Head> default_heads() {
  return {{std::string(ensemble::kRoleMlp), baselines::FeatureSpec::from_name("ngram33")},
          {std::string(ensemble::kRoleCnn), baselines::FeatureSpec::from_name("ngram35")},
          {std::string(ensemble::kRoleLstm), baselines::FeatureSpec::from_name("word1")}};
}

std::vector<std::string> report_rows() {
  std::vector<std::string> rows;
  for (const auto& h : default_heads()) rows.push_back(h.role);
  for (Rule r : {Rule::Soft, Rule::Max}) {
    for (Topology t : kTopologies) rows.push_back(row_name(t, r));
  }
  rows.push_back(row_name(Topology::EM4, Rule::Hard));
  rows.push_back(row_name(Topology::EM4, Rule::Stack));
  return rows;
}

const metrics::MetricsReport& ExperimentResult::report(std::string_view model) const {
  for (const auto& r : reports) {
    if (r.model == model) return r;
  }
  throw Error(ErrorKind::Precondition, "no report for '" + std::string(model) + "'");
}

ExperimentResult run(const datasets::Corpus& train, const datasets::Corpus& validation,
                     const datasets::Corpus& test, const ExperimentConfig& config,
                     const std::string& dataset_name) {
  if (train.empty() || validation.empty() || test.empty()) {
    throw Error(ErrorKind::Precondition, "experiment needs non-empty train, validation and test sets");
  }
  const auto heads = default_heads();
  const auto train_texts = train.texts();
  const auto train_labels = train.labels();
  const auto val_texts = validation.texts();
  const auto val_labels = validation.labels();
  const auto test_texts = test.texts();
  const auto test_labels = test.labels();
  const auto weights = datasets::class_weights(train);

  ExperimentResult result;

  // Heads train independently; each measures its own wall time.
  struct Fitted {
    baselines::SoftmaxModel model;
    double train_s;
  };
  std::vector<std::future<Fitted>> jobs;
  for (std::size_t h = 0; h < heads.size(); ++h) {
    jobs.push_back(std::async(std::launch::async, [&, h] {
      metrics::Timings local;
      auto [model, s] = metrics::time_stage(local, "train", [&] {
        return baselines::train_text(train_texts, train_labels, val_texts, val_labels,
                                     heads[h].features, head_config(config, h), weights);
      });
      return Fitted{std::move(model), s};
    }));
  }
  for (std::size_t h = 0; h < heads.size(); ++h) {
    Fitted fitted = jobs[h].get();
    metrics::Timings stage;
    stage.record("train", fitted.train_s);
    auto [proba, predict_s] = metrics::time_stage(stage, "predict", [&] {
      return fitted.model.predict_proba(test_texts, heads[h].role);
    });
    auto report = metrics::MetricsReport::evaluate(heads[h].role, dataset_name, test_labels,
                                                   proba.argmax_labels());
    report.timings = stage;
    result.timings.record("train:" + heads[h].role, fitted.train_s);
    result.timings.record("predict:" + heads[h].role, predict_s);
    result.test_predictions.emplace(heads[h].role, std::move(proba));
    result.reports.push_back(std::move(report));
    result.heads.push_back(std::move(fitted.model));
  }

  auto combine = [&](Topology t, Rule r) {
    const std::string name = row_name(t, r);
    const auto spec = ensemble::build_em(t, r, result.test_predictions);
    const auto members = ensemble::select_members(spec, result.test_predictions);
    metrics::Timings stage;
    auto [labels, s] = metrics::time_stage(stage, "combine", [&] {
      switch (r) {
        case Rule::Soft: return ensemble::soft_vote(members, spec.member_weights).labels;
        case Rule::Max: return ensemble::max_value(members);
        case Rule::Hard: return ensemble::hard_vote(members);
        case Rule::Stack: break;
      }
      throw Error(ErrorKind::Precondition, "stacking is not a fixed combiner");
    });
    auto report = metrics::MetricsReport::evaluate(name, dataset_name, test_labels, labels);
    report.timings = stage;
    result.timings.record("combine:" + name, s);
    result.reports.push_back(std::move(report));
  };
  for (Rule r : {Rule::Soft, Rule::Max}) {
    for (Topology t : kTopologies) combine(t, r);
  }
  combine(Topology::EM4, Rule::Hard);

  // Stacked EM4: out-of-fold member predictions on the training split.
  std::vector<ensemble::BaseLearner> learners;
  for (std::size_t h = 0; h < heads.size(); ++h) {
    learners.push_back({heads[h].role, heads[h].features, head_config(config, h)});
  }
  const std::string stack_name = row_name(Topology::EM4, Rule::Stack);
  metrics::Timings stage;
  auto [stacked, train_s] = metrics::time_stage(stage, "train", [&] {
    const auto folds = ensemble::stratified_folds(train_labels, config.folds,
                                                  derive_seed(config.seed, 100));
    return ensemble::stack_train(learners, train_texts, train_labels, folds, config.meta,
                                 false);
  });
  result.stack_audit = ensemble::audit_out_of_fold(stacked, train_texts.size());
  // The heads above are the full-data level-0 fits; the meta-learner reads
  // their test predictions.
  auto [stack_proba, predict_s] = metrics::time_stage(stage, "predict", [&] {
    const auto spec = ensemble::build_em(Topology::EM4, Rule::Stack, result.test_predictions);
    return stacked.meta.predict_proba(ensemble::select_members(spec, result.test_predictions),
                                      stack_name);
  });
  auto report = metrics::MetricsReport::evaluate(stack_name, dataset_name, test_labels,
                                                 stack_proba.argmax_labels());
  report.timings = stage;
  result.timings.record("train:" + stack_name, train_s);
  result.timings.record("predict:" + stack_name, predict_s);
  result.reports.push_back(std::move(report));
  return result;
}

}  // namespace forge::experiment
