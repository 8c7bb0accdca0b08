#include <algorithm>
#include <array>
#include <future>
#include <numeric>

#include "forge/datasets.hpp"
#include "forge/ensemble.hpp"
#include "forge/error.hpp"
#include "forge/rng.hpp"

namespace forge::ensemble {

using baselines::FeatureVector;
using baselines::LabeledFeatures;
using baselines::SoftmaxModel;

namespace {

// Seed tag for the validation slice of the full-data refit.
constexpr std::uint64_t kRefitTag = 0xfeedULL;

LabeledFeatures select(const LabeledFeatures& all, std::span<const std::size_t> idx) {
  LabeledFeatures out;
  out.x.reserve(idx.size());
  out.y.reserve(idx.size());
  for (std::size_t i : idx) {
    out.x.push_back(all.x[i]);
    out.y.push_back(all.y[i]);
  }
  return out;
}

// Fits one model on `rows` of `all`, holding out a stratified slice of
// `validation_ratio` for early stopping. A slice that comes out empty on
// tiny inputs falls back to validating on the training rows.
SoftmaxModel fit_on(const LabeledFeatures& all, std::span<const std::size_t> rows,
                    const baselines::TrainConfig& config,
                    const baselines::FeatureSpec& spec, std::uint32_t dim,
                    double validation_ratio, std::uint64_t carve_seed) {
  std::vector<int> row_labels;
  row_labels.reserve(rows.size());
  for (std::size_t i : rows) row_labels.push_back(all.y[i]);

  const std::array<double, 2> ratios{1.0 - validation_ratio, validation_ratio};
  auto parts = datasets::stratified_partition(row_labels, ratios, carve_seed, false);
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> val_rows;
  for (std::size_t p : parts[0]) train_rows.push_back(rows[p]);
  for (std::size_t p : parts[1]) val_rows.push_back(rows[p]);
  if (val_rows.empty()) val_rows = train_rows;
  if (train_rows.empty()) {
    throw Error(ErrorKind::Precondition, "no training rows left after the validation slice");
  }

  const auto train_set = select(all, train_rows);
  const auto val_set = select(all, val_rows);
  return baselines::train(train_set, val_set, config,
                          datasets::class_weights(std::span<const int>(train_set.y)),
                          dim, spec);
}

}  // namespace

std::vector<std::size_t> FoldAssignment::fold_of(std::size_t n) const {
  std::vector<std::size_t> out(n, folds.size());
  for (std::size_t j = 0; j < folds.size(); ++j) {
    for (std::size_t i : folds[j]) {
      if (i < n) out[i] = j;
    }
  }
  return out;
}

FoldAssignment stratified_folds(std::span<const int> labels, std::size_t k,
                                std::uint64_t seed) {
  if (k < 2) {
    throw Error(ErrorKind::Precondition, "stacking needs at least two folds");
  }
  std::vector<double> ratios(k, 1.0 / static_cast<double>(k));
  FoldAssignment out;
  out.seed = seed;
  try {
    out.folds = datasets::stratified_partition(labels, ratios, seed, true);
  } catch (const Error& e) {
    throw Error(ErrorKind::Precondition,
                "cannot build " + std::to_string(k) + " stratified folds: " + e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------

baselines::FeatureVector MetaLearner::row_features(const Eigen::MatrixXd& z,
                                                   Eigen::Index row) {
  std::vector<FeatureVector::Entry> pairs;
  pairs.reserve(static_cast<std::size_t>(z.cols()));
  for (Eigen::Index col = 0; col < z.cols(); ++col) {
    pairs.emplace_back(static_cast<std::uint32_t>(col + 1), z(row, col));
  }
  return FeatureVector::from_pairs(std::move(pairs));
}

MetaLearner MetaLearner::fit(const Eigen::MatrixXd& z, std::span<const int> labels,
                             const MetaConfig& config, std::size_t members) {
  if (members == 0 || static_cast<std::size_t>(z.cols()) != members * kNumClasses) {
    throw Error(ErrorKind::Precondition,
                "meta features have " + std::to_string(z.cols()) +
                    " columns, expected " + std::to_string(members * kNumClasses));
  }
  if (static_cast<std::size_t>(z.rows()) != labels.size() || labels.empty()) {
    throw Error(ErrorKind::Precondition,
                "meta features and labels differ in length or are empty");
  }
  if (!(config.validation_ratio > 0.0 && config.validation_ratio < 1.0)) {
    throw Error(ErrorKind::Precondition, "validation_ratio must lie in (0, 1)");
  }

  LabeledFeatures all;
  all.x.reserve(labels.size());
  for (Eigen::Index i = 0; i < z.rows(); ++i) all.x.push_back(row_features(z, i));
  all.y.assign(labels.begin(), labels.end());

  std::vector<std::size_t> rows(labels.size());
  std::iota(rows.begin(), rows.end(), 0);
  const auto dim = static_cast<std::uint32_t>(z.cols() + 1);

  MetaLearner out;
  out.members_ = members;
  out.model_ = fit_on(all, rows, config.train,
                      {baselines::FeatureKind::Dense, 0, 0}, dim,
                      config.validation_ratio, derive_seed(config.train.seed, 1));
  return out;
}

MetaLearner MetaLearner::from_weights(const Eigen::MatrixXd& weights,
                                      std::size_t members) {
  if (weights.rows() != static_cast<Eigen::Index>(kNumClasses) ||
      weights.cols() != static_cast<Eigen::Index>(members * kNumClasses + 1)) {
    throw Error(ErrorKind::Precondition, "meta weight matrix has the wrong shape");
  }
  MetaLearner out;
  out.members_ = members;
  out.model_ = SoftmaxModel(kNumClasses, static_cast<std::uint32_t>(weights.cols()),
                            {baselines::FeatureKind::Dense, 0, 0});
  out.model_.weights() = weights;
  return out;
}

ProbabilityMatrix MetaLearner::predict_proba(std::span<const ProbabilityMatrix> members,
                                             std::string producer) const {
  if (members.size() != members_) {
    throw Error(ErrorKind::Precondition,
                "meta-learner expects " + std::to_string(members_) +
                    " members, got " + std::to_string(members.size()));
  }
  for (const auto& m : members) {
    if (m.cols() != num_classes_) {
      throw Error(ErrorKind::Precondition,
                  "member '" + m.producer() + "' has " + std::to_string(m.cols()) +
                      " classes, expected " + std::to_string(num_classes_));
    }
    m.validate();
  }
  return predict_proba(stack_features(members), std::move(producer));
}

ProbabilityMatrix MetaLearner::predict_proba(const Eigen::MatrixXd& z,
                                             std::string producer) const {
  if (static_cast<std::size_t>(z.cols()) != input_dim()) {
    throw Error(ErrorKind::Precondition,
                "meta input has " + std::to_string(z.cols()) + " columns, expected " +
                    std::to_string(input_dim()));
  }
  ProbabilityMatrix::Storage out(z.rows(), static_cast<Eigen::Index>(num_classes_));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    out.row(i) = model_.probabilities(row_features(z, i)).transpose();
  }
  return ProbabilityMatrix(std::move(out), std::move(producer));
}

// ---------------------------------------------------------------------------

namespace {

// Validates that `folds` partitions 0..n-1 and returns the owning fold of
// every row.
std::vector<std::size_t> check_folds(const FoldAssignment& folds, std::size_t n) {
  const std::size_t k = folds.k();
  if (k < 2) throw Error(ErrorKind::Precondition, "stacking needs at least two folds");
  std::size_t assigned = 0;
  for (const auto& fold : folds.folds) {
    for (std::size_t i : fold) {
      if (i >= n) {
        throw Error(ErrorKind::Precondition, "fold index " + std::to_string(i) +
                                                 " outside the training set");
      }
    }
    assigned += fold.size();
  }
  auto owner = folds.fold_of(n);
  if (assigned != n || std::count(owner.begin(), owner.end(), k) != 0) {
    throw Error(ErrorKind::Precondition,
                "folds must partition the training set exactly once");
  }
  return owner;
}

// Fits `learner` without fold j and writes its probabilities for fold j's
// rows into columns [col, col + c) of `z`.
FoldRecord fit_fold(const BaseLearner& learner, const LabeledFeatures& features,
                    const FoldAssignment& folds, std::span<const std::size_t> owner,
                    std::size_t j, std::size_t member, double validation_ratio,
                    Eigen::MatrixXd& z, Eigen::Index col) {
  FoldRecord record;
  record.fold = j;
  record.member = member;
  for (std::size_t i = 0; i < owner.size(); ++i) {
    if (owner[i] != j) record.trained_on.push_back(i);
  }
  record.predicted = folds.folds[j];
  std::sort(record.predicted.begin(), record.predicted.end());

  const SoftmaxModel fitted =
      fit_on(features, record.trained_on, learner.config, learner.features,
             baselines::kHashDim, validation_ratio, derive_seed(folds.seed, j));
  for (std::size_t i : record.predicted) {
    z.block(static_cast<Eigen::Index>(i), col, 1, static_cast<Eigen::Index>(kNumClasses)) =
        fitted.probabilities(features.x[i]).transpose();
  }
  return record;
}

}  // namespace

ProbabilityMatrix out_of_fold(const BaseLearner& learner, std::span<const std::string> texts,
                              std::span<const int> labels, const FoldAssignment& folds,
                              double validation_ratio, std::vector<FoldRecord>* records) {
  const std::size_t n = texts.size();
  if (labels.size() != n) {
    throw Error(ErrorKind::Precondition, "texts and labels differ in length");
  }
  const auto owner = check_folds(folds, n);
  const auto features = baselines::featurize_all(texts, labels, learner.features);
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(kNumClasses));
  std::vector<FoldRecord> local(folds.k());
  std::vector<std::future<void>> jobs;
  for (std::size_t j = 0; j < folds.k(); ++j) {
    jobs.push_back(std::async(std::launch::async, [&, j] {
      local[j] = fit_fold(learner, features, folds, owner, j, 0, validation_ratio, z, 0);
    }));
  }
  for (auto& job : jobs) job.get();
  if (records != nullptr) *records = std::move(local);
  return ProbabilityMatrix(ProbabilityMatrix::Storage(z), learner.name);
}

StackedModel stack_train(std::span<const BaseLearner> learners,
                         std::span<const std::string> texts,
                         std::span<const int> labels, const FoldAssignment& folds,
                         const MetaConfig& meta_config, bool refit_members) {
  const std::size_t m = learners.size();
  const std::size_t n = texts.size();
  const std::size_t k = folds.k();
  if (m < 2) {
    throw Error(ErrorKind::Precondition, "stacking needs at least two base learners");
  }
  if (labels.size() != n) {
    throw Error(ErrorKind::Precondition, "texts and labels differ in length");
  }
  const auto owner = check_folds(folds, n);

  StackedModel model;
  model.learners.assign(learners.begin(), learners.end());
  model.folds = folds;

  // Featurize once per learner; folds select rows from these.
  std::vector<LabeledFeatures> features(m);
  {
    std::vector<std::future<LabeledFeatures>> jobs;
    for (const auto& learner : learners) {
      jobs.push_back(std::async(std::launch::async, [&, spec = learner.features] {
        return baselines::featurize_all(texts, labels, spec);
      }));
    }
    for (std::size_t t = 0; t < m; ++t) features[t] = jobs[t].get();
  }

  const double val_ratio = meta_config.validation_ratio;
  model.z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                  static_cast<Eigen::Index>(m * kNumClasses));
  model.records.resize(k * m);

  // Each job writes a disjoint (fold rows x member columns) block of z.
  std::vector<std::future<void>> jobs;
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t t = 0; t < m; ++t) {
      jobs.push_back(std::async(std::launch::async, [&, j, t] {
        model.records[j * m + t] =
            fit_fold(learners[t], features[t], folds, owner, j, t, val_ratio, model.z,
                     static_cast<Eigen::Index>(t * kNumClasses));
      }));
    }
  }
  for (auto& job : jobs) job.get();

  model.meta = MetaLearner::fit(model.z, labels, meta_config, m);
  if (!refit_members) return model;

  std::vector<std::size_t> everything(n);
  std::iota(everything.begin(), everything.end(), 0);
  std::vector<std::future<SoftmaxModel>> refits;
  for (std::size_t t = 0; t < m; ++t) {
    refits.push_back(std::async(std::launch::async, [&, t] {
      return fit_on(features[t], everything, learners[t].config, learners[t].features,
                    baselines::kHashDim, val_ratio, derive_seed(folds.seed, kRefitTag));
    }));
  }
  for (auto& f : refits) model.members.push_back(f.get());
  return model;
}

std::vector<ProbabilityMatrix> member_predictions(const StackedModel& model,
                                                  std::span<const std::string> texts) {
  if (model.members.size() != model.learners.size() || model.members.empty()) {
    throw Error(ErrorKind::Precondition, "stacked model has no fitted members");
  }
  std::vector<ProbabilityMatrix> out;
  out.reserve(model.members.size());
  for (std::size_t t = 0; t < model.members.size(); ++t) {
    out.push_back(model.members[t].predict_proba(texts, model.learners[t].name));
  }
  return out;
}

ProbabilityMatrix stack_predict_proba(const StackedModel& model,
                                      std::span<const std::string> texts) {
  return model.meta.predict_proba(member_predictions(model, texts));
}

std::vector<int> stack_predict(const StackedModel& model,
                               std::span<const std::string> texts) {
  return stack_predict_proba(model, texts).argmax_labels();
}

LeakageAudit audit_out_of_fold(const StackedModel& model, std::size_t n) {
  return audit_out_of_fold(model.records, model.size(), n);
}

LeakageAudit audit_out_of_fold(std::span<const FoldRecord> records,
                               std::size_t members, std::size_t n) {
  LeakageAudit audit;
  auto fail = [&](std::string message) {
    audit.ok = false;
    audit.violations.push_back(std::move(message));
  };
  std::vector<std::vector<std::size_t>> writes(members, std::vector<std::size_t>(n, 0));
  for (const auto& r : records) {
    if (r.member >= members) {
      fail("record names member " + std::to_string(r.member));
      continue;
    }
    if (!std::is_sorted(r.trained_on.begin(), r.trained_on.end())) {
      fail("fold " + std::to_string(r.fold) + " member " + std::to_string(r.member) +
           ": training indices are not sorted");
      continue;
    }
    for (std::size_t i : r.predicted) {
      if (i >= n) {
        fail("row " + std::to_string(i) + " outside the training set");
        continue;
      }
      ++writes[r.member][i];
      if (std::binary_search(r.trained_on.begin(), r.trained_on.end(), i)) {
        fail("row " + std::to_string(i) + " was predicted by member " +
             std::to_string(r.member) + " in fold " + std::to_string(r.fold) +
             " after training on it");
      }
    }
  }
  for (std::size_t t = 0; t < members; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      if (writes[t][i] != 1) {
        fail("row " + std::to_string(i) + " written " + std::to_string(writes[t][i]) +
             " times for member " + std::to_string(t));
      }
    }
  }
  return audit;
}

}  // namespace forge::ensemble
