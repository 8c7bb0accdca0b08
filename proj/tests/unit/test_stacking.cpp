#include <catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "forge/ensemble.hpp"
#include "forge/error.hpp"
#include "forge/synthetic.hpp"
#include "test_support.hpp"

using namespace forge::ensemble;
using forge::Error;
using forge::ProbabilityMatrix;
using forge::baselines::FeatureSpec;

namespace {

struct Fixture {
  std::vector<std::string> texts;
  std::vector<int> labels;
};

const Fixture& corpus() {
  static const Fixture f = [] {
    forge::synthetic::SyntheticConfig sc;
    sc.size = 150;
    sc.seed = 5;
    const auto c = forge::synthetic::generate(sc);
    return Fixture{c.texts(), c.labels()};
  }();
  return f;
}

std::vector<BaseLearner> learners() {
  forge::baselines::TrainConfig cfg;
  cfg.max_epochs = 8;
  return {{"mlp", FeatureSpec::from_name("ngram33"), cfg},
          {"cnn", FeatureSpec::from_name("ngram35"), cfg},
          {"lstm", FeatureSpec::from_name("word1"), cfg}};
}

const StackedModel& stacked() {
  static const StackedModel model = [] {
    const auto& f = corpus();
    const auto folds = stratified_folds(f.labels, 3, 99);
    const auto ls = learners();
    return stack_train(ls, f.texts, f.labels, folds);
  }();
  return model;
}

ProbabilityMatrix one_hot(const std::vector<int>& labels, const std::string& name) {
  ProbabilityMatrix::Storage v = ProbabilityMatrix::Storage::Zero(
      static_cast<Eigen::Index>(labels.size()), 3);
  for (std::size_t i = 0; i < labels.size(); ++i) v(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  return ProbabilityMatrix(std::move(v), name);
}

}  // namespace

TEST_CASE("stratified folds partition the rows", "[folds]") {
  std::vector<int> y;
  for (int i = 0; i < 47; ++i) y.push_back(i % 7 == 0 ? 0 : (i % 3 == 0 ? 1 : 2));
  const auto folds = stratified_folds(y, 4, 12);
  REQUIRE(folds.k() == 4);
  std::set<std::size_t> seen;
  for (const auto& fold : folds.folds)
    for (auto i : fold) CHECK(seen.insert(i).second);
  CHECK(seen.size() == y.size());

  std::array<std::size_t, 3> total{};
  for (int v : y) ++total[static_cast<std::size_t>(v)];
  for (const auto& fold : folds.folds) {
    std::array<std::size_t, 3> counts{};
    for (auto i : fold) ++counts[static_cast<std::size_t>(y[i])];
    for (std::size_t k = 0; k < 3; ++k) {
      const double expected = static_cast<double>(total[k]) / 4.0;
      CHECK(std::abs(static_cast<double>(counts[k]) - expected) <= 1.0);
    }
  }
  const auto owner = folds.fold_of(y.size());
  for (std::size_t j = 0; j < folds.k(); ++j)
    for (auto i : folds.folds[j]) CHECK(owner[i] == j);

  const std::vector<int> tiny{0, 1, 1, 2, 2, 2};
  CHECK_THROWS_AS(stratified_folds(tiny, 3, 1), Error);
  CHECK_THROWS_AS(stratified_folds(y, 1, 1), Error);
}

TEST_CASE("out-of-fold matrix has shape n x m*c and passes the audit", "[stack]") {
  const auto& model = stacked();
  const auto n = corpus().texts.size();
  CHECK(model.z.rows() == static_cast<Eigen::Index>(n));
  CHECK(model.z.cols() == 9);
  CHECK(model.records.size() == 9);
  CHECK(model.members.size() == 3);
  const auto audit = audit_out_of_fold(model, n);
  CHECK(audit.ok);
  CHECK(audit.violations.empty());
  for (Eigen::Index i = 0; i < model.z.rows(); ++i)
    for (Eigen::Index j = 0; j < 3; ++j)
      CHECK(model.z.row(i).segment(3 * j, 3).sum() == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("the audit catches injected leakage", "[audit]") {
  const auto& model = stacked();
  const auto n = corpus().texts.size();
  {
    auto records = model.records;
    auto& r = records[4];
    r.trained_on.push_back(r.predicted.front());
    std::sort(r.trained_on.begin(), r.trained_on.end());
    const auto audit = audit_out_of_fold(records, 3, n);
    CHECK_FALSE(audit.ok);
    CHECK_FALSE(audit.violations.empty());
  }
  {
    auto records = model.records;
    records[0].predicted.pop_back();
    CHECK_FALSE(audit_out_of_fold(records, 3, n).ok);
  }
  {
    auto records = model.records;
    records.push_back(records[0]);
    CHECK_FALSE(audit_out_of_fold(records, 3, n).ok);
  }
  {
    auto records = model.records;
    records[2].member = 7;
    CHECK_FALSE(audit_out_of_fold(records, 3, n).ok);
  }
}

TEST_CASE("out_of_fold reproduces its block of z", "[stack]") {
  const auto& model = stacked();
  const auto& f = corpus();
  const auto ls = learners();
  for (std::size_t t = 0; t < ls.size(); ++t) {
    const auto block = out_of_fold(ls[t], f.texts, f.labels, model.folds);
    CHECK(block.values() ==
          model.z.middleCols(static_cast<Eigen::Index>(3 * t), 3));
  }
}

TEST_CASE("member order does not change stacked labels", "[stack]") {
  const auto& f = corpus();
  const auto ls = learners();
  const std::vector<BaseLearner> reversed{ls[2], ls[1], ls[0]};
  const auto folds = stratified_folds(f.labels, 3, 99);
  const auto back = stack_train(reversed, f.texts, f.labels, folds);
  CHECK(stack_predict(back, f.texts) == stack_predict(stacked(), f.texts));
}

TEST_CASE("meta-learner reaches perfect training accuracy on oracle members", "[meta]") {
  const auto& y = corpus().labels;
  const std::vector<ProbabilityMatrix> perfect{one_hot(y, "a"), one_hot(y, "b"), one_hot(y, "c")};
  const auto z = stack_features(perfect);
  const auto meta = MetaLearner::fit(z, y, {}, 3);
  CHECK(meta.predict_proba(z).argmax_labels() == y);
  CHECK(meta.input_dim() == 9);
}

TEST_CASE("hand-built meta weights select one member", "[meta]") {
  forge::Rng rng(31);
  std::vector<ProbabilityMatrix> ms;
  for (int j = 0; j < 3; ++j) ms.push_back(forge::testing::random_matrix(rng, 40, false));
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 10);
  for (Eigen::Index k = 0; k < 3; ++k) w(k, 1 + k) = 50.0;
  const auto meta = MetaLearner::from_weights(w, 3);
  const auto p = meta.predict_proba(ms);
  CHECK(p.argmax_labels() == ms[0].argmax_labels());
  for (std::size_t i = 0; i < p.rows(); ++i)
    CHECK(p(i, 0) + p(i, 1) + p(i, 2) == Catch::Approx(1.0).margin(1e-12));
  CHECK_THROWS_AS(MetaLearner::from_weights(w, 2), Error);
  const std::vector<ProbabilityMatrix> two{ms[0], ms[1]};
  CHECK_THROWS_AS(meta.predict_proba(two), Error);
}

TEST_CASE("constant member outputs give constant stacked labels", "[meta]") {
  const auto& y = corpus().labels;
  ProbabilityMatrix::Storage flat =
      ProbabilityMatrix::Storage::Constant(static_cast<Eigen::Index>(y.size()), 3, 1.0 / 3.0);
  const std::vector<ProbabilityMatrix> ms{{flat, "a"}, {flat, "b"}, {flat, "c"}};
  const auto meta = MetaLearner::fit(stack_features(ms), y, {}, 3);
  const auto labels = meta.predict_proba(ms).argmax_labels();
  CHECK(std::all_of(labels.begin(), labels.end(), [&](int v) { return v == labels.front(); }));
}

TEST_CASE("stacked predictions on held-out text", "[stack]") {
  const std::vector<std::string> texts{"you wretched vermin", "what a stupid jerk",
                                       "sunny garden picnic"};
  const auto members = member_predictions(stacked(), texts);
  CHECK(members.size() == 3);
  const auto p = stack_predict_proba(stacked(), texts);
  CHECK(p.rows() == 3);
  CHECK(stack_predict(stacked(), texts) == p.argmax_labels());
}
