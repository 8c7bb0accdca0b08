#include <catch_amalgamated.hpp>

#include <cmath>
#include <fstream>

#include "forge/baselines.hpp"
#include "forge/error.hpp"
#include "forge/rng.hpp"
#include "forge/synthetic.hpp"
#include "test_support.hpp"

using namespace forge::baselines;
using forge::Error;
using forge::ErrorKind;
using forge::datasets::ClassWeights;

namespace {

FeatureSpec chars(int lo, int hi) { return {FeatureKind::CharNgram, lo, hi}; }

LabeledFeatures random_batch(forge::Rng& rng, std::size_t n, std::uint32_t dim) {
  LabeledFeatures out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<FeatureVector::Entry> pairs;
    const auto nnz = 1 + rng.below(4);
    for (std::uint64_t k = 0; k < nnz; ++k) {
      pairs.emplace_back(1 + static_cast<std::uint32_t>(rng.below(dim - 1)),
                         0.5 + 2.0 * rng.uniform());
    }
    out.x.push_back(FeatureVector::from_pairs(std::move(pairs)));
    out.y.push_back(static_cast<int>(rng.below(3)));
  }
  return out;
}

double recall(const SoftmaxModel& model, const LabeledFeatures& data, int k) {
  std::size_t tp = 0, support = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.y[i] != k) continue;
    ++support;
    if (model.predict(data.x[i]) == k) ++tp;
  }
  return static_cast<double>(tp) / static_cast<double>(support);
}

}  // namespace

TEST_CASE("fnv1a matches the published 64-bit test vectors", "[features]") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
  for (const char* s : {"x", "hello", "cabc"}) {
    const auto idx = feature_index(s);
    CHECK(idx >= 1u);
    CHECK(idx < kHashDim);
  }
}

TEST_CASE("character n-gram featurization", "[features]") {
  const auto one = featurize("abc", chars(3, 3));
  REQUIRE(one.size() == 2);
  CHECK(one.at(0) == 1.0);
  CHECK(one.at(feature_index("cabc")) == 1.0);

  const auto empty = featurize("", chars(3, 5));
  REQUIRE(empty.size() == 1);
  CHECK(empty.entries()[0] == FeatureVector::Entry{0u, 1.0});

  const auto abab = featurize("abab", chars(2, 2));
  CHECK(abab.size() == 3);
  CHECK(abab.at(feature_index("cab")) == 2.0);
  CHECK(abab.at(feature_index("cba")) == 1.0);
}

TEST_CASE("word unigrams and named heads", "[features]") {
  const auto w = featurize("to be or not to be", FeatureSpec::from_name("word1"));
  CHECK(w.at(feature_index("wto")) == 2.0);
  CHECK(w.at(feature_index("wbe")) == 2.0);
  CHECK(w.at(feature_index("wnot")) == 1.0);
  CHECK(w.size() == 5);
  CHECK(FeatureSpec::from_name("ngram33") == chars(3, 3));
  CHECK(FeatureSpec::from_name("ngram35") == chars(3, 5));
  CHECK(FeatureSpec::from_name("ngram35").name() == "ngram35");
  CHECK(FeatureSpec::from_name("ngram24") == chars(2, 4));
  CHECK_THROWS_AS(FeatureSpec::from_name("ngram53"), Error);
  CHECK_THROWS_AS(FeatureSpec::from_name("bert"), Error);
  const auto v = featurize("some text here", chars(3, 5));
  for (const auto& e : v.entries()) {
    CHECK(e.first < kHashDim);
    CHECK(e.second >= 0.0);
  }
}

TEST_CASE("analytic gradient matches central finite differences", "[gradient]") {
  constexpr std::uint32_t dim = 12;
  const double h = 1e-5;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    forge::Rng rng(seed);
    const auto batch = random_batch(rng, 6, dim);
    Eigen::MatrixXd w(3, dim);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform() - 0.5;
    const ClassWeights cw({1.7, 0.4, 1.1});
    const auto g = weighted_cross_entropy_gradient(w, batch.x, batch.y, cw);
    double worst = 0.0;
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        Eigen::MatrixXd plus = w, minus = w;
        plus(r, c) += h;
        minus(r, c) -= h;
        const double numeric = (weighted_cross_entropy(plus, batch.x, batch.y, cw) -
                                weighted_cross_entropy(minus, batch.x, batch.y, cw)) /
                               (2 * h);
        worst = std::max(worst, std::abs(numeric - g(r, c)));
      }
    }
    INFO("seed " << seed);
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("weighted cross-entropy of the zero model is log 3 scaled", "[loss]") {
  forge::Rng rng(3);
  const auto batch = random_batch(rng, 5, 8);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(3, 8);
  const ClassWeights cw({2.0, 1.0, 0.5});
  double mean_w = 0.0;
  for (int y : batch.y) mean_w += cw[static_cast<std::size_t>(y)];
  mean_w /= static_cast<double>(batch.size());
  CHECK(weighted_cross_entropy(zero, batch.x, batch.y, cw) ==
        Catch::Approx(mean_w * std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("zero epochs give uniform predictions", "[train]") {
  const std::vector<std::string> texts{"abc def", "ghi jkl"};
  const std::vector<int> labels{0, 1};
  TrainConfig cfg;
  cfg.max_epochs = 0;
  const auto model = train_text(texts, labels, texts, labels, chars(3, 3), cfg, {});
  CHECK(model.best_epoch == 0);
  const auto p = model.predict_proba(std::span<const std::string>(texts));
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t k = 0; k < 3; ++k) CHECK(p(i, k) == Catch::Approx(1.0 / 3.0).margin(1e-15));
}

TEST_CASE("a single repeated example is fitted exactly", "[train]") {
  const std::vector<std::string> texts(8, "you are vermin");
  const std::vector<int> labels(8, 0);
  TrainConfig cfg;
  cfg.max_epochs = 50;
  cfg.batch_size = 4;
  const auto features = FeatureSpec::from_name("ngram35");
  const auto model = train_text(texts, labels, texts, labels, features, cfg, {});
  const auto data = featurize_all(texts, labels, features);
  CHECK(model.accuracy(data) == 1.0);
  CHECK(model.probabilities(data.x[0])(0) > 0.5);
}

TEST_CASE("training is deterministic and rows are stochastic", "[train]") {
  forge::synthetic::SyntheticConfig sc;
  sc.size = 120;
  sc.seed = 3;
  const auto corpus = forge::synthetic::generate(sc);
  const auto texts = corpus.texts();
  const auto labels = corpus.labels();
  TrainConfig cfg;
  cfg.max_epochs = 5;
  cfg.seed = 11;
  const auto a = train_text(texts, labels, texts, labels, chars(3, 3), cfg, {});
  const auto b = train_text(texts, labels, texts, labels, chars(3, 3), cfg, {});
  CHECK(a.weights() == b.weights());
  CHECK(a.validation_accuracy == b.validation_accuracy);
  const auto p = a.predict_proba(std::span<const std::string>(texts));
  for (std::size_t i = 0; i < p.rows(); ++i) {
    const double s = p(i, 0) + p(i, 1) + p(i, 2);
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
}

TEST_CASE("keyword-separable synthetic data is learned", "[train]") {
  forge::synthetic::SyntheticConfig sc;
  sc.size = 400;
  sc.seed = 21;
  const auto corpus = forge::synthetic::generate(sc);
  const auto texts = corpus.texts();
  const auto labels = corpus.labels();
  const std::span<const std::string> tr(texts.data(), 270), va(texts.data() + 270, 30),
      te(texts.data() + 300, 100);
  const std::span<const int> ytr(labels.data(), 270), yva(labels.data() + 270, 30),
      yte(labels.data() + 300, 100);
  const auto model = train_text(tr, ytr, va, yva, FeatureSpec::from_name("word1"), {},
                                forge::datasets::class_weights(ytr));
  const auto test = featurize_all(te, yte, model.features());
  CHECK(model.accuracy(test) > 0.9);
}

TEST_CASE("raising a class weight does not lower its training recall", "[weights]") {
  // 60 examples over a tiny shared vocabulary with overlapping classes, so
  // the unweighted optimum misclassifies part of the minority class.
  forge::Rng rng(8);
  const std::vector<std::string> words{"red", "blue", "green", "dark", "light"};
  std::vector<std::string> texts;
  std::vector<int> labels;
  for (int i = 0; i < 60; ++i) {
    const int y = i < 10 ? 0 : (i < 40 ? 1 : 2);
    std::string t = words[static_cast<std::size_t>(y)];
    for (int k = 0; k < 3; ++k) t += " " + words[rng.below(words.size())];
    if (rng.uniform() < 0.5) t = words[rng.below(words.size())] + " " + words[rng.below(words.size())];
    texts.push_back(t);
    labels.push_back(y);
  }
  const auto features = FeatureSpec::from_name("word1");
  const auto data = featurize_all(texts, labels, features);
  TrainConfig cfg;
  cfg.max_epochs = 300;
  cfg.patience = 300;
  cfg.batch_size = 60;
  cfg.learning_rate = 0.5;
  for (int k = 0; k < 3; ++k) {
    double previous = -1.0;
    for (double boost : {1.0, 2.0, 4.0, 8.0}) {
      std::array<double, 3> w{1.0, 1.0, 1.0};
      w[static_cast<std::size_t>(k)] = boost;
      const auto model = train(data, data, cfg, ClassWeights(w), kHashDim, features);
      const double r = recall(model, data, k);
      INFO("class " << k << " weight " << boost);
      CHECK(r >= previous);
      previous = r;
    }
  }
}

TEST_CASE("invalid configurations and divergence are reported", "[train]") {
  const std::vector<std::string> texts{"aaa bbb", "ccc ddd", "eee fff"};
  const std::vector<int> labels{0, 1, 2};
  TrainConfig bad;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = {};
  bad.learning_rate = -1.0;
  CHECK_THROWS_AS(train_text(texts, labels, texts, labels, chars(3, 3), bad, {}), Error);

  // Identical texts with conflicting labels have no separating solution, so
  // an enormous step keeps overshooting until the scores overflow.
  const std::vector<std::string> same{"aaa bbb", "aaa bbb", "aaa bbb"};
  const std::vector<int> mixed{0, 0, 1};
  TrainConfig huge;
  huge.learning_rate = 1e308;
  huge.max_epochs = 5;
  try {
    train_text(same, mixed, same, mixed, chars(3, 3), huge, {});
    FAIL("expected a numeric error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numeric);
  }
  const std::vector<std::string> none;
  const std::vector<int> no_labels;
  CHECK_THROWS_AS(train_text(none, no_labels, texts, labels, chars(3, 3), {}, {}), Error);
}

TEST_CASE("checkpoints round trip and reject other versions", "[checkpoint]") {
  forge::testing::ScratchDir dir("ckpt");
  const std::vector<std::string> texts{"good day sunshine", "you stupid jerk", "vermin scum"};
  const std::vector<int> labels{2, 1, 0};
  TrainConfig cfg;
  cfg.max_epochs = 3;
  const auto model = train_text(texts, labels, texts, labels, FeatureSpec::from_name("ngram33"),
                                cfg, {});
  model.save(dir / "m.bin");
  const auto back = SoftmaxModel::load(dir / "m.bin");
  CHECK(back.weights() == model.weights());
  CHECK(back.features() == model.features());
  CHECK(back.best_epoch == model.best_epoch);
  CHECK(back.config.seed == model.config.seed);

  auto bytes = forge::testing::slurp(dir / "m.bin");
  REQUIRE(bytes.size() > 12);
  bytes[8] = 9;  // format version field follows the 8-byte magic
  forge::testing::spit(dir / "v9.bin", bytes);
  try {
    SoftmaxModel::load(dir / "v9.bin");
    FAIL("expected a version error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Version);
  }
  forge::testing::spit(dir / "junk.bin", "not a model");
  CHECK_THROWS_AS(SoftmaxModel::load(dir / "junk.bin"), Error);
}
