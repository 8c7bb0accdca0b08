// Acceptance suite. Prints one PASS, FAIL or SKIP line per criterion and
// exits non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/baselines.hpp"
#include "forge/datasets.hpp"
#include "forge/ensemble.hpp"
#include "forge/error.hpp"
#include "forge/experiment.hpp"
#include "forge/metrics.hpp"
#include "forge/preprocess.hpp"
#include "forge/synthetic.hpp"
#include "test_support.hpp"

namespace {

using namespace forge;
using Clock = std::chrono::steady_clock;

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome pass(std::string d) { return {Status::Pass, std::move(d)}; }
Outcome fail(std::string d) { return {Status::Fail, std::move(d)}; }
Outcome skip(std::string d) { return {Status::Skip, std::move(d)}; }

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// --- combiners --------------------------------------------------------------

Outcome combiner_oracle() {
  const auto start = Clock::now();
  Rng rng(20240601);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(20);
    const std::size_t m = 2 + rng.below(2);
    const bool grid = rng.below(2) == 0;
    std::vector<ProbabilityMatrix> ms;
    for (std::size_t j = 0; j < m; ++j)
      ms.push_back(testing::random_matrix(rng, n, grid, "m" + std::to_string(j)));
    if (ensemble::soft_vote(ms).labels != testing::oracle_soft(ms)) ++mismatches;
    if (ensemble::max_value(ms) != testing::oracle_max(ms)) ++mismatches;
    if (m == 3) {
      if (ensemble::hard_vote(ms) != testing::oracle_hard(ms)) ++mismatches;
    } else {
      // The reference answer for an even member count is a rejection.
      bool rejected = false;
      try {
        ensemble::hard_vote(ms);
      } catch (const Error& e) {
        rejected = e.kind() == ErrorKind::Precondition;
      }
      if (!rejected) ++mismatches;
    }
  }
  const double s = seconds_since(start);
  const std::string d = "1000 instances, " + std::to_string(mismatches) + " mismatches, " +
                        fmt("%.3f s", s);
  return mismatches == 0 && s < 5.0 ? pass(d) : fail(d);
}

Outcome hard_vote_exhaustive() {
  std::size_t checked = 0, wrong = 0;
  const double peaks[3] = {0.5, 0.6, 0.7};
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c) {
        const int votes[3] = {a, b, c};
        std::vector<ProbabilityMatrix> ms;
        for (int j = 0; j < 3; ++j) {
          ProbabilityMatrix::Storage v(1, 3);
          for (int k = 0; k < 3; ++k) v(0, k) = (1.0 - peaks[j]) / 2.0;
          v(0, votes[j]) = peaks[j];
          ms.emplace_back(v, "m" + std::to_string(j));
        }
        int expected;
        if (a == b || a == c) {
          expected = a;
        } else if (b == c) {
          expected = b;
        } else {
          expected = testing::oracle_soft(ms)[0];
        }
        ++checked;
        if (ensemble::hard_vote(ms) != std::vector<int>{expected}) ++wrong;
      }
  const std::string d = std::to_string(checked) + " triples, " + std::to_string(wrong) + " wrong";
  return wrong == 0 && checked == 27 ? pass(d) : fail(d);
}

// --- metrics ----------------------------------------------------------------

Outcome metrics_oracle() {
  const std::vector<int> t{0, 0, 1, 1, 2, 2}, p{0, 1, 1, 1, 2, 0};
  const auto s = metrics::macro_scores(metrics::confusion(t, p));
  // Per-class F1 (1/2, 4/5, 2/3) tallied by hand.
  const double f1 = (0.5 + 0.8 + 2.0 / 3.0) / 3.0;
  const bool six = std::abs(s.macro_f1 - 0.6556) <= 1e-4 && std::abs(s.accuracy - 0.6667) <= 1e-4 &&
                   std::abs(s.macro_f1 - f1) <= 1e-12;
  const auto perfect = metrics::macro_scores(metrics::confusion(t, t));
  bool ones = perfect.accuracy == 1.0 && perfect.macro_f1 == 1.0 &&
              perfect.macro_precision == 1.0 && perfect.macro_recall == 1.0;
  for (const auto& c : perfect.per_class)
    ones = ones && c.precision == 1.0 && c.recall == 1.0 && c.f1 == 1.0;
  const std::string d = "macro F1 " + fmt("%.4f", s.macro_f1) + ", accuracy " +
                        fmt("%.4f", s.accuracy) + (ones ? ", perfect = 1.0" : ", perfect != 1.0");
  return six && ones ? pass(d) : fail(d);
}

// --- gradient ---------------------------------------------------------------

Outcome gradient_check() {
  using baselines::FeatureVector;
  constexpr std::uint32_t dim = 16;
  double worst = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(derive_seed(77, seed));
    std::vector<FeatureVector> xs;
    std::vector<int> ys;
    for (int i = 0; i < 8; ++i) {
      std::vector<FeatureVector::Entry> pairs;
      for (int k = 0; k < 3; ++k)
        pairs.emplace_back(1 + static_cast<std::uint32_t>(rng.below(dim - 1)), 0.5 + rng.uniform());
      xs.push_back(FeatureVector::from_pairs(std::move(pairs)));
      ys.push_back(static_cast<int>(rng.below(3)));
    }
    Eigen::MatrixXd w(3, dim);
    for (Eigen::Index r = 0; r < 3; ++r)
      for (Eigen::Index c = 0; c < dim; ++c) w(r, c) = 2.0 * rng.uniform() - 1.0;
    const datasets::ClassWeights cw({0.5 + rng.uniform(), 0.5 + rng.uniform(), 0.5 + rng.uniform()});
    const auto g = baselines::weighted_cross_entropy_gradient(w, xs, ys, cw);
    const double h = 1e-5;
    for (Eigen::Index r = 0; r < 3; ++r)
      for (Eigen::Index c = 0; c < dim; ++c) {
        Eigen::MatrixXd up = w, down = w;
        up(r, c) += h;
        down(r, c) -= h;
        const double fd = (baselines::weighted_cross_entropy(up, xs, ys, cw) -
                           baselines::weighted_cross_entropy(down, xs, ys, cw)) /
                          (2 * h);
        worst = std::max(worst, std::abs(fd - g(r, c)));
      }
  }
  const std::string d = "5 instances, max abs diff " + fmt("%.2e", worst);
  return worst < 1e-6 ? pass(d) : fail(d);
}

// --- stacking audit ---------------------------------------------------------

Outcome leakage_audit() {
  synthetic::SyntheticConfig sc;
  sc.size = 300;
  sc.seed = 11;
  const auto corpus = synthetic::generate(sc);
  const auto texts = corpus.texts();
  const auto labels = corpus.labels();
  baselines::TrainConfig cfg;
  cfg.max_epochs = 10;
  const std::vector<ensemble::BaseLearner> learners{
      {"mlp", baselines::FeatureSpec::from_name("ngram33"), cfg},
      {"cnn", baselines::FeatureSpec::from_name("ngram35"), cfg},
      {"lstm", baselines::FeatureSpec::from_name("word1"), cfg}};
  const auto folds = ensemble::stratified_folds(labels, 3, 5);
  const auto model = ensemble::stack_train(learners, texts, labels, folds);
  const auto audit = ensemble::audit_out_of_fold(model, texts.size());
  const bool shape = model.z.rows() == 300 && model.z.cols() == 9;

  // The audit must also notice a fit that saw a row it predicted.
  auto tampered = model.records;
  tampered[0].trained_on.push_back(tampered[0].predicted.front());
  std::sort(tampered[0].trained_on.begin(), tampered[0].trained_on.end());
  const bool caught = !ensemble::audit_out_of_fold(tampered, 3, texts.size()).ok;

  std::string d = "z " + std::to_string(model.z.rows()) + "x" + std::to_string(model.z.cols()) +
                  ", " + std::to_string(model.records.size()) + " fits, " +
                  std::to_string(audit.violations.size()) + " violations" +
                  (caught ? ", injected leak detected" : ", injected leak missed");
  if (!audit.ok) d += ": " + audit.violations.front();
  return audit.ok && shape && caught ? pass(d) : fail(d);
}

// --- end to end -------------------------------------------------------------

Outcome end_to_end() {
  const auto start = Clock::now();
  synthetic::SyntheticConfig sc;
  sc.size = 400;
  sc.seed = 42;
  const auto corpus = datasets::normalize_corpus(synthetic::generate(sc), {});
  const auto plan = datasets::stratified_split(corpus, {0.675, 0.075, 0.25}, 42);
  experiment::ExperimentConfig config;
  config.seed = 42;
  const auto result = experiment::run(corpus.subset(plan.train), corpus.subset(plan.validation),
                                      corpus.subset(plan.test), config, "synthetic");
  const double s = seconds_since(start);

  std::ostringstream d;
  bool ok = s < 60.0 && result.stack_audit.ok;
  double min_member = 1.0, max_member = 0.0;
  for (const auto& h : experiment::default_heads()) {
    const double f1 = result.report(h.role).scores.macro_f1;
    min_member = std::min(min_member, f1);
    max_member = std::max(max_member, f1);
    d << h.role << " " << fmt("%.4f", f1) << ", ";
    ok = ok && f1 >= 0.90;
  }
  // Each aggregation is compared with the weakest of its own members.
  double worst_gap = 1.0;
  for (const auto& r : result.reports) {
    const auto dash = r.model.find('-');
    if (dash == std::string::npos) continue;
    const std::string rule = r.model.substr(dash + 1);
    if (rule == "stack") continue;
    const auto topology = ensemble::topology_from_name(r.model.substr(0, dash));
    double floor = 1.0;
    for (auto role : ensemble::topology_roles(topology))
      floor = std::min(floor, result.report(role).scores.macro_f1);
    worst_gap = std::min(worst_gap, r.scores.macro_f1 - (floor - 0.01));
    ok = ok && r.scores.macro_f1 >= floor - 0.01;
  }
  const double stack = result.report("EM4-stack").scores.macro_f1;
  ok = ok && stack >= max_member - 0.02;
  d << "stack " << fmt("%.4f", stack) << " (max member " << fmt("%.4f", max_member)
    << "), aggregation slack " << fmt("%.4f", worst_gap) << ", train/test "
    << plan.train.size() + plan.validation.size() << "/" << plan.test.size() << ", "
    << fmt("%.2f s", s);
  return ok ? pass(d.str()) : fail(d.str());
}

// --- preprocessing ----------------------------------------------------------

Outcome preprocess_goldens() {
  const auto& lex = *preprocess::Lexicon::builtin();
  std::size_t wrong = 0;
  if (preprocess::collapse_elongation("yeeessss", lex) != "yes") ++wrong;
  if (preprocess::segment_hashtag("notracism", lex) != std::vector<std::string>{"not", "racism"})
    ++wrong;
  const auto tagged = preprocess::normalize("#notracism");
  if (!tagged || tagged->text != "not racism") ++wrong;

  std::ifstream in(testing::fixture("preprocess_golden.jsonl"));
  std::string line;
  std::size_t cases = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    const auto got = preprocess::normalize(j.at("input").get<std::string>());
    const bool match = j.at("expected").is_null()
                           ? !got.has_value()
                           : got.has_value() && got->text == j.at("expected").get<std::string>();
    if (!match) ++wrong;
    ++cases;
  }

  // Idempotence over seeded random strings drawn from an alphabet rich in
  // the characters the pipeline rewrites.
  static const std::vector<std::string> alphabet = {
      "a", "e", "o", "s", "y", "n", "t", "Q", " ", " ", "#", "@", "_", "!", ".", ",", "'", ":",
      ")", "(", "<", "3", "-", "&", ";", "/", "h", "\t", "http://", "t.co/", "xd", ":-)",
      "\xF0\x9F\x98\x82", "\xE2\x9D\xA4", "\xC3\xA9", "\xE4\xB8\xAD", "\x80"};
  Rng rng(10000);
  std::size_t not_idempotent = 0, kept = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string s;
    const auto len = rng.below(30);
    for (std::uint64_t k = 0; k < len; ++k) s += alphabet[rng.below(alphabet.size())];
    const auto once = preprocess::normalize(s);
    if (!once) continue;
    ++kept;
    const auto twice = preprocess::normalize(once->text);
    if (!twice || twice->text != once->text) ++not_idempotent;
  }
  const std::string d = std::to_string(cases) + " golden cases + reference pairs, " +
                        std::to_string(wrong) + " wrong; fuzz 10000 strings (" +
                        std::to_string(kept) + " kept), " + std::to_string(not_idempotent) +
                        " not idempotent";
  return wrong == 0 && cases == 50 && not_idempotent == 0 ? pass(d) : fail(d);
}

// --- split ------------------------------------------------------------------

Outcome split_property() {
  Rng rng(555);
  double worst = 0.0;
  double worst_nominal = 0.0;
  std::size_t failures = 0;
  for (int corpus = 0; corpus < 100; ++corpus) {
    std::array<std::size_t, 3> counts{};
    std::vector<int> labels;
    for (int k = 0; k < 3; ++k) {
      counts[static_cast<std::size_t>(k)] = 10 + rng.below(300);
      labels.insert(labels.end(), counts[static_cast<std::size_t>(k)], k);
    }
    rng.shuffle(labels);
    const double test = 0.1 + 0.2 * rng.uniform();
    const double val = 0.1 + 0.1 * rng.uniform();
    const std::array<double, 3> ratios{1.0 - test - val, val, test};
    const auto plan = datasets::stratified_split(labels, ratios, rng.next());
    const std::vector<const std::vector<std::size_t>*> parts{&plan.train, &plan.validation,
                                                             &plan.test};
    const double n = static_cast<double>(labels.size());
    std::size_t covered = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      std::array<std::size_t, 3> got{};
      for (auto i : *parts[s]) ++got[static_cast<std::size_t>(labels[i])];
      covered += parts[s]->size();
      for (std::size_t k = 0; k < 3; ++k) {
        // The split's class proportion against the corpus proportion,
        // expressed in examples of that split.
        const double by_size =
            static_cast<double>(counts[k]) * static_cast<double>(parts[s]->size()) / n;
        const double dev = std::abs(static_cast<double>(got[k]) - by_size);
        worst = std::max(worst, dev);
        if (dev > 1.0) ++failures;
        const double by_ratio = static_cast<double>(counts[k]) * ratios[s];
        worst_nominal = std::max(worst_nominal, std::abs(static_cast<double>(got[k]) - by_ratio));
      }
    }
    if (covered != labels.size()) ++failures;
  }
  const std::string d = "100 corpora, max per-class deviation " + fmt("%.3f", worst) +
                        " examples (" + fmt("%.3f", worst_nominal) +
                        " against count x ratio), " + std::to_string(failures) + " violations";
  return failures == 0 ? pass(d) : fail(d);
}

// --- licensed corpora -------------------------------------------------------

Outcome loaders() {
  const char* d = std::getenv("FORGE_DAVIDSON");
  const char* h = std::getenv("FORGE_HATEVAL");
  const char* o = std::getenv("FORGE_OLID");
  if (!d && !h && !o) return skip("FORGE_DAVIDSON, FORGE_HATEVAL and FORGE_OLID not set");
  std::ostringstream msg;
  bool ok = true;
  if (d) {
    const auto c = datasets::load_davidson(d);
    const double frac = 100.0 * static_cast<double>(c.histogram()[0]) / static_cast<double>(c.size());
    ok = ok && c.size() == 24783 && std::abs(frac - 5.77) <= 0.01;
    msg << "davidson " << c.size() << " (hateful " << fmt("%.2f%%", frac) << ") ";
  } else {
    msg << "davidson skipped ";
  }
  if (h) {
    const auto c = datasets::load_hateval(h);
    ok = ok && c.size() == 13000;
    msg << "hateval " << c.size() << " ";
  } else {
    msg << "hateval skipped ";
  }
  if (o) {
    const auto c = datasets::load_olid(o);
    ok = ok && c.size() == 14100;
    msg << "olid " << c.size();
  } else {
    msg << "olid skipped";
  }
  return ok ? pass(msg.str()) : fail(msg.str());
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"combiner-oracle", combiner_oracle},
      {"hard-vote-exhaustive", hard_vote_exhaustive},
      {"metrics-oracle", metrics_oracle},
      {"gradient-check", gradient_check},
      {"stacking-leakage-audit", leakage_audit},
      {"end-to-end-synthetic", end_to_end},
      {"preprocess-goldens", preprocess_goldens},
      {"stratified-split", split_property},
      {"dataset-loaders", loaders},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = fail(std::string("exception: ") + e.what());
    }
    const char* tag = outcome.status == Status::Pass   ? "PASS"
                      : outcome.status == Status::Skip ? "SKIP"
                                                       : "FAIL";
    if (outcome.status == Status::Fail) ++failed;
    std::cout << tag << " " << name << ": " << outcome.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
