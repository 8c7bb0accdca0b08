#include <catch_amalgamated.hpp>

#include "forge/ensemble.hpp"
#include "forge/error.hpp"
#include "test_support.hpp"

using namespace forge::ensemble;
using forge::Error;
using forge::ErrorKind;
using forge::ProbabilityMatrix;

namespace {

ProbabilityMatrix rows(std::initializer_list<std::array<double, 3>> r, std::string name) {
  ProbabilityMatrix::Storage v(static_cast<Eigen::Index>(r.size()), 3);
  Eigen::Index i = 0;
  for (const auto& row : r) {
    for (Eigen::Index k = 0; k < 3; ++k) v(i, k) = row[static_cast<std::size_t>(k)];
    ++i;
  }
  return ProbabilityMatrix(std::move(v), std::move(name));
}

ProbabilityMatrix one_hot(std::vector<int> labels, std::string name) {
  ProbabilityMatrix::Storage v = ProbabilityMatrix::Storage::Zero(
      static_cast<Eigen::Index>(labels.size()), 3);
  for (std::size_t i = 0; i < labels.size(); ++i) v(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  return ProbabilityMatrix(std::move(v), std::move(name));
}

MatrixRegistry three_heads() {
  MatrixRegistry reg;
  reg.emplace("mlp", rows({{0.6, 0.3, 0.1}}, "bert-mlp"));
  reg.emplace("cnn", rows({{0.2, 0.5, 0.3}}, "bert-cnn"));
  reg.emplace("lstm", rows({{0.1, 0.1, 0.8}}, "bert-lstm"));
  return reg;
}

}  // namespace

TEST_CASE("soft vote worked examples", "[soft]") {
  const std::vector<ProbabilityMatrix> pair{rows({{0.6, 0.3, 0.1}}, "a"),
                                            rows({{0.2, 0.5, 0.3}}, "b")};
  const auto r = soft_vote(pair);
  CHECK(r.averaged(0, 0) == Catch::Approx(0.4));
  CHECK(r.averaged(0, 1) == Catch::Approx(0.4));
  CHECK(r.averaged(0, 2) == Catch::Approx(0.2));
  CHECK(r.labels == std::vector<int>{0});

  const std::vector<ProbabilityMatrix> corners{rows({{1, 0, 0}}, "a"), rows({{0, 0, 1}}, "b")};
  const auto c = soft_vote(corners);
  CHECK(c.averaged(0, 0) == 0.5);
  CHECK(c.averaged(0, 1) == 0.0);
  CHECK(c.averaged(0, 2) == 0.5);
  CHECK(c.labels == std::vector<int>{0});
}

TEST_CASE("soft vote of identical members is the identity", "[soft]") {
  forge::Rng rng(4);
  const auto m = forge::testing::random_matrix(rng, 30, false);
  const std::vector<ProbabilityMatrix> same{m, m, m};
  const auto r = soft_vote(same);
  CHECK(r.averaged.values().isApprox(m.values(), 1e-15));
  CHECK(r.labels == m.argmax_labels());
}

TEST_CASE("weighted soft vote", "[soft]") {
  const std::vector<ProbabilityMatrix> pair{rows({{0.6, 0.3, 0.1}}, "a"),
                                            rows({{0.2, 0.5, 0.3}}, "b")};
  const std::vector<double> w{1.0, 3.0};
  const auto r = soft_vote(pair, w);
  CHECK(r.averaged(0, 0) == Catch::Approx((0.6 + 3 * 0.2) / 4));
  CHECK(r.averaged(0, 1) == Catch::Approx((0.3 + 3 * 0.5) / 4));
  CHECK(r.labels == std::vector<int>{1});
  const std::vector<double> bad{1.0, 0.0};
  CHECK_THROWS_AS(soft_vote(pair, bad), Error);
}

TEST_CASE("soft vote is invariant under member permutation and weight scaling", "[soft]") {
  forge::Rng rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ProbabilityMatrix> ms;
    for (int j = 0; j < 3; ++j) ms.push_back(forge::testing::random_matrix(rng, 10, trial % 2 == 0));
    const std::vector<double> w{0.5, 1.5, 2.0};
    const std::vector<ProbabilityMatrix> perm{ms[2], ms[0], ms[1]};
    const std::vector<double> wp{2.0, 0.5, 1.5};
    const std::vector<double> scaled{5.0, 15.0, 20.0};
    const auto base = soft_vote(ms, w);
    CHECK(soft_vote(perm, wp).averaged.values().isApprox(base.averaged.values(), 1e-14));
    CHECK(soft_vote(ms, scaled).averaged.values().isApprox(base.averaged.values(), 1e-14));
  }
}

TEST_CASE("combiner input errors", "[errors]") {
  const std::vector<ProbabilityMatrix> single{rows({{0.6, 0.3, 0.1}}, "a")};
  CHECK_THROWS_AS(soft_vote(single), Error);
  const std::vector<ProbabilityMatrix> shapes{rows({{0.6, 0.3, 0.1}}, "a"),
                                              rows({{0.6, 0.3, 0.1}, {0.2, 0.2, 0.6}}, "b")};
  CHECK_THROWS_AS(soft_vote(shapes), Error);
  CHECK_THROWS_AS(max_value(shapes), Error);
  const std::vector<ProbabilityMatrix> invalid{rows({{0.6, 0.3, 0.1}}, "good"),
                                               rows({{0.6, 0.3, 0.2}}, "bert-bad")};
  try {
    soft_vote(invalid);
    FAIL("expected a row-sum error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::RowSum);
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("bert-bad"));
  }
}

TEST_CASE("max value worked examples", "[max]") {
  const std::vector<ProbabilityMatrix> a{rows({{0.6, 0.3, 0.1}}, "a"),
                                         rows({{0.2, 0.5, 0.3}}, "b")};
  CHECK(max_value(a) == std::vector<int>{0});
  const std::vector<ProbabilityMatrix> tie{rows({{0.5, 0.5, 0.0}}, "a"),
                                           rows({{0.5, 0.0, 0.5}}, "b")};
  CHECK(max_value(tie) == std::vector<int>{0});
  const std::vector<ProbabilityMatrix> late{rows({{0.4, 0.3, 0.3}}, "a"),
                                            rows({{0.1, 0.1, 0.8}}, "b")};
  CHECK(max_value(late) == std::vector<int>{2});
}

TEST_CASE("hard vote worked examples", "[hard]") {
  // Votes (1,1,2).
  const std::vector<ProbabilityMatrix> majority{rows({{0.1, 0.8, 0.1}}, "a"),
                                                rows({{0.3, 0.4, 0.3}}, "b"),
                                                rows({{0.0, 0.1, 0.9}}, "c")};
  CHECK(hard_vote(majority) == std::vector<int>{1});
  // Votes (0,1,2); the average is (0.3, 0.4, 0.3).
  const std::vector<ProbabilityMatrix> split{rows({{0.5, 0.4, 0.1}}, "a"),
                                             rows({{0.3, 0.6, 0.1}}, "b"),
                                             rows({{0.1, 0.2, 0.7}}, "c")};
  CHECK(hard_vote(split) == std::vector<int>{1});
  // Votes (2,2,2).
  const std::vector<ProbabilityMatrix> unanimous{rows({{0.1, 0.1, 0.8}}, "a"),
                                                 rows({{0.2, 0.2, 0.6}}, "b"),
                                                 rows({{0.3, 0.3, 0.4}}, "c")};
  CHECK(hard_vote(unanimous) == std::vector<int>{2});
}

TEST_CASE("hard vote rejects an even member count", "[hard]") {
  const std::vector<ProbabilityMatrix> two{rows({{0.6, 0.3, 0.1}}, "a"),
                                           rows({{0.2, 0.5, 0.3}}, "b")};
  try {
    hard_vote(two);
    FAIL("expected a precondition error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Precondition);
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("odd"));
  }
}

TEST_CASE("combiners agree with brute-force references", "[oracle]") {
  forge::Rng rng(1234);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.below(20);
    const std::size_t m = 2 + rng.below(2);
    std::vector<ProbabilityMatrix> ms;
    for (std::size_t j = 0; j < m; ++j)
      ms.push_back(forge::testing::random_matrix(rng, n, trial % 2 == 0, "m" + std::to_string(j)));
    CHECK(soft_vote(ms).labels == forge::testing::oracle_soft(ms));
    CHECK(max_value(ms) == forge::testing::oracle_max(ms));
    if (m == 3) CHECK(hard_vote(ms) == forge::testing::oracle_hard(ms));
  }
}

TEST_CASE("hard vote with explicit votes uses the fallback only on ties", "[hard]") {
  const auto fa = rows({{0.2, 0.7, 0.1}, {0.2, 0.7, 0.1}}, "a");
  const auto fb = rows({{0.2, 0.7, 0.1}, {0.2, 0.7, 0.1}}, "b");
  const auto fc = rows({{0.2, 0.7, 0.1}, {0.2, 0.7, 0.1}}, "c");
  const std::vector<ProbabilityMatrix> fallback{fa, fb, fc};
  const std::vector<std::vector<int>> votes{{0, 0}, {0, 1}, {2, 2}};
  CHECK(hard_vote(votes, fallback) == std::vector<int>{0, 1});
  const std::vector<std::vector<int>> bad{{0, 3}, {0, 1}, {2, 2}};
  CHECK_THROWS_AS(hard_vote(bad, fallback), Error);
}

TEST_CASE("topologies resolve their members", "[topology]") {
  const auto reg = three_heads();
  const auto em3 = build_em(Topology::EM3, Rule::Soft, reg);
  CHECK(em3.roles == std::vector<std::string>{"cnn", "lstm"});
  CHECK(em3.members == std::vector<std::string>{"bert-cnn", "bert-lstm"});
  CHECK(em3.member_weights == std::vector<double>{1.0, 1.0});
  CHECK(build_em(Topology::EM1, Rule::Max, reg).roles ==
        std::vector<std::string>{"mlp", "cnn"});
  CHECK(build_em(Topology::EM2, Rule::Soft, reg).roles ==
        std::vector<std::string>{"mlp", "lstm"});
  const auto em4 = build_em(Topology::EM4, Rule::Hard, reg);
  CHECK(em4.size() == 3);
  const auto selected = select_members(em4, reg);
  REQUIRE(selected.size() == 3);
  CHECK(selected[1].producer() == "bert-cnn");

  for (auto t : {Topology::EM1, Topology::EM2, Topology::EM3}) {
    try {
      build_em(t, Rule::Hard, reg);
      FAIL("expected an odd-count error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Precondition);
      CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("odd"));
    }
  }
  auto partial = reg;
  partial.erase("cnn");
  try {
    build_em(Topology::EM4, Rule::Soft, partial);
    FAIL("expected a missing-member error");
  } catch (const Error& e) {
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("cnn"));
  }
}

TEST_CASE("rule and topology names", "[topology]") {
  for (auto r : {Rule::Soft, Rule::Max, Rule::Hard, Rule::Stack})
    CHECK(rule_from_name(rule_name(r)) == r);
  for (auto t : {Topology::EM1, Topology::EM2, Topology::EM3, Topology::EM4})
    CHECK(topology_from_name(topology_name(t)) == t);
  CHECK_THROWS_AS(rule_from_name("median"), Error);
  CHECK_THROWS_AS(topology_from_name("EM5"), Error);
}

TEST_CASE("stack features concatenate member rows", "[stack]") {
  const std::vector<ProbabilityMatrix> ms{one_hot({0, 2}, "a"), one_hot({1, 1}, "b")};
  const auto z = stack_features(ms);
  REQUIRE(z.rows() == 2);
  REQUIRE(z.cols() == 6);
  Eigen::MatrixXd expected(2, 6);
  expected << 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 0;
  CHECK(z == expected);
}
