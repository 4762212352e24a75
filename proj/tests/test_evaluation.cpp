#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "rankfusion/evaluation.hpp"
#include "test_support.hpp"

using namespace rankfusion;
using rftest::list;

using Ids = std::vector<std::string>;

namespace {

Qrels abc_qrels() {
  Qrels q;
  q.set("q", "A", 3);
  q.set("q", "B", 2);
  q.set("q", "C", 0);
  return q;
}

}  // namespace

TEST(Ndcg, HandExample) {
  const double expected = (3.0 + 7.0 / std::log2(3.0)) / (7.0 + 3.0 / std::log2(3.0));
  EXPECT_NEAR(ndcg_at_k(list({"B", "A", "C"}), abc_qrels(), 3), expected, 1e-12);
  EXPECT_NEAR(ndcg_at_k(list({"B", "A", "C"}), abc_qrels(), 3), 0.8340, 1e-4);
}

TEST(Ndcg, IdealAndZero) {
  EXPECT_DOUBLE_EQ(ndcg_at_k(list({"A", "B", "C"}), abc_qrels(), 10), 1.0);
  EXPECT_DOUBLE_EQ(ndcg_at_k(list({"A", "B", "C"}), abc_qrels(), 1), 1.0);
  Qrels zero;
  zero.set("q", "A", 0);
  EXPECT_EQ(ndcg_at_k(list({"A", "B"}), zero, 10), 0.0);
  EXPECT_THROW(ndcg_at_k(list({"A"}, "other"), abc_qrels(), 10), Error);
  EXPECT_THROW(ndcg_at_k(list({"A"}), abc_qrels(), 0), Error);
}

TEST(Ndcg, LinearGain) {
  const double expected = (2.0 + 3.0 / std::log2(3.0)) / (3.0 + 2.0 / std::log2(3.0));
  EXPECT_NEAR(ndcg_at_k(list({"B", "A", "C"}), abc_qrels(), 3, GainMode::Linear), expected, 1e-12);
}

TEST(Ndcg, ZeroGradeTailDoesNotMatter) {
  Qrels q;
  q.set("q", "A", 2);
  q.set("q", "B", 1);
  const auto base = list({"B", "X", "A", "Y", "Z", "W"});
  const double v = ndcg_at_k(base, q, 3);
  EXPECT_DOUBLE_EQ(ndcg_at_k(list({"B", "X", "A", "W", "Z", "Y"}), q, 3), v);
}

TEST(KendallTau, Examples) {
  EXPECT_EQ(kendall_tau_distance(list({"A", "B", "C"}), list({"A", "B", "C"})), 0.0);
  EXPECT_EQ(kendall_tau_distance(list({"A", "B", "C", "D"}), list({"D", "C", "B", "A"})), 1.0);
  EXPECT_NEAR(kendall_tau_distance(list({"A", "B", "C"}), list({"B", "A", "C"})), 1.0 / 3.0, 1e-15);
  try {
    kendall_tau_distance(list({"A", "B"}), list({"A", "C"}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InconsistentUniverse);
  }
}

TEST(KendallTau, MetricProperties) {
  std::mt19937 rng(13);
  const auto ids = rftest::make_ids(7);
  const auto random_list = [&] {
    auto l = ids;
    std::shuffle(l.begin(), l.end(), rng);
    return list(l);
  };
  for (int trial = 0; trial < 500; ++trial) {
    const auto x = random_list(), y = random_list(), z = random_list();
    EXPECT_DOUBLE_EQ(kendall_tau_distance(x, y), kendall_tau_distance(y, x));
    EXPECT_EQ(kendall_tau_distance(x, y) == 0.0, x == y);
    EXPECT_LE(kendall_tau_distance(x, z), kendall_tau_distance(x, y) + kendall_tau_distance(y, z) + 1e-12);
  }
}

TEST(AvgKendallTau, Examples) {
  const auto l = list({"A", "B", "C", "D"});
  EXPECT_EQ(avg_kendall_tau({{"q", {l, l, l}}}), 0.0);
  EXPECT_EQ(avg_kendall_tau({{"q", {l, invert_ranking(l)}}}), 1.0);
  EXPECT_NEAR(avg_kendall_tau({{"q", {l, l, invert_ranking(l)}}}), 2.0 / 3.0, 1e-15);
  try {
    avg_kendall_tau({{"q", {l, l}}, {"r", {list({"A"}, "r")}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MismatchedCounts);
  }
}

TEST(Qrels, Parse) {
  std::istringstream in("19335 0 D123 2\n\n19335 0 D9 0\n");
  const auto q = parse_qrels(in);
  EXPECT_EQ(q.grade("19335", "D123"), 2);
  EXPECT_EQ(q.grade("19335", "unjudged"), 0);
  std::istringstream bad("19335 0 D1 1\n19335 D123\n");
  try {
    parse_qrels(bad, "bad.qrels");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.source(), "bad.qrels");
  }
  std::istringstream out_of_range("q 0 d 7\n");
  EXPECT_THROW(parse_qrels(out_of_range), ParseError);
}

TEST(RunFile, RoundTrip) {
  const std::vector<RankingList> rankings{list({"d3", "d1", "d2"}, "q2"), list({"x", "y"}, "q1")};
  const auto text = format_run(rankings, "tag");
  EXPECT_EQ(text.substr(0, text.find('\n')), "q2 Q0 d3 1 3 tag");
  std::istringstream in(text);
  EXPECT_EQ(read_run(in), rankings);
}

TEST(RunFile, SortsByRankAndRejectsJunk) {
  std::istringstream shuffled("q Q0 b 2 1 t\nq Q0 a 1 2 t\n");
  EXPECT_EQ(read_run(shuffled)[0].order(), (Ids{"a", "b"}));
  std::istringstream short_line("q Q0 a 1 t\n");
  EXPECT_THROW(read_run(short_line), ParseError);
  std::istringstream dup("q Q0 a 1 2 t\nq Q0 a 2 1 t\n");
  EXPECT_THROW(read_run(dup), ParseError);
}
