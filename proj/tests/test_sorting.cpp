#include <algorithm>
#include <random>

#include <gtest/gtest.h>

#include "rankfusion/sorting.hpp"
#include "test_support.hpp"

using namespace rankfusion;
using rftest::EdgeOracle;
using rftest::LatentOracle;
using rftest::list;

using Ids = std::vector<std::string>;

TEST(Bubble, SortedInputOnePass) {
  const Ids latent{"A", "B", "C", "D", "E"};
  const auto [out, trace] = bubble_sort(list(latent), LatentOracle(latent));
  EXPECT_EQ(out.order(), latent);
  EXPECT_EQ(trace.oracle_calls, 4u);
}

TEST(Bubble, ReversedInput) {
  const Ids latent{"A", "B", "C", "D"};
  const auto [out, trace] = bubble_sort(list({"D", "C", "B", "A"}), LatentOracle(latent));
  EXPECT_EQ(out.order(), latent);
  EXPECT_EQ(trace.oracle_calls, 6u);
}

TEST(Bubble, ThreeCycleDependsOnInitialOrder) {
  const EdgeOracle cycle{{{"A", "B"}, {"B", "C"}, {"C", "A"}}};
  const auto from_abc = bubble_sort(list({"A", "B", "C"}), cycle).first;
  const auto from_cba = bubble_sort(list({"C", "B", "A"}), cycle).first;
  EXPECT_EQ(from_abc.order(), (Ids{"A", "B", "C"}));
  EXPECT_EQ(from_cba.order(), (Ids{"C", "A", "B"}));
  EXPECT_NE(from_abc, from_cba);
}

TEST(Bubble, FourCycleHandTraces) {
  const auto oracle = rftest::four_cycle_oracle();
  EXPECT_EQ(bubble_sort(list({"C", "D", "B", "A"}), oracle).first.order(), (Ids{"C", "D", "A", "B"}));
  EXPECT_EQ(bubble_sort(list({"B", "A", "D", "C"}), oracle).first.order(), (Ids{"A", "B", "C", "D"}));
}

TEST(Bubble, TiesNeverSwap) {
  const EdgeOracle all_ties{};
  const Ids order{"x", "y", "z", "w"};
  const auto [out, trace] = bubble_sort(list(order), all_ties);
  EXPECT_EQ(out.order(), order);
  EXPECT_EQ(trace.oracle_calls, 3u);
}

TEST(Bubble, MemoReusesEarlierJudgments) {
  // With memoization the oracle sees each unordered pair at most once.
  std::mt19937 rng(5);
  auto ids = rftest::make_ids(30);
  const LatentOracle oracle(ids);
  std::shuffle(ids.begin(), ids.end(), rng);
  const auto memo = bubble_sort(list(ids), oracle, {true}).second;
  const auto plain = bubble_sort(list(ids), oracle, {false}).second;
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& r : memo.records) pairs.emplace(std::min(r.i, r.j), std::max(r.i, r.j));
  EXPECT_EQ(pairs.size(), memo.records.size());
  EXPECT_LE(memo.oracle_calls, plain.oracle_calls);
}

TEST(Heap, SmallCases) {
  const auto [one, t1] = heap_sort(list({"A"}), LatentOracle({"A"}));
  EXPECT_EQ(one.order(), (Ids{"A"}));
  EXPECT_EQ(t1.oracle_calls, 0u);

  const Ids latent{"A", "B", "C"};
  Ids perm = latent;
  do {
    const auto [out, trace] = heap_sort(list(perm), LatentOracle(latent));
    EXPECT_EQ(out.order(), latent);
    EXPECT_LE(trace.oracle_calls, 6u);
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST(Heap, HundredPassagesCallBudget) {
  std::mt19937 rng(9);
  const auto latent = rftest::make_ids(100);
  for (int trial = 0; trial < 10; ++trial) {
    auto ids = latent;
    std::shuffle(ids.begin(), ids.end(), rng);
    for (bool memo : {true, false}) {
      const auto [out, trace] = heap_sort(list(ids), LatentOracle(latent), {memo});
      EXPECT_EQ(out.order(), latent);
      EXPECT_GE(trace.oracle_calls, 800u);
      EXPECT_LE(trace.oracle_calls, 1200u);
    }
  }
}

TEST(Sorts, ConsistentOracleRecoversLatentOrder) {
  std::mt19937 rng(1);
  for (std::size_t m : {1u, 2u, 3u, 7u, 16u, 41u}) {
    const auto latent = rftest::make_ids(m);
    for (int trial = 0; trial < 20; ++trial) {
      auto ids = latent;
      std::shuffle(ids.begin(), ids.end(), rng);
      const auto b = bubble_sort(list(ids), LatentOracle(latent));
      const auto h = heap_sort(list(ids), LatentOracle(latent));
      EXPECT_EQ(b.first.order(), latent);
      EXPECT_EQ(h.first.order(), latent);
      EXPECT_LE(b.second.oracle_calls, m * (m - 1) / 2);
    }
  }
}

TEST(Sorts, ArbitraryOracleStillYieldsPermutation) {
  std::mt19937_64 rng(77);
  const auto ids = rftest::make_ids(12);
  for (int trial = 0; trial < 50; ++trial) {
    const std::uint64_t salt = rng();
    // Arbitrary, possibly cyclic and order-dependent verdicts.
    const auto chaos = [salt](const std::string& i, const std::string& j) {
      const auto h = std::hash<std::string>{}(i + "|" + j) ^ salt;
      return rftest::record(i, j, static_cast<PreferenceOutcome>(h % 3));
    };
    for (auto algo : {SortAlgorithm::Bubblesort, SortAlgorithm::Heapsort, SortAlgorithm::Allpair}) {
      for (bool memo : {true, false}) {
        const auto [out, trace] = run_ranker(algo, list(ids), chaos, {memo});
        auto sorted = out.order();
        std::sort(sorted.begin(), sorted.end());
        auto expected = ids;
        std::sort(expected.begin(), expected.end());
        EXPECT_EQ(sorted, expected);
        // Determinism.
        EXPECT_EQ(run_ranker(algo, list(ids), chaos, {memo}).first, out);
      }
    }
  }
}

TEST(Allpair, Examples) {
  const Ids abc{"A", "B", "C"};
  auto r = allpair_rank(list({"C", "A", "B"}), LatentOracle(abc));
  EXPECT_EQ(r.ranking.order(), abc);
  EXPECT_EQ(r.trace.oracle_calls, 3u);
  EXPECT_DOUBLE_EQ(r.matrix.score("A"), 2.0);
  EXPECT_DOUBLE_EQ(r.matrix.score("B"), 1.0);
  EXPECT_DOUBLE_EQ(r.matrix.score("C"), 0.0);

  r = allpair_rank(list({"B", "C", "A"}), EdgeOracle{});
  EXPECT_EQ(r.ranking.order(), (Ids{"B", "C", "A"}));
  EXPECT_DOUBLE_EQ(r.matrix.score("A"), 1.0);

  r = allpair_rank(list(abc), EdgeOracle{{{"A", "B"}, {"B", "C"}, {"C", "A"}}});
  EXPECT_EQ(r.ranking.order(), abc);
  for (const auto& id : abc) EXPECT_DOUBLE_EQ(r.matrix.score(id), 1.0);
}

TEST(HardList, Examples) {
  const Ids abc{"A", "B", "C"};
  EXPECT_EQ(make_hard_list(list(abc), LatentOracle(abc)).order(), (Ids{"C", "B", "A"}));
  EXPECT_EQ(make_hard_list(list({"A", "B"}), LatentOracle({"A", "B"})).order(), (Ids{"B", "A"}));
  const auto hard = make_hard_list(list({"B", "C", "A"}), LatentOracle(abc));
  EXPECT_EQ(bubble_sort(hard, LatentOracle(abc)).first.order(), abc);
}

TEST(Oracle, FailureKeepsPartialTrace) {
  int calls = 0;
  const auto flaky = [&calls](const std::string& i, const std::string& j) {
    if (++calls == 3) throw Error(ErrorKind::Timeout, "endpoint timed out");
    return rftest::record(i, j, PreferenceOutcome::FirstPreferred);
  };
  try {
    bubble_sort(list({"A", "B", "C", "D"}), flaky);
    FAIL();
  } catch (const SortError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Timeout);
    EXPECT_EQ(e.partial_trace().records.size(), 2u);
  }
}

TEST(Oracle, ReplayAnswersBothOrders) {
  const Ids abc{"A", "B", "C"};
  const auto r = allpair_rank(list(abc), LatentOracle(abc));
  const ReplayOracle replay(r.trace.records);
  EXPECT_EQ(replay("C", "A").outcome, PreferenceOutcome::SecondPreferred);
  EXPECT_EQ(bubble_sort(list({"C", "B", "A"}), replay).first.order(), abc);
  EXPECT_THROW(replay("A", "Z"), Error);
}

TEST(Algorithm, Names) {
  EXPECT_EQ(sort_algorithm_from_string("bubble"), SortAlgorithm::Bubblesort);
  EXPECT_EQ(sort_algorithm_from_string(to_string(SortAlgorithm::Heapsort)), SortAlgorithm::Heapsort);
  EXPECT_THROW(sort_algorithm_from_string("quick"), Error);
}
