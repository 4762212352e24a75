#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rankfusion/analysis.hpp"
#include "rankfusion/sim_oracle.hpp"
#include "rankfusion/sorting.hpp"
#include "test_support.hpp"

using namespace rankfusion;
using rftest::record;
using PO = PreferenceOutcome;

namespace {

TriadCensus census_of(const std::vector<PreferenceRecord>& records, std::size_t n) {
  return triad_census(build_tournament(records, n));
}

TriadCensus expect(std::uint64_t circular, std::uint64_t t1, std::uint64_t t2, std::uint64_t triads = 1) {
  return TriadCensus{circular, t1, t2, circular + t1 + t2, triads};
}

PreferenceRecord raw(std::string i, std::string j, Choice fwd, Choice bwd) {
  return combine_judgments(std::move(i), std::move(j), DirectionalResult::from_text_choice(fwd),
                           DirectionalResult::from_text_choice(bwd), false);
}

}  // namespace

TEST(Tournament, Edges) {
  auto g = build_tournament(std::vector{record("A", "B", PO::FirstPreferred), record("B", "C", PO::FirstPreferred),
                                        record("A", "C", PO::FirstPreferred)},
                            3);
  EXPECT_EQ(g.strict_edges().size(), 3u);
  EXPECT_EQ(g.tie_edges().size(), 0u);
  g = build_tournament(std::vector{record("A", "B", PO::FirstPreferred), record("B", "C", PO::Tie),
                                   record("C", "A", PO::SecondPreferred)},
                       3);
  EXPECT_EQ(g.strict_edges().size(), 2u);
  EXPECT_EQ(g.tie_edges().size(), 1u);
}

TEST(Tournament, Errors) {
  const auto kind = [](const std::vector<PreferenceRecord>& rs, std::size_t n) {
    try {
      build_tournament(rs, n);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::InvalidArgument;
  };
  EXPECT_EQ(kind({record("A", "B", PO::Tie), record("B", "C", PO::Tie)}, 3), ErrorKind::IncompletePairSet);
  EXPECT_EQ(kind({record("A", "B", PO::Tie), record("B", "A", PO::Tie), record("B", "C", PO::Tie)}, 3),
            ErrorKind::DuplicatePair);
}

TEST(Census, CaptionPatterns) {
  EXPECT_EQ(census_of({record("A", "B", PO::FirstPreferred), record("B", "C", PO::FirstPreferred),
                       record("C", "A", PO::FirstPreferred)},
                      3),
            expect(1, 0, 0));
  // A = B, B = C, C > A.
  EXPECT_EQ(census_of({record("A", "B", PO::Tie), record("B", "C", PO::Tie), record("C", "A", PO::FirstPreferred)}, 3),
            expect(0, 1, 0));
  // A = B, A > C, C > B.
  EXPECT_EQ(census_of({record("A", "B", PO::Tie), record("A", "C", PO::FirstPreferred),
                       record("C", "B", PO::FirstPreferred)},
                      3),
            expect(0, 0, 1));
}

TEST(Census, ConsistentGraphs) {
  const auto ids = rftest::make_ids(12);
  const auto transitive = allpair_rank(rftest::list(ids), rftest::LatentOracle(ids)).trace.records;
  EXPECT_EQ(census_of(transitive, 12), expect(0, 0, 0, 220));
  const auto ties = allpair_rank(rftest::list(ids), rftest::EdgeOracle{}).trace.records;
  EXPECT_EQ(census_of(ties, 12), expect(0, 0, 0, 220));
  // One tie with the third node on the same side of both is consistent.
  EXPECT_EQ(census_of({record("A", "B", PO::Tie), record("A", "C", PO::FirstPreferred),
                       record("B", "C", PO::FirstPreferred)},
                      3),
            expect(0, 0, 0));
}

TEST(Census, RelabelingInvariant) {
  std::mt19937 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto ids = rftest::make_ids(9);
    std::vector<PreferenceRecord> records;
    std::vector<PreferenceRecord> renamed;
    for (std::size_t a = 0; a < ids.size(); ++a) {
      for (std::size_t b = a + 1; b < ids.size(); ++b) {
        const auto o = static_cast<PO>(rng() % 3);
        records.push_back(record(ids[a], ids[b], o));
        renamed.push_back(record("n" + std::to_string(8 - a), "n" + std::to_string(8 - b), o));
      }
    }
    EXPECT_EQ(census_of(records, 9), census_of(renamed, 9));
  }
}

TEST(Census, MaximumForHundredNodesIsBelowTriadCount) {
  EXPECT_EQ(triad_count(100), 161700u);
  EXPECT_LT(kMaxInconsistentTriads100, triad_count(100));
}

TEST(Census, NoisySimShowsCycles) {
  const auto gen = sim::generate_corpus(30, 3);
  const sim::SimOracle noisy(gen.synthetic.corpus, {0.0, 5.0, 1.0}, 3, true);
  const auto records = allpair_rank(initial_ranking("q", gen.synthetic.corpus), noisy).trace.records;
  EXPECT_GT(census_of(records, 30).circular, 0u);
}

TEST(OrderInconsistency, Rates) {
  using C = Choice;
  EXPECT_EQ(order_inconsistency_rate(std::vector{raw("A", "B", C::A, C::B), raw("A", "C", C::B, C::A)}), 0.0);
  EXPECT_EQ(order_inconsistency_rate(std::vector{raw("A", "B", C::A, C::A), raw("A", "C", C::B, C::B)}), 1.0);
  EXPECT_NEAR(order_inconsistency_rate(std::vector{raw("A", "B", C::A, C::A), raw("A", "C", C::A, C::B),
                                                   raw("B", "C", C::B, C::A)}),
              1.0 / 3.0, 1e-15);
  // Repeats of a pair count once.
  EXPECT_EQ(order_inconsistency_rate(std::vector{raw("A", "B", C::A, C::A), raw("B", "A", C::A, C::B)}), 1.0);
  try {
    order_inconsistency_rate(std::vector<PreferenceRecord>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingRawResults);
  }
}

TEST(ChoiceLogits, Examples) {
  std::vector<DirectionalResult> one{DirectionalResult::from_logits(0.4, -0.4)};
  auto s = mean_choice_logits(one);
  EXPECT_DOUBLE_EQ(s.mean_logit_a, 0.4);
  EXPECT_DOUBLE_EQ(s.mean_logit_b, -0.4);
  EXPECT_NEAR(s.discrepancy, std::tanh(-0.4), 1e-15);
  EXPECT_NEAR(s.discrepancy, -0.380, 1e-3);

  std::vector<DirectionalResult> two{DirectionalResult::from_logits(1, 0), DirectionalResult::from_logits(0, 1)};
  s = mean_choice_logits(two);
  EXPECT_DOUBLE_EQ(s.mean_logit_a, 0.5);
  EXPECT_DOUBLE_EQ(s.discrepancy, 0.0);

  std::vector<DirectionalResult> gpt{DirectionalResult::from_logits(-4.54, -5.23)};
  EXPECT_NEAR(mean_choice_logits(gpt).discrepancy, -0.33, 0.01);

  std::vector<DirectionalResult> text{DirectionalResult::from_text_choice(Choice::A)};
  EXPECT_THROW(mean_choice_logits(text), Error);
}

TEST(ChoiceLogits, RecordsUseBothDirections) {
  PreferenceRecord r = record("A", "B", PO::Tie);
  r.raw_forward = DirectionalResult::from_logits(1.0, 0.0);
  r.raw_backward = DirectionalResult::from_logits(3.0, 0.0);
  const auto s = mean_choice_logits(std::vector{r});
  EXPECT_DOUBLE_EQ(s.mean_logit_a, 2.0);
  EXPECT_EQ(s.calls, 2u);
}
