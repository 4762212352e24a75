#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "rankfusion/error.hpp"

namespace rankfusion {

struct Passage {
  std::string id;
  std::string text;
  // Latent relevance, only carried by synthetic corpora.
  std::optional<double> relevance;
};

struct Query {
  std::string id;
  std::string text;
};

/// Candidate passages for one query. Ingestion order is the initial order.
class Corpus {
 public:
  Corpus() = default;

  explicit Corpus(std::vector<Passage> passages) : passages_(std::move(passages)) {
    index_.reserve(passages_.size());
    for (std::size_t k = 0; k < passages_.size(); ++k) {
      const auto& p = passages_[k];
      if (p.id.empty()) throw Error(ErrorKind::InvalidArgument, "passage id must be non-empty");
      if (p.text.empty()) throw Error(ErrorKind::InvalidArgument, "passage '" + p.id + "' has empty text");
      if (!index_.emplace(p.id, k).second) throw Error(ErrorKind::DuplicateId, "duplicate passage id '" + p.id + "'");
    }
  }

  std::size_t size() const noexcept { return passages_.size(); }
  bool empty() const noexcept { return passages_.empty(); }
  const std::vector<Passage>& passages() const noexcept { return passages_; }
  const Passage& operator[](std::size_t k) const { return passages_[k]; }

  bool contains(std::string_view id) const { return index_.find(std::string(id)) != index_.end(); }

  const Passage& at(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) throw Error(ErrorKind::InvalidArgument, "unknown passage id '" + std::string(id) + "'");
    return passages_[it->second];
  }

  std::size_t position(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) throw Error(ErrorKind::InvalidArgument, "unknown passage id '" + std::string(id) + "'");
    return it->second;
  }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    out.reserve(passages_.size());
    for (const auto& p : passages_) out.push_back(p.id);
    return out;
  }

 private:
  std::vector<Passage> passages_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// A total order over a query's candidates, most relevant first.
class RankingList {
 public:
  RankingList() = default;

  const std::string& query_id() const noexcept { return query_id_; }
  const std::vector<std::string>& order() const noexcept { return order_; }
  std::size_t size() const noexcept { return order_.size(); }
  const std::string& operator[](std::size_t k) const { return order_[k]; }

  friend bool operator==(const RankingList&, const RankingList&) = default;

  /// Checks only that `ids` has no repeats; the universe is whatever `ids` holds.
  static RankingList from_unique(std::string query_id, std::vector<std::string> ids) {
    std::unordered_set<std::string> seen;
    seen.reserve(ids.size());
    for (const auto& id : ids) {
      if (!seen.insert(id).second) throw Error(ErrorKind::DuplicateId, "id '" + id + "' repeats in ranking");
    }
    RankingList r;
    r.query_id_ = std::move(query_id);
    r.order_ = std::move(ids);
    return r;
  }

 private:
  std::string query_id_;
  std::vector<std::string> order_;
};

/// Validates that `ids` is a permutation of `universe`.
inline RankingList make_ranking_list(std::string query_id, std::vector<std::string> ids,
                                     std::span<const std::string> universe) {
  auto list = RankingList::from_unique(std::move(query_id), std::move(ids));
  std::unordered_set<std::string> expected(universe.begin(), universe.end());
  if (expected.size() != list.size()) {
    throw Error(ErrorKind::NotAPermutation, "ranking has " + std::to_string(list.size()) + " ids, universe has " +
                                                std::to_string(expected.size()));
  }
  for (const auto& id : list.order()) {
    if (!expected.contains(id)) throw Error(ErrorKind::NotAPermutation, "id '" + id + "' is not in the universe");
  }
  return list;
}

inline RankingList make_ranking_list(std::string query_id, std::vector<std::string> ids, const Corpus& corpus) {
  const auto universe = corpus.ids();
  return make_ranking_list(std::move(query_id), std::move(ids), universe);
}

/// The corpus in ingestion order.
inline RankingList initial_ranking(std::string query_id, const Corpus& corpus) {
  return RankingList::from_unique(std::move(query_id), corpus.ids());
}

inline RankingList invert_ranking(const RankingList& r) {
  std::vector<std::string> reversed(r.order().rbegin(), r.order().rend());
  return RankingList::from_unique(r.query_id(), std::move(reversed));
}

enum class PreferenceOutcome { FirstPreferred, SecondPreferred, Tie };

inline PreferenceOutcome flip(PreferenceOutcome o) {
  switch (o) {
    case PreferenceOutcome::FirstPreferred: return PreferenceOutcome::SecondPreferred;
    case PreferenceOutcome::SecondPreferred: return PreferenceOutcome::FirstPreferred;
    case PreferenceOutcome::Tie: return PreferenceOutcome::Tie;
  }
  return o;
}

inline PreferenceOutcome outcome_from_probability(double p) {
  if (p > 0.5) return PreferenceOutcome::FirstPreferred;
  if (p < 0.5) return PreferenceOutcome::SecondPreferred;
  return PreferenceOutcome::Tie;
}

enum class Choice { A, B };

/// One prompt's verdict: log-scores of the "A" and "B" choice tokens.
struct DirectionalResult {
  double logit_a = 0.0;
  double logit_b = 0.0;
  Choice chosen = Choice::A;
  // False when the backend returned text only; logits are then meaningless.
  bool has_logits = true;

  static DirectionalResult from_logits(double a, double b) {
    return DirectionalResult{a, b, a >= b ? Choice::A : Choice::B, true};
  }
  static DirectionalResult from_text_choice(Choice c) { return DirectionalResult{0.0, 0.0, c, false}; }

  friend bool operator==(const DirectionalResult&, const DirectionalResult&) = default;
};

/// One pairwise judgment of passage `i` against passage `j`.
///
/// `raw_forward` is the prompt with (A = i, B = j); `raw_backward` is (A = j, B = i).
struct PreferenceRecord {
  std::string i;
  std::string j;
  PreferenceOutcome outcome = PreferenceOutcome::Tie;
  std::optional<double> p_ij;
  DirectionalResult raw_forward;
  DirectionalResult raw_backward;

  friend bool operator==(const PreferenceRecord&, const PreferenceRecord&) = default;
};

/// The same judgment seen from j's side.
inline PreferenceRecord flip(const PreferenceRecord& r) {
  PreferenceRecord out;
  out.i = r.j;
  out.j = r.i;
  out.outcome = flip(r.outcome);
  if (r.p_ij) out.p_ij = 1.0 - *r.p_ij;
  out.raw_forward = r.raw_backward;
  out.raw_backward = r.raw_forward;
  return out;
}

/// Raw choices conflict when both prompts pick the same position.
inline bool raw_choices_conflict(const PreferenceRecord& r) { return r.raw_forward.chosen == r.raw_backward.chosen; }

}  // namespace rankfusion
