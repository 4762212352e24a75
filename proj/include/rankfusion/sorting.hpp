#pragma once

// Comparator-driven rankers. The oracle may be order-inconsistent and
// intransitive; every ranker still returns a valid permutation.

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rankfusion/comparator.hpp"
#include "rankfusion/core.hpp"

namespace rankfusion {

/// Judges the passage with id `i` against the passage with id `j`.
template <typename F>
concept PairwiseOracle = std::invocable<F&, const std::string&, const std::string&> &&
                         std::convertible_to<std::invoke_result_t<F&, const std::string&, const std::string&>,
                                             PreferenceRecord>;

using OracleFn = std::function<PreferenceRecord(const std::string&, const std::string&)>;

enum class SortAlgorithm { Bubblesort, Heapsort, Allpair };

inline std::string to_string(SortAlgorithm a) {
  switch (a) {
    case SortAlgorithm::Bubblesort: return "bubblesort";
    case SortAlgorithm::Heapsort: return "heapsort";
    case SortAlgorithm::Allpair: return "allpair";
  }
  return "bubblesort";
}

inline SortAlgorithm sort_algorithm_from_string(const std::string& s) {
  if (s == "bubblesort" || s == "bubble") return SortAlgorithm::Bubblesort;
  if (s == "heapsort" || s == "heap") return SortAlgorithm::Heapsort;
  if (s == "allpair") return SortAlgorithm::Allpair;
  throw Error(ErrorKind::InvalidArgument, "unknown algorithm '" + s + "'");
}

struct SortTrace {
  SortAlgorithm algorithm = SortAlgorithm::Bubblesort;
  std::size_t oracle_calls = 0;
  std::vector<PreferenceRecord> records;
};

struct SortOptions {
  // Reuse the first judgment of an unordered pair for the rest of the sort.
  bool memoize = true;
};

/// Raised when the oracle fails mid-sort; keeps everything judged so far.
class SortError : public Error {
 public:
  SortError(ErrorKind kind, const std::string& message, SortTrace partial)
      : Error(kind, message), partial_(std::move(partial)) {}
  const SortTrace& partial_trace() const noexcept { return partial_; }

 private:
  SortTrace partial_;
};

namespace detail {

template <PairwiseOracle Oracle>
class TracedOracle {
 public:
  TracedOracle(Oracle& oracle, SortAlgorithm algorithm, const SortOptions& options, std::size_t expected_calls = 0)
      : oracle_(oracle), options_(options) {
    trace_.algorithm = algorithm;
    trace_.records.reserve(std::min<std::size_t>(expected_calls, 1u << 16));
  }

  PreferenceOutcome operator()(const std::string& i, const std::string& j) {
    std::uint64_t key = 0;
    bool forward = true;
    if (options_.memoize) {
      const auto a = intern(i), b = intern(j);
      forward = a < b;
      key = forward ? (std::uint64_t(a) << 32 | b) : (std::uint64_t(b) << 32 | a);
      if (auto it = memo_.find(key); it != memo_.end()) {
        const auto& first = trace_.records[it->second];
        return first.i == i ? first.outcome : flip(first.outcome);
      }
    }
    PreferenceRecord record;
    try {
      record = std::invoke(oracle_, i, j);
    } catch (const Error& e) {
      throw SortError(e.kind(), e.what(), trace_);
    } catch (const std::exception& e) {
      throw SortError(ErrorKind::OracleFailure, e.what(), trace_);
    }
    if (options_.memoize) memo_.emplace(key, trace_.records.size());
    trace_.records.push_back(std::move(record));
    trace_.oracle_calls = trace_.records.size();
    return trace_.records.back().outcome;
  }

  SortTrace take_trace() { return std::move(trace_); }

 private:
  std::uint32_t intern(const std::string& id) {
    return ids_.try_emplace(id, static_cast<std::uint32_t>(ids_.size())).first->second;
  }

  Oracle& oracle_;
  SortOptions options_;
  SortTrace trace_;
  std::unordered_map<std::string, std::uint32_t> ids_;
  // Unordered pair of interned ids -> index of its first record.
  std::unordered_map<std::uint64_t, std::size_t> memo_;
};

}  // namespace detail

/// Bubblesort with back-to-front passes: each pass carries the preferred passage
/// of the unsettled suffix to its front, then the settled prefix grows by one.
/// Stops after the first pass without swaps. Ties never swap.
template <PairwiseOracle Oracle>
std::pair<RankingList, SortTrace> bubble_sort(const RankingList& initial, Oracle&& oracle,
                                              const SortOptions& options = {}) {
  const std::size_t m = initial.size();
  detail::TracedOracle<std::remove_reference_t<Oracle>> ask(oracle, SortAlgorithm::Bubblesort, options,
                                                           m * (m - (m > 0)) / 2);
  std::vector<std::string> order = initial.order();
  for (std::size_t settled = 0; settled + 1 < m; ++settled) {
    bool swapped = false;
    for (std::size_t k = m - 1; k > settled; --k) {
      if (ask(order[k - 1], order[k]) == PreferenceOutcome::SecondPreferred) {
        std::swap(order[k - 1], order[k]);
        swapped = true;
      }
    }
    if (!swapped) break;
  }
  return {RankingList::from_unique(initial.query_id(), std::move(order)), ask.take_trace()};
}

/// Heapsort over a max-heap keyed by preference. A tie never promotes a child.
template <PairwiseOracle Oracle>
std::pair<RankingList, SortTrace> heap_sort(const RankingList& initial, Oracle&& oracle,
                                            const SortOptions& options = {}) {
  detail::TracedOracle<std::remove_reference_t<Oracle>> ask(oracle, SortAlgorithm::Heapsort, options, 16 * initial.size());
  std::vector<std::string> heap = initial.order();
  const auto preferred = [&](std::size_t x, std::size_t y) {
    return ask(heap[x], heap[y]) == PreferenceOutcome::FirstPreferred;
  };
  const auto sift_down = [&](std::size_t root, std::size_t n) {
    while (true) {
      std::size_t largest = root;
      const std::size_t left = 2 * root + 1;
      const std::size_t right = left + 1;
      if (left < n && preferred(left, largest)) largest = left;
      if (right < n && preferred(right, largest)) largest = right;
      if (largest == root) return;
      std::swap(heap[root], heap[largest]);
      root = largest;
    }
  };
  const std::size_t m = heap.size();
  for (std::size_t k = m / 2; k-- > 0;) sift_down(k, m);
  for (std::size_t end = m; end-- > 1;) {
    std::swap(heap[0], heap[end]);
    sift_down(0, end);
  }
  // The array now runs from least to most preferred.
  std::reverse(heap.begin(), heap.end());
  return {RankingList::from_unique(initial.query_id(), std::move(heap)), ask.take_trace()};
}

/// All-pairs judgments over a fixed id list.
class PreferenceMatrix {
 public:
  PreferenceMatrix() = default;

  explicit PreferenceMatrix(std::vector<std::string> ids) : ids_(std::move(ids)) {
    const auto m = ids_.size();
    cells_.assign(m * m, kUnset);
    for (std::size_t k = 0; k < m; ++k) index_.emplace(ids_[k], k);
  }

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::vector<PreferenceRecord>& records() const noexcept { return records_; }

  void add(PreferenceRecord record) {
    const auto a = index_.at(record.i);
    const auto b = index_.at(record.j);
    cells_[a * ids_.size() + b] = static_cast<signed char>(record.outcome);
    cells_[b * ids_.size() + a] = static_cast<signed char>(flip(record.outcome));
    records_.push_back(std::move(record));
  }

  /// Outcome of `i` against `j`, from i's side.
  PreferenceOutcome outcome(const std::string& i, const std::string& j) const {
    const auto cell = cells_.at(index_.at(i) * ids_.size() + index_.at(j));
    if (cell == kUnset) throw Error(ErrorKind::IncompletePairSet, "pair (" + i + ", " + j + ") not judged");
    return static_cast<PreferenceOutcome>(cell);
  }

  /// 1 per win, 0.5 per tie.
  double score(const std::string& id) const {
    const auto a = index_.at(id);
    double s = 0.0;
    for (std::size_t b = 0; b < ids_.size(); ++b) {
      if (b == a) continue;
      const auto cell = cells_[a * ids_.size() + b];
      if (cell == static_cast<signed char>(PreferenceOutcome::FirstPreferred)) s += 1.0;
      if (cell == static_cast<signed char>(PreferenceOutcome::Tie)) s += 0.5;
    }
    return s;
  }

 private:
  static constexpr signed char kUnset = -1;
  std::vector<std::string> ids_;
  std::map<std::string, std::size_t> index_;
  std::vector<signed char> cells_;
  std::vector<PreferenceRecord> records_;
};

struct AllpairResult {
  RankingList ranking;
  PreferenceMatrix matrix;
  std::vector<double> scores;  // aligned with ranking order
  SortTrace trace;
};

/// Judges every unordered pair once and ranks by win count. Equal scores keep
/// their order from `initial`.
template <PairwiseOracle Oracle>
AllpairResult allpair_rank(const RankingList& initial, Oracle&& oracle) {
  const auto& ids = initial.order();
  if (ids.size() < 2) throw Error(ErrorKind::InvalidArgument, "allpair ranking needs at least two passages");
  detail::TracedOracle<std::remove_reference_t<Oracle>> ask(oracle, SortAlgorithm::Allpair, SortOptions{false},
                                                         ids.size() * (ids.size() - 1) / 2);
  for (std::size_t a = 0; a < ids.size(); ++a) {
    for (std::size_t b = a + 1; b < ids.size(); ++b) ask(ids[a], ids[b]);
  }
  AllpairResult result;
  result.trace = ask.take_trace();
  result.matrix = PreferenceMatrix(ids);
  for (const auto& r : result.trace.records) result.matrix.add(r);

  std::vector<std::pair<double, std::string>> scored;
  for (const auto& id : ids) scored.emplace_back(result.matrix.score(id), id);
  std::stable_sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  std::vector<std::string> order;
  for (auto& [s, id] : scored) {
    order.push_back(id);
    result.scores.push_back(s);
  }
  result.ranking = RankingList::from_unique(initial.query_id(), std::move(order));
  return result;
}

/// The reverse of the allpair ranking: relevant passages start at the back.
template <PairwiseOracle Oracle>
RankingList make_hard_list(const RankingList& initial, Oracle&& oracle) {
  return invert_ranking(allpair_rank(initial, std::forward<Oracle>(oracle)).ranking);
}

/// Dispatches to the ranker named by `algorithm`.
template <PairwiseOracle Oracle>
std::pair<RankingList, SortTrace> run_ranker(SortAlgorithm algorithm, const RankingList& initial, Oracle&& oracle,
                                             const SortOptions& options = {}) {
  switch (algorithm) {
    case SortAlgorithm::Bubblesort: return bubble_sort(initial, oracle, options);
    case SortAlgorithm::Heapsort: return heap_sort(initial, oracle, options);
    case SortAlgorithm::Allpair: {
      auto r = allpair_rank(initial, oracle);
      return {std::move(r.ranking), std::move(r.trace)};
    }
  }
  throw Error(ErrorKind::InvalidArgument, "unknown algorithm");
}

/// Adapts the prompting comparator to an id-level oracle.
inline OracleFn make_comparator_oracle(const Query& query, const Corpus& corpus, ComparatorConfig config,
                                       CompletionBackend& backend) {
  return [&query, &corpus, config = std::move(config), &backend](const std::string& i, const std::string& j) {
    return compare(query, corpus.at(i), corpus.at(j), config, backend);
  };
}

/// Answers from previously recorded judgments, flipping them when asked in reverse.
class ReplayOracle {
 public:
  explicit ReplayOracle(const std::vector<PreferenceRecord>& records) {
    for (const auto& r : records) by_pair_.emplace(std::pair{r.i, r.j}, r);
  }

  PreferenceRecord operator()(const std::string& i, const std::string& j) const {
    if (auto it = by_pair_.find({i, j}); it != by_pair_.end()) return it->second;
    if (auto it = by_pair_.find({j, i}); it != by_pair_.end()) return flip(it->second);
    throw Error(ErrorKind::IncompletePairSet, "no recorded judgment for (" + i + ", " + j + ")");
  }

 private:
  std::map<std::pair<std::string, std::string>, PreferenceRecord> by_pair_;
};

}  // namespace rankfusion
