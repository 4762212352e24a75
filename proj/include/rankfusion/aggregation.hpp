#pragma once

// Borda-count fusion of fully ranked proposals, and the fusion pipeline that
// produces those proposals from several rank settings.

#include <algorithm>
#include <functional>
#include <future>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "rankfusion/core.hpp"
#include "rankfusion/sorting.hpp"

namespace rankfusion {

struct RankProposal {
  std::string source_label;
  RankingList ranking;
};

struct BordaScore {
  std::string passage_id;
  long long score = 0;
};

namespace detail {

inline void check_universe(const std::vector<RankProposal>& proposals) {
  if (proposals.empty()) throw Error(ErrorKind::InvalidArgument, "Borda aggregation needs at least one proposal");
  const auto& first = proposals.front().ranking;
  const std::set<std::string> universe(first.order().begin(), first.order().end());
  for (const auto& p : proposals) {
    if (p.ranking.query_id() != first.query_id()) {
      throw Error(ErrorKind::InconsistentUniverse, "proposal '" + p.source_label + "' ranks query '" +
                                                       p.ranking.query_id() + "', expected '" + first.query_id() + "'");
    }
    const std::set<std::string> ids(p.ranking.order().begin(), p.ranking.order().end());
    if (ids != universe) {
      throw Error(ErrorKind::InconsistentUniverse, "proposal '" + p.source_label + "' ranks a different id set");
    }
  }
}

}  // namespace detail

/// B(d) = sum over proposals of (m - rank), rank 1-based. Keyed by passage id.
inline std::map<std::string, BordaScore> borda_scores(const std::vector<RankProposal>& proposals) {
  detail::check_universe(proposals);
  std::map<std::string, BordaScore> out;
  for (const auto& p : proposals) {
    const auto m = static_cast<long long>(p.ranking.size());
    for (std::size_t pos = 0; pos < p.ranking.size(); ++pos) {
      auto& entry = out[p.ranking[pos]];
      entry.passage_id = p.ranking[pos];
      entry.score += m - static_cast<long long>(pos + 1);
    }
  }
  return out;
}

/// Two adjacent passages in the aggregate whose scores were equal.
struct BordaTieBreak {
  std::string ahead;
  std::string behind;
  long long score = 0;
};

struct BordaAggregate {
  RankingList ranking;
  std::vector<BordaScore> scores;  // aligned with ranking order
  std::vector<BordaTieBreak> tie_breaks;
};

/// Descending Borda score; equal scores keep the first proposal's order.
inline BordaAggregate aggregate_borda_detailed(const std::vector<RankProposal>& proposals) {
  const auto scores = borda_scores(proposals);
  const auto& first = proposals.front().ranking;
  std::vector<BordaScore> ordered;
  ordered.reserve(first.size());
  for (const auto& id : first.order()) ordered.push_back(scores.at(id));
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const BordaScore& a, const BordaScore& b) { return a.score > b.score; });
  BordaAggregate out;
  std::vector<std::string> ids;
  for (std::size_t k = 0; k < ordered.size(); ++k) {
    ids.push_back(ordered[k].passage_id);
    if (k > 0 && ordered[k].score == ordered[k - 1].score) {
      out.tie_breaks.push_back({ordered[k - 1].passage_id, ordered[k].passage_id, ordered[k].score});
    }
  }
  out.ranking = RankingList::from_unique(first.query_id(), std::move(ids));
  out.scores = std::move(ordered);
  return out;
}

inline RankingList aggregate_borda(const std::vector<RankProposal>& proposals) {
  return aggregate_borda_detailed(proposals).ranking;
}

/// One constituent ranker of a fusion: algorithm, comparator flags, and the
/// label of the endpoint (or simulated oracle) that answers its comparisons.
struct RankSetting {
  std::string label;
  SortAlgorithm algorithm = SortAlgorithm::Heapsort;
  ComparatorConfig comparator;
  std::string endpoint;
};

struct FusionResult {
  BordaAggregate aggregate;
  std::vector<RankProposal> proposals;
  std::vector<SortTrace> traces;
};

/// Raised when a constituent ranker fails; carries the constituents that finished.
class FusionError : public Error {
 public:
  FusionError(ErrorKind kind, const std::string& message, std::string failed_setting,
              std::vector<RankProposal> completed)
      : Error(kind, message), failed_setting_(std::move(failed_setting)), completed_(std::move(completed)) {}

  const std::string& failed_setting() const noexcept { return failed_setting_; }
  const std::vector<RankProposal>& completed() const noexcept { return completed_; }

 private:
  std::string failed_setting_;
  std::vector<RankProposal> completed_;
};

/// Maps a setting to the oracle that serves it.
using OracleResolver = std::function<OracleFn(const RankSetting&)>;

struct FuseOptions {
  SortOptions sort;
  // Run constituents on separate threads; resolved oracles must then be thread-safe.
  bool parallel = false;
};

/// Ranks from the same initial order under every setting, then Borda-fuses the lists.
inline FusionResult fuse(const RankingList& initial, const std::vector<RankSetting>& settings,
                         const OracleResolver& resolve, const FuseOptions& options = {}) {
  if (settings.empty()) throw Error(ErrorKind::InvalidArgument, "fusion needs at least one rank setting");
  const auto run_one = [&](const RankSetting& setting) {
    auto oracle = resolve(setting);
    return run_ranker(setting.algorithm, initial, oracle, options.sort);
  };

  std::vector<std::pair<RankingList, SortTrace>> results;
  std::vector<std::string> errors(settings.size());
  std::vector<ErrorKind> kinds(settings.size(), ErrorKind::OracleFailure);
  std::vector<bool> ok(settings.size(), false);
  results.resize(settings.size());

  const auto attempt = [&](std::size_t k) {
    try {
      results[k] = run_one(settings[k]);
      ok[k] = true;
    } catch (const Error& e) {
      kinds[k] = e.kind();
      errors[k] = e.what();
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  };

  if (options.parallel && settings.size() > 1) {
    std::vector<std::future<void>> pending;
    for (std::size_t k = 0; k < settings.size(); ++k) pending.push_back(std::async(std::launch::async, attempt, k));
    for (auto& f : pending) f.get();
  } else {
    for (std::size_t k = 0; k < settings.size(); ++k) {
      attempt(k);
      if (!ok[k]) break;
    }
  }

  FusionResult out;
  std::vector<RankProposal> completed;
  for (std::size_t k = 0; k < settings.size(); ++k) {
    if (ok[k]) completed.push_back({settings[k].label, results[k].first});
  }
  for (std::size_t k = 0; k < settings.size(); ++k) {
    if (!ok[k] && !errors[k].empty()) {
      throw FusionError(kinds[k], "setting '" + settings[k].label + "' failed: " + errors[k], settings[k].label,
                        std::move(completed));
    }
  }
  for (std::size_t k = 0; k < settings.size(); ++k) {
    out.proposals.push_back({settings[k].label, std::move(results[k].first)});
    out.traces.push_back(std::move(results[k].second));
  }
  out.aggregate = aggregate_borda_detailed(out.proposals);
  return out;
}

}  // namespace rankfusion
