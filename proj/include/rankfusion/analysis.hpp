#pragma once

// Inconsistency measurement over all-pairs judgments.
//
// The tournament graph is complete: each unordered pair is either a strict
// edge (winner, loser) or a tie. Order-inconsistent judgments are ties.
//
// Inconsistent triads, with "=" a tie and ">" a strict preference:
//   circular  a > b, b > c, c > a
//   type 1    a = b, b = c, c > a
//   type 2    a = b, a > c, c > b
// All-tie triads and one-tie triads whose third node beats (or loses to) both
// tied nodes are consistent.

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rankfusion/comparator.hpp"
#include "rankfusion/core.hpp"

namespace rankfusion {

/// Upper bound on inconsistent triads among 100 passages (Kulakowski 2018).
inline constexpr std::uint64_t kMaxInconsistentTriads100 = 161684;

inline constexpr std::uint64_t triad_count(std::uint64_t n) { return n < 3 ? 0 : n * (n - 1) * (n - 2) / 6; }

class TournamentGraph {
 public:
  enum class Edge : std::uint8_t { Tie, Wins, Loses };

  TournamentGraph() = default;

  /// All pairs start as ties.
  explicit TournamentGraph(std::vector<std::string> nodes) : nodes_(std::move(nodes)) {
    edges_.assign(nodes_.size() * nodes_.size(), Edge::Tie);
  }

  const std::vector<std::string>& nodes() const noexcept { return nodes_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Relation of node a to node b by index.
  Edge edge(std::size_t a, std::size_t b) const { return edges_[a * nodes_.size() + b]; }
  bool beats(std::size_t a, std::size_t b) const { return edge(a, b) == Edge::Wins; }
  bool tied(std::size_t a, std::size_t b) const { return edge(a, b) == Edge::Tie; }

  void set_strict(std::size_t winner, std::size_t loser) {
    edges_[winner * nodes_.size() + loser] = Edge::Wins;
    edges_[loser * nodes_.size() + winner] = Edge::Loses;
  }
  void set_tie(std::size_t a, std::size_t b) {
    edges_[a * nodes_.size() + b] = Edge::Tie;
    edges_[b * nodes_.size() + a] = Edge::Tie;
  }

  std::set<std::pair<std::string, std::string>> strict_edges() const {
    std::set<std::pair<std::string, std::string>> out;
    for (std::size_t a = 0; a < size(); ++a) {
      for (std::size_t b = 0; b < size(); ++b) {
        if (a != b && beats(a, b)) out.emplace(nodes_[a], nodes_[b]);
      }
    }
    return out;
  }

  /// Tie edges as (lower, higher) id pairs.
  std::set<std::pair<std::string, std::string>> tie_edges() const {
    std::set<std::pair<std::string, std::string>> out;
    for (std::size_t a = 0; a < size(); ++a) {
      for (std::size_t b = a + 1; b < size(); ++b) {
        if (tied(a, b)) out.emplace(std::min(nodes_[a], nodes_[b]), std::max(nodes_[a], nodes_[b]));
      }
    }
    return out;
  }

 private:
  std::vector<std::string> nodes_;
  std::vector<Edge> edges_;
};

/// Requires exactly one record per unordered pair over `n` distinct passages.
inline TournamentGraph build_tournament(std::span<const PreferenceRecord> records, std::size_t n) {
  const std::size_t expected = n < 2 ? 0 : n * (n - 1) / 2;
  std::vector<std::string> nodes;
  std::map<std::string, std::size_t> index;
  const auto node = [&](const std::string& id) {
    auto [it, inserted] = index.emplace(id, nodes.size());
    if (inserted) nodes.push_back(id);
    return it->second;
  };
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& r : records) {
    if (r.i == r.j) throw Error(ErrorKind::InvalidArgument, "record compares '" + r.i + "' with itself");
    const auto a = node(r.i);
    const auto b = node(r.j);
    if (!seen.emplace(std::min(a, b), std::max(a, b)).second) {
      throw Error(ErrorKind::DuplicatePair, "pair (" + r.i + ", " + r.j + ") judged more than once");
    }
  }
  if (nodes.size() != n || records.size() != expected) {
    throw Error(ErrorKind::IncompletePairSet, "expected " + std::to_string(expected) + " pairs over " +
                                                  std::to_string(n) + " passages, got " +
                                                  std::to_string(records.size()) + " over " +
                                                  std::to_string(nodes.size()));
  }
  TournamentGraph g(nodes);
  for (const auto& r : records) {
    const auto a = index.at(r.i);
    const auto b = index.at(r.j);
    switch (r.outcome) {
      case PreferenceOutcome::FirstPreferred: g.set_strict(a, b); break;
      case PreferenceOutcome::SecondPreferred: g.set_strict(b, a); break;
      case PreferenceOutcome::Tie: g.set_tie(a, b); break;
    }
  }
  return g;
}

struct TriadCensus {
  std::uint64_t circular = 0;
  std::uint64_t type1 = 0;
  std::uint64_t type2 = 0;
  std::uint64_t total_inconsistent = 0;
  std::uint64_t total_triads = 0;

  friend bool operator==(const TriadCensus&, const TriadCensus&) = default;
};

namespace detail {

enum class TriadKind { Consistent, Circular, Type1, Type2 };

inline TriadKind classify_triad(const TournamentGraph& g, std::size_t a, std::size_t b, std::size_t c) {
  const int ties = int(g.tied(a, b)) + int(g.tied(b, c)) + int(g.tied(a, c));
  switch (ties) {
    case 0: {
      // Cyclic iff every node wins exactly once inside the triad.
      const bool cyc1 = g.beats(a, b) && g.beats(b, c) && g.beats(c, a);
      const bool cyc2 = g.beats(b, a) && g.beats(c, b) && g.beats(a, c);
      return cyc1 || cyc2 ? TriadKind::Circular : TriadKind::Consistent;
    }
    case 1: {
      std::size_t x = a, y = b, z = c;
      if (g.tied(b, c)) {
        x = b, y = c, z = a;
      } else if (g.tied(a, c)) {
        x = a, y = c, z = b;
      }
      const bool path = (g.beats(x, z) && g.beats(z, y)) || (g.beats(y, z) && g.beats(z, x));
      return path ? TriadKind::Type2 : TriadKind::Consistent;
    }
    case 2: return TriadKind::Type1;
    default: return TriadKind::Consistent;
  }
}

}  // namespace detail

/// Classifies every triple of nodes.
inline TriadCensus triad_census(const TournamentGraph& g) {
  TriadCensus census;
  const auto n = g.size();
  census.total_triads = triad_count(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      for (std::size_t c = b + 1; c < n; ++c) {
        switch (detail::classify_triad(g, a, b, c)) {
          case detail::TriadKind::Circular: ++census.circular; break;
          case detail::TriadKind::Type1: ++census.type1; break;
          case detail::TriadKind::Type2: ++census.type2; break;
          case detail::TriadKind::Consistent: break;
        }
      }
    }
  }
  census.total_inconsistent = census.circular + census.type1 + census.type2;
  return census;
}

/// Per-query censuses averaged, as fractional counts.
struct MeanTriadCensus {
  double circular = 0, type1 = 0, type2 = 0, total_inconsistent = 0;
  std::size_t queries = 0;
};

inline MeanTriadCensus mean_census(std::span<const TriadCensus> per_query) {
  MeanTriadCensus out;
  out.queries = per_query.size();
  if (per_query.empty()) return out;
  for (const auto& c : per_query) {
    out.circular += double(c.circular);
    out.type1 += double(c.type1);
    out.type2 += double(c.type2);
    out.total_inconsistent += double(c.total_inconsistent);
  }
  const double q = double(per_query.size());
  out.circular /= q, out.type1 /= q, out.type2 /= q, out.total_inconsistent /= q;
  return out;
}

/// Fraction of unordered pairs whose two raw verdicts picked the same position.
/// Repeated judgments of a pair count once (the first).
inline double order_inconsistency_rate(std::span<const PreferenceRecord> records) {
  if (records.empty()) throw Error(ErrorKind::MissingRawResults, "no raw judgments to inspect");
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t pairs = 0;
  std::size_t conflicts = 0;
  for (const auto& r : records) {
    if (!seen.emplace(std::min(r.i, r.j), std::max(r.i, r.j)).second) continue;
    ++pairs;
    if (raw_choices_conflict(r)) ++conflicts;
  }
  return double(conflicts) / double(pairs);
}

struct ChoiceLogitStats {
  double mean_logit_a = 0.0;
  double mean_logit_b = 0.0;
  // Discrepancy of the averaged logits.
  double discrepancy = 0.0;
  // Average of per-call discrepancies; a secondary view of the same bias.
  double mean_call_discrepancy = 0.0;
  std::size_t calls = 0;
};

/// Averages over directional calls that carry logits.
inline ChoiceLogitStats mean_choice_logits(std::span<const DirectionalResult> calls) {
  ChoiceLogitStats s;
  for (const auto& d : calls) {
    if (!d.has_logits) continue;
    s.mean_logit_a += d.logit_a;
    s.mean_logit_b += d.logit_b;
    s.mean_call_discrepancy += discrepancy(d.logit_a, d.logit_b);
    ++s.calls;
  }
  if (s.calls == 0) throw Error(ErrorKind::MissingLogits, "no directional call carries logits");
  const double n = double(s.calls);
  s.mean_logit_a /= n;
  s.mean_logit_b /= n;
  s.mean_call_discrepancy /= n;
  s.discrepancy = discrepancy(s.mean_logit_a, s.mean_logit_b);
  return s;
}

/// Both directional calls of every record.
inline ChoiceLogitStats mean_choice_logits(std::span<const PreferenceRecord> records) {
  std::vector<DirectionalResult> calls;
  calls.reserve(records.size() * 2);
  for (const auto& r : records) {
    calls.push_back(r.raw_forward);
    calls.push_back(r.raw_backward);
  }
  return mean_choice_logits(std::span<const DirectionalResult>(calls));
}

}  // namespace rankfusion
