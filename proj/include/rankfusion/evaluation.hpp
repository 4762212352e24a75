#pragma once

// Ranking quality (NDCG@k), volatility (Kendall-tau distance and its average
// over initial orders), and TREC qrels / run-file I/O.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "rankfusion/core.hpp"

namespace rankfusion {

class Qrels {
 public:
  static constexpr int kMinGrade = 0;
  static constexpr int kMaxGrade = 3;

  void set(const std::string& query_id, const std::string& passage_id, int grade) {
    if (grade < kMinGrade || grade > kMaxGrade) {
      throw Error(ErrorKind::OutOfRange, "grade " + std::to_string(grade) + " outside [0, 3]");
    }
    grades_[query_id][passage_id] = grade;
  }

  bool has_query(const std::string& query_id) const { return grades_.contains(query_id); }

  /// Unjudged passages are grade 0.
  int grade(const std::string& query_id, const std::string& passage_id) const {
    auto q = grades_.find(query_id);
    if (q == grades_.end()) return 0;
    auto p = q->second.find(passage_id);
    return p == q->second.end() ? 0 : p->second;
  }

  const std::map<std::string, int>& judged(const std::string& query_id) const {
    auto q = grades_.find(query_id);
    if (q == grades_.end()) throw Error(ErrorKind::UnknownQuery, "no judgments for query '" + query_id + "'");
    return q->second;
  }

  std::vector<std::string> query_ids() const {
    std::vector<std::string> out;
    for (const auto& [q, _] : grades_) out.push_back(q);
    return out;
  }

 private:
  std::map<std::string, std::map<std::string, int>> grades_;
};

enum class GainMode { Exponential, Linear };

namespace detail {

inline double gain(int grade, GainMode mode) {
  return mode == GainMode::Exponential ? std::exp2(double(grade)) - 1.0 : double(grade);
}

}  // namespace detail

/// DCG over the first k ranks, normalized by the ideal DCG over the judged grades.
/// Returns 0 when no judged passage has positive gain.
inline double ndcg_at_k(const RankingList& ranking, const Qrels& qrels, std::size_t k,
                        GainMode mode = GainMode::Exponential) {
  if (k == 0) throw Error(ErrorKind::InvalidArgument, "k must be positive");
  const auto& judged = qrels.judged(ranking.query_id());
  double dcg = 0.0;
  for (std::size_t r = 0; r < std::min(k, ranking.size()); ++r) {
    dcg += detail::gain(qrels.grade(ranking.query_id(), ranking[r]), mode) / std::log2(double(r) + 2.0);
  }
  std::vector<int> ideal;
  for (const auto& [_, g] : judged) ideal.push_back(g);
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t r = 0; r < std::min(k, ideal.size()); ++r) {
    idcg += detail::gain(ideal[r], mode) / std::log2(double(r) + 2.0);
  }
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

/// Fraction of discordant unordered pairs.
inline double kendall_tau_distance(const RankingList& r1, const RankingList& r2) {
  if (r1.size() != r2.size()) throw Error(ErrorKind::InconsistentUniverse, "rankings differ in length");
  std::unordered_map<std::string, std::size_t> pos2;
  for (std::size_t k = 0; k < r2.size(); ++k) pos2.emplace(r2[k], k);
  std::vector<std::size_t> mapped;
  mapped.reserve(r1.size());
  for (const auto& id : r1.order()) {
    auto it = pos2.find(id);
    if (it == pos2.end()) throw Error(ErrorKind::InconsistentUniverse, "id '" + id + "' missing from second ranking");
    mapped.push_back(it->second);
  }
  const std::size_t m = mapped.size();
  if (m < 2) return 0.0;
  std::size_t discordant = 0;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) discordant += mapped[a] > mapped[b];
  }
  return double(discordant) / (double(m) * double(m - 1) / 2.0);
}

/// Mean over queries of the mean pairwise distance between that query's lists.
/// Every query must supply the same number (at least two) of lists.
inline double avg_kendall_tau(const std::map<std::string, std::vector<RankingList>>& per_query) {
  if (per_query.empty()) throw Error(ErrorKind::MismatchedCounts, "no queries");
  const std::size_t n = per_query.begin()->second.size();
  if (n < 2) throw Error(ErrorKind::MismatchedCounts, "need at least two rankings per query");
  double total = 0.0;
  for (const auto& [qid, lists] : per_query) {
    if (lists.size() != n) {
      throw Error(ErrorKind::MismatchedCounts, "query '" + qid + "' has " + std::to_string(lists.size()) +
                                                   " rankings, expected " + std::to_string(n));
    }
    double sum = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) sum += kendall_tau_distance(lists[p], lists[q]);
    }
    total += sum / (double(n) * double(n - 1) / 2.0);
  }
  return total / double(per_query.size());
}

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  for (std::string tok; ss >> tok;) out.push_back(tok);
  return out;
}

inline long long parse_int(const std::string& tok, const std::string& source, std::size_t line, const char* what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(source, line, std::string("bad ") + what + " '" + tok + "'");
  }
}

}  // namespace detail

/// Lines of `qid 0 docid grade`.
inline Qrels parse_qrels(std::istream& in, const std::string& source = "<qrels>") {
  Qrels qrels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto f = detail::split_ws(line);
    if (f.empty()) continue;
    if (f.size() != 4) throw ParseError(source, line_no, "expected 'qid 0 docid grade'");
    const auto grade = detail::parse_int(f[3], source, line_no, "grade");
    if (grade < Qrels::kMinGrade || grade > Qrels::kMaxGrade) {
      throw ParseError(source, line_no, "grade " + f[3] + " outside [0, 3]");
    }
    qrels.set(f[0], f[2], int(grade));
  }
  return qrels;
}

inline Qrels parse_qrels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "'");
  return parse_qrels(in, path.string());
}

/// Lines of `qid Q0 docid rank score tag`, rank 1-based and score m - rank + 1.
inline std::string format_run(const std::vector<RankingList>& rankings, const std::string& tag) {
  std::string out;
  for (const auto& r : rankings) {
    const auto m = r.size();
    for (std::size_t k = 0; k < m; ++k) {
      out += r.query_id() + " Q0 " + r[k] + " " + std::to_string(k + 1) + " " + std::to_string(m - k) + " " + tag +
             "\n";
    }
  }
  return out;
}

struct RunRecord {
  std::string query_id;
  std::string passage_id;
  long long rank = 0;
  double score = 0.0;
  std::string tag;
};

inline std::vector<RunRecord> parse_run_records(std::istream& in, const std::string& source = "<run>") {
  std::vector<RunRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto f = detail::split_ws(line);
    if (f.empty()) continue;
    if (f.size() != 6) throw ParseError(source, line_no, "expected 'qid Q0 docid rank score tag'");
    RunRecord rec{f[0], f[2], detail::parse_int(f[3], source, line_no, "rank"), 0.0, f[5]};
    if (rec.rank < 1) throw ParseError(source, line_no, "rank must be >= 1");
    try {
      std::size_t used = 0;
      rec.score = std::stod(f[4], &used);
      if (used != f[4].size()) throw std::invalid_argument(f[4]);
    } catch (const std::exception&) {
      throw ParseError(source, line_no, "bad score '" + f[4] + "'");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

/// One ranking per query, ordered by rank. Queries keep their first-seen order.
inline std::vector<RankingList> read_run(std::istream& in, const std::string& source = "<run>") {
  const auto records = parse_run_records(in, source);
  std::vector<std::string> qorder;
  std::map<std::string, std::vector<std::pair<long long, std::string>>> by_query;
  for (const auto& r : records) {
    auto [it, inserted] = by_query.try_emplace(r.query_id);
    if (inserted) qorder.push_back(r.query_id);
    it->second.emplace_back(r.rank, r.passage_id);
  }
  std::vector<RankingList> out;
  for (const auto& qid : qorder) {
    auto& entries = by_query[qid];
    std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t k = 1; k < entries.size(); ++k) {
      if (entries[k].first == entries[k - 1].first) {
        throw ParseError(source, 0, "query '" + qid + "' repeats rank " + std::to_string(entries[k].first));
      }
    }
    std::vector<std::string> ids;
    for (auto& [_, id] : entries) ids.push_back(id);
    try {
      out.push_back(RankingList::from_unique(qid, std::move(ids)));
    } catch (const Error& e) {
      throw ParseError(source, 0, e.what());
    }
  }
  return out;
}

inline std::vector<RankingList> read_run(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "'");
  return read_run(in, path.string());
}

}  // namespace rankfusion
