#pragma once

// JSON-lines readers/writers for corpora, queries and preference traces.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rankfusion/core.hpp"

namespace rankfusion {

using json = nlohmann::json;

inline std::string to_string(PreferenceOutcome o) {
  switch (o) {
    case PreferenceOutcome::FirstPreferred: return "first";
    case PreferenceOutcome::SecondPreferred: return "second";
    case PreferenceOutcome::Tie: return "tie";
  }
  return "tie";
}

inline PreferenceOutcome outcome_from_string(const std::string& s) {
  if (s == "first") return PreferenceOutcome::FirstPreferred;
  if (s == "second") return PreferenceOutcome::SecondPreferred;
  if (s == "tie") return PreferenceOutcome::Tie;
  throw Error(ErrorKind::InvalidArgument, "unknown outcome '" + s + "'");
}

inline json to_json(const DirectionalResult& d) {
  json j = {{"chosen", d.chosen == Choice::A ? "A" : "B"}};
  if (d.has_logits) {
    j["logit_a"] = d.logit_a;
    j["logit_b"] = d.logit_b;
  }
  return j;
}

inline DirectionalResult directional_from_json(const json& j) {
  const auto chosen = j.at("chosen").get<std::string>();
  if (chosen != "A" && chosen != "B") throw Error(ErrorKind::InvalidArgument, "chosen must be A or B");
  if (j.contains("logit_a") && j.contains("logit_b")) {
    DirectionalResult d = DirectionalResult::from_logits(j.at("logit_a").get<double>(), j.at("logit_b").get<double>());
    d.chosen = chosen == "A" ? Choice::A : Choice::B;
    return d;
  }
  return DirectionalResult::from_text_choice(chosen == "A" ? Choice::A : Choice::B);
}

inline json to_json(const PreferenceRecord& r) {
  json j = {{"i", r.i}, {"j", r.j}, {"outcome", to_string(r.outcome)}};
  j["p_ij"] = r.p_ij ? json(*r.p_ij) : json(nullptr);
  j["forward"] = to_json(r.raw_forward);
  j["backward"] = to_json(r.raw_backward);
  return j;
}

inline PreferenceRecord record_from_json(const json& j) {
  PreferenceRecord r;
  r.i = j.at("i").get<std::string>();
  r.j = j.at("j").get<std::string>();
  r.outcome = outcome_from_string(j.at("outcome").get<std::string>());
  if (j.contains("p_ij") && !j.at("p_ij").is_null()) r.p_ij = j.at("p_ij").get<double>();
  r.raw_forward = directional_from_json(j.at("forward"));
  r.raw_backward = directional_from_json(j.at("backward"));
  return r;
}

/// Writes `content` to a temp file next to `path`, then renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw Error(ErrorKind::IoError, "failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::IoError, "cannot rename into '" + path.string() + "': " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Calls `fn(json, line_number)` for every non-blank line.
template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
    try {
      fn(j, line_no);
    } catch (const json::exception& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
  }
}

/// One line of a corpus file. `query_id` groups candidates per query when present.
struct CorpusEntry {
  Passage passage;
  std::optional<std::string> query_id;
};

inline std::vector<CorpusEntry> read_corpus_jsonl(const std::filesystem::path& path) {
  std::vector<CorpusEntry> out;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    CorpusEntry e;
    e.passage.id = j.at("id").get<std::string>();
    e.passage.text = j.at("text").get<std::string>();
    if (e.passage.id.empty()) throw ParseError(path.string(), line, "empty id");
    if (j.contains("relevance")) e.passage.relevance = j.at("relevance").get<double>();
    if (j.contains("qid")) e.query_id = j.at("qid").get<std::string>();
    out.push_back(std::move(e));
  });
  return out;
}

/// Candidates for `query_id`: lines tagged with that qid plus untagged lines, in file order.
inline Corpus corpus_for_query(const std::vector<CorpusEntry>& entries, const std::string& query_id) {
  std::vector<Passage> passages;
  for (const auto& e : entries) {
    if (!e.query_id || *e.query_id == query_id) passages.push_back(e.passage);
  }
  return Corpus(std::move(passages));
}

inline std::vector<Query> read_queries_jsonl(const std::filesystem::path& path) {
  std::vector<Query> out;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    Query q{j.at("id").get<std::string>(), j.at("text").get<std::string>()};
    if (q.id.empty()) throw ParseError(path.string(), line, "empty query id");
    out.push_back(std::move(q));
  });
  return out;
}

inline std::string corpus_to_jsonl(const Corpus& corpus, const std::optional<std::string>& query_id = std::nullopt) {
  std::string out;
  for (const auto& p : corpus.passages()) {
    json j = {{"id", p.id}, {"text", p.text}};
    if (p.relevance) j["relevance"] = *p.relevance;
    if (query_id) j["qid"] = *query_id;
    out += j.dump() + "\n";
  }
  return out;
}

inline std::string queries_to_jsonl(const std::vector<Query>& queries) {
  std::string out;
  for (const auto& q : queries) out += json({{"id", q.id}, {"text", q.text}}).dump() + "\n";
  return out;
}

/// A trace line: a record, optionally tagged with its query.
struct TraceLine {
  std::optional<std::string> query_id;
  PreferenceRecord record;
};

inline std::string records_to_jsonl(const std::vector<PreferenceRecord>& records,
                                    const std::optional<std::string>& query_id = std::nullopt) {
  std::string out;
  for (const auto& r : records) {
    json j = to_json(r);
    if (query_id) j["qid"] = *query_id;
    out += j.dump() + "\n";
  }
  return out;
}

inline std::vector<TraceLine> read_trace_jsonl(const std::filesystem::path& path) {
  std::vector<TraceLine> out;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    TraceLine t;
    try {
      t.record = record_from_json(j);
    } catch (const Error& e) {
      throw ParseError(path.string(), line, e.what());
    }
    if (j.contains("qid")) t.query_id = j.at("qid").get<std::string>();
    out.push_back(std::move(t));
  });
  return out;
}

/// Groups trace lines by query id; untagged lines land under "".
inline std::map<std::string, std::vector<PreferenceRecord>> group_by_query(const std::vector<TraceLine>& lines) {
  std::map<std::string, std::vector<PreferenceRecord>> out;
  for (const auto& t : lines) out[t.query_id.value_or("")].push_back(t.record);
  return out;
}

}  // namespace rankfusion
