#pragma once

#include <functional>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rankfusion/completion.hpp"
#include "rankfusion/core.hpp"

namespace rftest {

using namespace rankfusion;

inline std::vector<std::string> make_ids(std::size_t m, const std::string& prefix = "d") {
  std::vector<std::string> ids;
  for (std::size_t k = 0; k < m; ++k) ids.push_back(prefix + std::to_string(k));
  return ids;
}

inline RankingList list(std::vector<std::string> ids, std::string qid = "q") {
  return RankingList::from_unique(std::move(qid), std::move(ids));
}

inline PreferenceRecord record(std::string i, std::string j, PreferenceOutcome o) {
  PreferenceRecord r;
  r.i = std::move(i);
  r.j = std::move(j);
  r.outcome = o;
  return r;
}

/// Prefers whichever id comes first in `latent`.
struct LatentOracle {
  std::unordered_map<std::string, std::size_t> pos;

  explicit LatentOracle(const std::vector<std::string>& latent) {
    for (std::size_t k = 0; k < latent.size(); ++k) pos[latent[k]] = k;
  }
  PreferenceRecord operator()(const std::string& i, const std::string& j) const {
    return record(i, j, pos.at(i) < pos.at(j) ? PreferenceOutcome::FirstPreferred : PreferenceOutcome::SecondPreferred);
  }
};

/// Strict edges (winner, loser); unlisted pairs are ties.
struct EdgeOracle {
  std::set<std::pair<std::string, std::string>> wins;

  PreferenceRecord operator()(const std::string& i, const std::string& j) const {
    if (wins.contains({i, j})) return record(i, j, PreferenceOutcome::FirstPreferred);
    if (wins.contains({j, i})) return record(i, j, PreferenceOutcome::SecondPreferred);
    return record(i, j, PreferenceOutcome::Tie);
  }
};

/// The four-passage intransitive example: A>B, A>C, B>C, B>D, C>D, D>A.
inline EdgeOracle four_cycle_oracle() {
  return EdgeOracle{{{"A", "B"}, {"A", "C"}, {"B", "C"}, {"B", "D"}, {"C", "D"}, {"D", "A"}}};
}

/// Backend driven by a callback; counts calls.
class ScriptedBackend : public CompletionBackend {
 public:
  explicit ScriptedBackend(std::function<CompletionResult(const PromptMessages&)> fn) : fn_(std::move(fn)) {}
  CompletionResult complete(const PromptMessages& messages) override {
    ++calls;
    seen.push_back(messages);
    return fn_(messages);
  }
  int calls = 0;
  std::vector<PromptMessages> seen;

 private:
  std::function<CompletionResult(const PromptMessages&)> fn_;
};

inline CompletionResult logits_result(double a, double b, std::string text = "Passage: A") {
  return CompletionResult{std::move(text), std::map<std::string, double>{{"A", a}, {"B", b}}};
}

}  // namespace rftest
