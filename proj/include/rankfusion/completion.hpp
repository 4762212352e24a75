#pragma once

#include <map>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "rankfusion/core.hpp"

namespace rankfusion {

enum class Role { User, Assistant };

inline std::string_view to_string(Role r) { return r == Role::User ? "user" : "assistant"; }

struct Message {
  Role role = Role::User;
  std::string content;

  friend bool operator==(const Message&, const Message&) = default;
};

using PromptMessages = std::vector<Message>;

/// Generated text plus the candidate tokens at the decision position.
struct CompletionResult {
  std::string text;
  std::optional<std::map<std::string, double>> first_token_alternatives;
};

/// Anything that can answer a chat prompt. Implementations must be safe to call
/// concurrently if they are shared between concurrent rankers.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual CompletionResult complete(const PromptMessages& messages) = 0;
};

namespace detail {

/// Drops whitespace and tokenizer space markers ("▁" and "Ġ") around a token.
inline std::string normalize_token(std::string_view token) {
  static constexpr std::string_view kMarkers[] = {"\xE2\x96\x81", "\xC4\xA0"};
  bool changed = true;
  while (changed && !token.empty()) {
    changed = false;
    const auto first = token.find_first_not_of(" \t\r\n");
    const auto last = token.find_last_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    if (first != 0 || last != token.size() - 1) {
      token = token.substr(first, last - first + 1);
      changed = true;
    }
    for (auto marker : kMarkers) {
      if (token.starts_with(marker)) {
        token.remove_prefix(marker.size());
        changed = true;
      }
    }
  }
  return std::string(token);
}

}  // namespace detail

/// Picks the log-scores of the "A" and "B" tokens. Whitespace variants of the
/// same letter collapse to their highest score.
inline DirectionalResult extract_choice_logits(const CompletionResult& result) {
  if (!result.first_token_alternatives) {
    throw Error(ErrorKind::MissingLogits, "completion carries no token alternatives");
  }
  std::optional<double> a;
  std::optional<double> b;
  for (const auto& [token, score] : *result.first_token_alternatives) {
    const auto norm = detail::normalize_token(token);
    if (norm == "A") a = a ? std::max(*a, score) : score;
    if (norm == "B") b = b ? std::max(*b, score) : score;
  }
  if (!a || !b) {
    throw Error(ErrorKind::MissingChoiceToken,
                std::string("choice token ") + (!a ? "\"A\"" : "\"B\"") + " absent from alternatives");
  }
  return DirectionalResult::from_logits(*a, *b);
}

/// Reads the choice from generated text: "Passage: A", or a bare "A"/"B".
inline std::optional<Choice> parse_choice_text(std::string_view text) {
  static const std::regex kPrefixed(R"(Passage:\s*([AB])\b)");
  static const std::regex kBare(R"(^\s*([AB])\b)");
  std::match_results<std::string_view::const_iterator> m;
  if (std::regex_search(text.begin(), text.end(), m, kPrefixed) ||
      std::regex_search(text.begin(), text.end(), m, kBare)) {
    return m[1].str() == "A" ? Choice::A : Choice::B;
  }
  return std::nullopt;
}

}  // namespace rankfusion
