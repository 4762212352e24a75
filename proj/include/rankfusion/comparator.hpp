#pragma once

// Pairwise prompting and order-bias calibration.
//
// Every pair is judged twice, once per passage order. In raw mode the two
// verdicts must agree or the pair is a tie. In calibrated mode the choice-token
// log-scores of both orders are turned into one order-agnostic probability.

#include <cmath>
#include <optional>
#include <string>

#include "rankfusion/completion.hpp"
#include "rankfusion/core.hpp"
#include "rankfusion/prompt_templates.hpp"

namespace rankfusion {

struct IclExample {
  enum class Preferred { First, Second };

  std::string query;
  std::string passage_first;
  std::string passage_second;
  Preferred preferred = Preferred::First;
};

inline IclExample default_icl_example() {
  return IclExample{std::string(prompts::kDefaultIclQuery), std::string(prompts::kDefaultIclFirst),
                    std::string(prompts::kDefaultIclSecond), IclExample::Preferred::First};
}

struct ComparatorConfig {
  bool use_icl = false;
  bool use_calibration = false;
  std::optional<IclExample> icl_example;
  // Ends the prompt with an assistant turn "Passage: " for backends that continue it.
  bool assistant_prefill = false;
};

inline PromptMessages build_prompt(const Query& query, const Passage& first, const Passage& second,
                                   const ComparatorConfig& config) {
  if (first.id == second.id) {
    throw Error(ErrorKind::InvalidArgument, "cannot compare passage '" + first.id + "' with itself");
  }
  PromptMessages messages;
  if (config.use_icl) {
    if (!config.icl_example) throw Error(ErrorKind::MissingIclExample, "ICL enabled without a demonstration");
    const auto& ex = *config.icl_example;
    if (ex.passage_first == ex.passage_second) {
      throw Error(ErrorKind::InvalidArgument, "ICL demonstration passages must differ");
    }
    const bool first_wins = ex.preferred == IclExample::Preferred::First;
    const std::string& winner = first_wins ? ex.passage_first : ex.passage_second;
    const std::string& loser = first_wins ? ex.passage_second : ex.passage_first;
    // The preferred passage wins from both positions.
    messages.push_back({Role::User, prompts::render(prompts::kPairwiseTemplate, ex.query, winner, loser)});
    messages.push_back({Role::Assistant, std::string(prompts::kAnswerA)});
    messages.push_back({Role::User, prompts::render(prompts::kPairwiseTemplate, ex.query, loser, winner)});
    messages.push_back({Role::Assistant, std::string(prompts::kAnswerB)});
  }
  messages.push_back({Role::User, prompts::render(prompts::kPairwiseTemplate, query.text, first.text, second.text)});
  if (config.assistant_prefill) messages.push_back({Role::Assistant, std::string(prompts::kAssistantPrefix)});
  return messages;
}

/// Probability of choosing "A" when only the tokens "A" and "B" are valid.
inline double pairwise_probability(double logit_a, double logit_b) {
  if (!std::isfinite(logit_a) || !std::isfinite(logit_b)) {
    throw Error(ErrorKind::NonFiniteLogit, "choice logits must be finite");
  }
  const double top = std::max(logit_a, logit_b);
  const double ea = std::exp(logit_a - top);
  const double eb = std::exp(logit_b - top);
  return ea / (ea + eb);
}

/// Combines P(i wins | i shown first) and P(j wins | j shown first) into P(i wins).
/// calibrate(a, b) + calibrate(b, a) == 1 and the result lies in [1/(1+e), e/(1+e)].
inline double calibrate(double p_forward, double p_backward) {
  if (!(p_forward >= 0.0 && p_forward <= 1.0) || !(p_backward >= 0.0 && p_backward <= 1.0)) {
    throw Error(ErrorKind::OutOfRange, "calibration inputs must be probabilities");
  }
  if (p_forward == p_backward) return 0.5;
  return 1.0 / (1.0 + std::exp(p_backward - p_forward));
}

/// Softmax mass of "B" minus that of "A"; positive means a lean toward position B.
inline double discrepancy(double mean_logit_a, double mean_logit_b) {
  if (!std::isfinite(mean_logit_a) || !std::isfinite(mean_logit_b)) {
    throw Error(ErrorKind::NonFiniteLogit, "mean logits must be finite");
  }
  return std::tanh((mean_logit_b - mean_logit_a) / 2.0);
}

/// Builds the record for (i, j) from its two directional verdicts.
inline PreferenceRecord combine_judgments(std::string i, std::string j, const DirectionalResult& forward,
                                          const DirectionalResult& backward, bool use_calibration) {
  PreferenceRecord r;
  r.i = std::move(i);
  r.j = std::move(j);
  r.raw_forward = forward;
  r.raw_backward = backward;
  if (use_calibration) {
    if (!forward.has_logits || !backward.has_logits) {
      throw Error(ErrorKind::MissingLogits, "calibration needs choice logits for both orders");
    }
    const double p_forward = pairwise_probability(forward.logit_a, forward.logit_b);
    const double p_backward = pairwise_probability(backward.logit_a, backward.logit_b);
    r.p_ij = calibrate(p_forward, p_backward);
    r.outcome = outcome_from_probability(*r.p_ij);
    return r;
  }
  // Forward "A" and backward "B" both name passage i.
  const bool forward_picks_i = forward.chosen == Choice::A;
  const bool backward_picks_i = backward.chosen == Choice::B;
  if (forward_picks_i && backward_picks_i) {
    r.outcome = PreferenceOutcome::FirstPreferred;
  } else if (!forward_picks_i && !backward_picks_i) {
    r.outcome = PreferenceOutcome::SecondPreferred;
  } else {
    r.outcome = PreferenceOutcome::Tie;
  }
  return r;
}

namespace detail {

inline DirectionalResult interpret(const CompletionResult& result, bool need_logits) {
  if (need_logits) return extract_choice_logits(result);
  if (result.first_token_alternatives) {
    try {
      return extract_choice_logits(result);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::MissingChoiceToken) throw;
    }
  }
  if (auto choice = parse_choice_text(result.text)) return DirectionalResult::from_text_choice(*choice);
  throw Error(ErrorKind::UnparseableChoice, "cannot read a choice from '" + result.text + "'");
}

}  // namespace detail

/// Judges d_i against d_j with two backend calls, one per passage order.
inline PreferenceRecord compare(const Query& query, const Passage& d_i, const Passage& d_j,
                                const ComparatorConfig& config, CompletionBackend& backend) {
  const auto forward_prompt = build_prompt(query, d_i, d_j, config);
  const auto backward_prompt = build_prompt(query, d_j, d_i, config);
  const auto forward = detail::interpret(backend.complete(forward_prompt), config.use_calibration);
  const auto backward = detail::interpret(backend.complete(backward_prompt), config.use_calibration);
  return combine_judgments(d_i.id, d_j.id, forward, backward, config.use_calibration);
}

}  // namespace rankfusion
