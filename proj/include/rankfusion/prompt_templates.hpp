#pragma once

#include <string>
#include <string_view>

namespace rankfusion::prompts {

// Must stay byte-identical to resources/prompts/pairwise.txt.
inline constexpr std::string_view kPairwiseTemplate =
    "Given a query \"{query}\", which of the following two passages is more relevant to the query?\n"
    "\n"
    "Passage A: \"{passage_a}\"\n"
    "\n"
    "Passage B: \"{passage_b}\"\n"
    "\n"
    "Output Passage A or Passage B:";

inline constexpr std::string_view kAnswerA = "Passage: A";
inline constexpr std::string_view kAnswerB = "Passage: B";
inline constexpr std::string_view kAssistantPrefix = "Passage: ";

// Bundled in-context demonstration. The first passage is the preferred one.
inline constexpr std::string_view kDefaultIclQuery = "anthropological definition of environment";
inline constexpr std::string_view kDefaultIclFirst =
    "Forensic anthropology is the application of the science of physical anthropology and human osteology in a "
    "legal setting, most often in criminal cases where the victim's remains are in the advanced stages of "
    "decomposition.nvironmental anthropology is a sub-specialty within the field of anthropology that takes an "
    "active role in examining the relationships between humans and their environment across space and time.";
inline constexpr std::string_view kDefaultIclSecond =
    "Graduate Study in Anthropology. The graduate program in biological anthropology at CU Boulder offers training "
    "in several areas, including primatology, human biology, and paleoanthropology. We share an interest in human "
    "ecology, the broad integrative area of anthropology that focuses on the interactions of culture, biology and "
    "the environment.";

/// Substitutes {query}, {passage_a} and {passage_b}. Substituted text is never rescanned.
inline std::string render(std::string_view tmpl, std::string_view query, std::string_view passage_a,
                          std::string_view passage_b) {
  std::string out;
  out.reserve(tmpl.size() + query.size() + passage_a.size() + passage_b.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find('{', pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    out.append(tmpl.substr(pos, open - pos));
    const auto close = tmpl.find('}', open);
    if (close == std::string_view::npos) {
      out.append(tmpl.substr(open));
      break;
    }
    const auto name = tmpl.substr(open + 1, close - open - 1);
    if (name == "query") {
      out.append(query);
    } else if (name == "passage_a") {
      out.append(passage_a);
    } else if (name == "passage_b") {
      out.append(passage_b);
    } else {
      out.append(tmpl.substr(open, close - open + 1));
    }
    pos = close + 1;
  }
  return out;
}

}  // namespace rankfusion::prompts
