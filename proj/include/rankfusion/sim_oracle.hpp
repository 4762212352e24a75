#pragma once

// Deterministic synthetic comparator: latent relevance plus a position bias and
// per-prompt noise on the choice logits. Noise is a hash of (seed, ordered pair),
// so it does not depend on the order in which a sort asks its questions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rankfusion/comparator.hpp"
#include "rankfusion/core.hpp"
#include "rankfusion/evaluation.hpp"

namespace rankfusion::sim {

struct BiasConfig {
  double position_bias = 0.0;  // added to the position-A log-score
  double noise_sigma = 0.0;
  double scale = 1.0;  // multiplies relevance
};

inline void validate(const BiasConfig& c) {
  if (!(c.noise_sigma >= 0.0)) throw Error(ErrorKind::InvalidArgument, "noise_sigma must be >= 0");
  if (!(c.scale > 0.0)) throw Error(ErrorKind::InvalidArgument, "scale must be > 0");
  if (!std::isfinite(c.position_bias)) throw Error(ErrorKind::InvalidArgument, "position_bias must be finite");
}

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline constexpr std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

/// Uniform in [0, 1) from the top 53 bits.
inline double unit_interval(std::uint64_t h) { return double(h >> 11) * 0x1.0p-53; }

/// Standard normal via Box-Muller on two derived uniforms.
inline double standard_normal(std::uint64_t key) {
  const double u1 = 1.0 - unit_interval(splitmix64(key ^ 0x5DEECE66DULL));  // (0, 1]
  const double u2 = unit_interval(splitmix64(key ^ 0x2545F4914F6CDD1DULL));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Logits for the prompt (A = first, B = second).
inline DirectionalResult synth_logits(const Passage& first, const Passage& second, const BiasConfig& config,
                                      std::uint64_t seed) {
  if (first.id == second.id) throw Error(ErrorKind::InvalidArgument, "synthetic comparison of a passage with itself");
  if (!first.relevance || !second.relevance) {
    throw Error(ErrorKind::InvalidArgument, "synthetic comparison needs latent relevance on both passages");
  }
  double noise_a = 0.0;
  double noise_b = 0.0;
  if (config.noise_sigma > 0.0) {
    const auto key = mix(mix(seed, fnv1a(first.id)), fnv1a(second.id));
    noise_a = config.noise_sigma * standard_normal(mix(key, 1));
    noise_b = config.noise_sigma * standard_normal(mix(key, 2));
  }
  return DirectionalResult::from_logits(config.scale * *first.relevance + config.position_bias + noise_a,
                                        config.scale * *second.relevance + noise_b);
}

/// Id-level pairwise oracle over a corpus with latent relevance. Stateless.
class SimOracle {
 public:
  SimOracle(const Corpus& corpus, BiasConfig config, std::uint64_t seed, bool use_calibration)
      : corpus_(&corpus), config_(config), seed_(seed), use_calibration_(use_calibration) {
    validate(config_);
  }

  PreferenceRecord operator()(const std::string& i, const std::string& j) const {
    const auto& di = corpus_->at(i);
    const auto& dj = corpus_->at(j);
    return combine_judgments(i, j, synth_logits(di, dj, config_, seed_), synth_logits(dj, di, config_, seed_),
                             use_calibration_);
  }

 private:
  const Corpus* corpus_;
  BiasConfig config_;
  std::uint64_t seed_;
  bool use_calibration_;
};

struct SyntheticCorpus {
  Query query;
  Corpus corpus;
  std::uint64_t seed = 0;
};

struct GeneratedCorpus {
  SyntheticCorpus synthetic;
  Qrels qrels;
};

/// Grade mix loosely following TREC-DL pools: mostly non-relevant.
inline const std::vector<double>& default_grade_weights() {
  static const std::vector<double> w{0.5, 0.25, 0.15, 0.10};
  return w;
}

/// `m` passages with grades drawn from `grade_levels`; latent relevance is the
/// grade plus a jitter in [0, 0.5), so grade order is preserved and the latent
/// order is strict.
inline GeneratedCorpus generate_corpus(std::size_t m, std::uint64_t seed,
                                       const std::vector<int>& grade_levels = {0, 1, 2, 3}) {
  if (m < 2) throw Error(ErrorKind::InvalidArgument, "synthetic corpus needs m >= 2");
  if (grade_levels.empty()) throw Error(ErrorKind::InvalidArgument, "no grade levels");
  std::vector<double> weights = grade_levels.size() == default_grade_weights().size()
                                    ? default_grade_weights()
                                    : std::vector<double>(grade_levels.size(), 1.0);
  double total = 0.0;
  for (double w : weights) total += w;

  GeneratedCorpus out;
  const std::string qid = "sim" + std::to_string(seed);
  out.synthetic.query = Query{qid, "synthetic query " + std::to_string(seed)};
  out.synthetic.seed = seed;
  std::vector<Passage> passages;
  passages.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    const auto h = mix(mix(seed, 0xC0FFEEULL), k);
    double u = unit_interval(h) * total;
    std::size_t level = 0;
    while (level + 1 < weights.size() && u >= weights[level]) u -= weights[level++];
    const int grade = grade_levels[level];
    const double jitter = 0.5 * unit_interval(splitmix64(h));
    Passage p;
    p.id = qid + "-d" + std::to_string(k);
    p.text = "synthetic passage " + std::to_string(k) + " of " + qid;
    p.relevance = double(grade) + jitter;
    out.qrels.set(qid, p.id, std::clamp(grade, Qrels::kMinGrade, Qrels::kMaxGrade));
    passages.push_back(std::move(p));
  }
  out.synthetic.corpus = Corpus(std::move(passages));
  return out;
}

/// Passages sorted by descending latent relevance.
inline RankingList latent_order(const std::string& query_id, const Corpus& corpus) {
  std::vector<const Passage*> ps;
  for (const auto& p : corpus.passages()) ps.push_back(&p);
  std::stable_sort(ps.begin(), ps.end(),
                   [](const Passage* a, const Passage* b) { return a->relevance.value() > b->relevance.value(); });
  std::vector<std::string> ids;
  for (const auto* p : ps) ids.push_back(p->id);
  return RankingList::from_unique(query_id, std::move(ids));
}

/// Gives passages without latent relevance a hash-derived one in [0, 4).
inline Corpus with_pseudo_relevance(const Corpus& corpus, std::uint64_t seed) {
  std::vector<Passage> ps = corpus.passages();
  for (auto& p : ps) {
    if (!p.relevance) p.relevance = 4.0 * unit_interval(mix(seed, fnv1a(p.id)));
  }
  return Corpus(std::move(ps));
}

}  // namespace rankfusion::sim
