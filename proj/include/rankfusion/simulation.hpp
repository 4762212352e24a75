#pragma once

// Offline study of ranking volatility: synthetic queries, many initial orders,
// raw vs calibrated comparators, Bubblesort vs Heapsort, and their Borda fusion.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rankfusion/aggregation.hpp"
#include "rankfusion/evaluation.hpp"
#include "rankfusion/sim_oracle.hpp"
#include "rankfusion/sorting.hpp"

namespace rankfusion::sim {

struct SimulationConfig {
  std::size_t passages = 50;
  std::size_t queries = 10;
  std::size_t initial_orders = 20;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  BiasConfig bias{1.0, 0.5, 1.0};
  std::size_t k = 10;
  bool memoize = true;
};

inline SimulationConfig simulation_config_from_json(const nlohmann::json& j) {
  SimulationConfig c;
  c.passages = j.value("passages", c.passages);
  c.queries = j.value("queries", c.queries);
  c.initial_orders = j.value("initial_orders", c.initial_orders);
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (j.contains("bias")) {
    const auto& b = j.at("bias");
    c.bias.position_bias = b.value("position_bias", c.bias.position_bias);
    c.bias.noise_sigma = b.value("noise_sigma", c.bias.noise_sigma);
    c.bias.scale = b.value("scale", c.bias.scale);
  }
  c.k = j.value("k", c.k);
  c.memoize = j.value("memoize", c.memoize);
  if (c.passages < 2) throw Error(ErrorKind::InvalidArgument, "simulation needs at least 2 passages");
  if (c.queries < 1) throw Error(ErrorKind::InvalidArgument, "simulation needs at least 1 query");
  if (c.initial_orders < 2) throw Error(ErrorKind::InvalidArgument, "simulation needs at least 2 initial orders");
  if (c.seeds.empty()) throw Error(ErrorKind::InvalidArgument, "simulation needs at least one seed");
  if (c.k < 1) throw Error(ErrorKind::InvalidArgument, "k must be positive");
  validate(c.bias);
  return c;
}

inline nlohmann::json to_json(const SimulationConfig& c) {
  return {{"passages", c.passages},
          {"queries", c.queries},
          {"initial_orders", c.initial_orders},
          {"seeds", c.seeds},
          {"bias", {{"position_bias", c.bias.position_bias}, {"noise_sigma", c.bias.noise_sigma}, {"scale", c.bias.scale}}},
          {"k", c.k},
          {"memoize", c.memoize}};
}

enum Column : std::size_t { RawBubble, RawHeap, CalibratedBubble, CalibratedHeap, Fused, kColumns };

inline constexpr std::array<const char*, kColumns> kColumnNames{"raw-bubble", "raw-heap", "calibrated-bubble",
                                                                "calibrated-heap", "fused"};

struct ColumnMetrics {
  double ndcg = 0.0;     // mean NDCG@k over queries and initial orders
  double kt_avg = 0.0;   // mean pairwise Kendall-tau across initial orders
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::array<ColumnMetrics, kColumns> columns{};
};

struct SimulationReport {
  SimulationConfig config;
  std::vector<SeedResult> seeds;
  std::array<ColumnMetrics, kColumns> pooled{};
};

/// `count` seeded shuffles of `base`.
inline std::vector<RankingList> random_initial_orders(const RankingList& base, std::uint64_t seed, std::size_t count) {
  std::vector<RankingList> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<std::string> ids = base.order();
    std::mt19937_64 rng(mix(seed, k));
    std::shuffle(ids.begin(), ids.end(), rng);
    out.push_back(RankingList::from_unique(base.query_id(), std::move(ids)));
  }
  return out;
}

inline SeedResult simulate_seed(const SimulationConfig& config, std::uint64_t seed) {
  SeedResult result;
  result.seed = seed;
  std::array<std::map<std::string, std::vector<RankingList>>, kColumns> lists;
  std::array<double, kColumns> ndcg_sum{};
  std::size_t runs = 0;
  const SortOptions sort_options{config.memoize};

  for (std::size_t q = 0; q < config.queries; ++q) {
    const auto query_seed = mix(seed, q);
    const auto generated = generate_corpus(config.passages, query_seed);
    const auto& corpus = generated.synthetic.corpus;
    const auto& qid = generated.synthetic.query.id;
    const SimOracle raw(corpus, config.bias, query_seed, false);
    const SimOracle calibrated(corpus, config.bias, query_seed, true);
    const auto orders = random_initial_orders(initial_ranking(qid, corpus), mix(query_seed, 0x1417), config.initial_orders);

    for (const auto& initial : orders) {
      std::array<RankingList, kColumns> out;
      out[RawBubble] = bubble_sort(initial, raw, sort_options).first;
      out[RawHeap] = heap_sort(initial, raw, sort_options).first;
      out[CalibratedBubble] = bubble_sort(initial, calibrated, sort_options).first;
      out[CalibratedHeap] = heap_sort(initial, calibrated, sort_options).first;
      out[Fused] = aggregate_borda({{"calibrated-bubble", out[CalibratedBubble]}, {"calibrated-heap", out[CalibratedHeap]}});
      for (std::size_t c = 0; c < kColumns; ++c) {
        ndcg_sum[c] += ndcg_at_k(out[c], generated.qrels, config.k);
        lists[c][qid].push_back(std::move(out[c]));
      }
      ++runs;
    }
  }
  for (std::size_t c = 0; c < kColumns; ++c) {
    result.columns[c].ndcg = ndcg_sum[c] / double(runs);
    result.columns[c].kt_avg = avg_kendall_tau(lists[c]);
  }
  return result;
}

inline SimulationReport run_simulation(const SimulationConfig& config) {
  SimulationReport report;
  report.config = config;
  for (auto seed : config.seeds) report.seeds.push_back(simulate_seed(config, seed));
  for (std::size_t c = 0; c < kColumns; ++c) {
    for (const auto& s : report.seeds) {
      report.pooled[c].ndcg += s.columns[c].ndcg;
      report.pooled[c].kt_avg += s.columns[c].kt_avg;
    }
    report.pooled[c].ndcg /= double(report.seeds.size());
    report.pooled[c].kt_avg /= double(report.seeds.size());
  }
  return report;
}

/// Outcome of the three volatility checks on a report.
struct SimulationChecks {
  bool calibrated_beats_raw_kt = false;
  double fused_kt_within_max_fraction = 0.0;
  bool fused_ndcg_within_tolerance = false;
};

inline SimulationChecks check_simulation(const SimulationReport& r, double ndcg_tolerance = 0.01) {
  SimulationChecks checks;
  const auto& p = r.pooled;
  checks.calibrated_beats_raw_kt =
      p[CalibratedBubble].kt_avg < p[RawBubble].kt_avg && p[CalibratedHeap].kt_avg < p[RawHeap].kt_avg;
  std::size_t within = 0;
  for (const auto& s : r.seeds) {
    const auto& c = s.columns;
    if (c[Fused].kt_avg <= std::max(c[CalibratedBubble].kt_avg, c[CalibratedHeap].kt_avg)) ++within;
  }
  checks.fused_kt_within_max_fraction = r.seeds.empty() ? 0.0 : double(within) / double(r.seeds.size());
  checks.fused_ndcg_within_tolerance =
      p[Fused].ndcg >= std::min(p[CalibratedBubble].ndcg, p[CalibratedHeap].ndcg) - ndcg_tolerance;
  return checks;
}

inline nlohmann::json to_json(const SimulationReport& r) {
  const auto columns_json = [](const std::array<ColumnMetrics, kColumns>& cols) {
    nlohmann::json j = nlohmann::json::object();
    for (std::size_t c = 0; c < kColumns; ++c) j[kColumnNames[c]] = {{"ndcg", cols[c].ndcg}, {"kt_avg", cols[c].kt_avg}};
    return j;
  };
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& s : r.seeds) seeds.push_back({{"seed", s.seed}, {"columns", columns_json(s.columns)}});
  const auto checks = check_simulation(r);
  return {{"config", to_json(r.config)},
          {"pooled", columns_json(r.pooled)},
          {"seeds", seeds},
          {"checks",
           {{"calibrated_kt_below_raw", checks.calibrated_beats_raw_kt},
            {"fused_kt_within_max_fraction", checks.fused_kt_within_max_fraction},
            {"fused_ndcg_within_0.01_of_min", checks.fused_ndcg_within_tolerance}}}};
}

/// Markdown table: one row per metric, one column per ranker.
inline std::string format_table(const SimulationReport& r) {
  const auto fmt = [](double v, int digits) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return std::string(buf);
  };
  std::string out = "| metric |";
  for (auto name : kColumnNames) out += std::string(" ") + name + " |";
  out += "\n|---|";
  for (std::size_t c = 0; c < kColumns; ++c) out += "---|";
  out += "\n| NDCG@" + std::to_string(r.config.k) + " |";
  for (std::size_t c = 0; c < kColumns; ++c) out += " " + fmt(100.0 * r.pooled[c].ndcg, 2) + " |";
  out += "\n| KT_avg |";
  for (std::size_t c = 0; c < kColumns; ++c) out += " " + fmt(r.pooled[c].kt_avg, 3) + " |";
  out += "\n";
  return out;
}

}  // namespace rankfusion::sim
