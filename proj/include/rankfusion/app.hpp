#pragma once

// Batch commands behind the `rankfusion` executable: rank, fuse, analyze, eval
// and simulate. Each command reads a RunConfig and writes its outputs as files.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rankfusion/aggregation.hpp"
#include "rankfusion/analysis.hpp"
#include "rankfusion/evaluation.hpp"
#include "rankfusion/io.hpp"
#include "rankfusion/llm_client.hpp"
#include "rankfusion/sim_oracle.hpp"
#include "rankfusion/simulation.hpp"
#include "rankfusion/sorting.hpp"

namespace rankfusion::app {

namespace fs = std::filesystem;

/// A problem with the invocation itself (exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

/// `sim:seed=7,beta=1,sigma=0.5,gamma=1`
struct SimOracleSpec {
  std::uint64_t seed = 0;
  sim::BiasConfig bias;
};

inline SimOracleSpec parse_sim_spec(const std::string& spec) {
  if (!spec.starts_with("sim:") && spec != "sim") throw ConfigError("not a sim oracle spec: '" + spec + "'");
  SimOracleSpec out;
  std::stringstream ss(spec.size() > 4 ? spec.substr(4) : "");
  for (std::string item; std::getline(ss, item, ',');) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("sim option '" + item + "' lacks '='");
    const auto key = item.substr(0, eq);
    const auto value = item.substr(eq + 1);
    try {
      if (key == "seed") {
        out.seed = std::stoull(value);
      } else if (key == "beta") {
        out.bias.position_bias = std::stod(value);
      } else if (key == "sigma") {
        out.bias.noise_sigma = std::stod(value);
      } else if (key == "gamma") {
        out.bias.scale = std::stod(value);
      } else {
        throw ConfigError("unknown sim option '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw ConfigError("bad value for sim option '" + key + "': '" + value + "'");
    } catch (const std::out_of_range&) {
      throw ConfigError("value out of range for sim option '" + key + "'");
    }
  }
  try {
    sim::validate(out.bias);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return out;
}

/// given | bm25-file-order | hard-list | random:SEEDxCOUNT
struct InitialOrderSpec {
  enum class Kind { FileOrder, HardList, Random };
  Kind kind = Kind::FileOrder;
  std::uint64_t seed = 0;
  std::size_t count = 1;
};

inline InitialOrderSpec parse_initial_spec(const std::string& spec) {
  InitialOrderSpec out;
  if (spec == "given" || spec == "bm25-file-order") return out;
  if (spec == "hard-list") {
    out.kind = InitialOrderSpec::Kind::HardList;
    return out;
  }
  if (spec.starts_with("random:")) {
    std::string rest = spec.substr(7);
    // Accept the multiplication sign as well as 'x'.
    std::size_t sep = rest.find("\xC3\x97");
    std::size_t sep_len = 2;
    if (sep == std::string::npos) {
      sep = rest.find('x');
      sep_len = 1;
    }
    try {
      out.kind = InitialOrderSpec::Kind::Random;
      if (sep == std::string::npos) {
        out.seed = std::stoull(rest);
      } else {
        out.seed = std::stoull(rest.substr(0, sep));
        out.count = std::stoull(rest.substr(sep + sep_len));
      }
    } catch (const std::exception&) {
      throw ConfigError("bad random initial order '" + spec + "'; expected random:SEEDxCOUNT");
    }
    if (out.count == 0) throw ConfigError("random initial order count must be positive");
    return out;
  }
  throw ConfigError("unknown initial order '" + spec + "'");
}

struct EndpointSettings {
  llm::ModelEndpointConfig config;
  std::string api_key_env = llm::kApiKeyEnv;
};

inline EndpointSettings endpoint_from_json(const nlohmann::json& j) {
  EndpointSettings e;
  auto& c = e.config;
  try {
    llm::apply_environment(c);
    if (j.contains("base_url")) c.base_url = j.at("base_url").get<std::string>();
    c.model_name = j.value("model", c.model_name);
    e.api_key_env = j.value("api_key_env", e.api_key_env);
    if (const char* key = std::getenv(e.api_key_env.c_str()); key && *key) c.api_key = key;
    c.temperature = j.value("temperature", c.temperature);
    c.max_output_tokens = j.value("max_output_tokens", c.max_output_tokens);
    c.request_logprobs = j.value("request_logprobs", c.request_logprobs);
    c.top_logprobs = j.value("top_logprobs", c.top_logprobs);
    c.timeout = std::chrono::milliseconds(j.value("timeout_ms", static_cast<long long>(c.timeout.count())));
    c.max_retries = j.value("max_retries", c.max_retries);
    c.backoff_initial =
        std::chrono::milliseconds(j.value("backoff_ms", static_cast<long long>(c.backoff_initial.count())));
    c.assistant_prefill = j.value("assistant_prefill", c.assistant_prefill);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    if (j.contains("extra_body")) c.extra_body = j.at("extra_body");
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(std::string("bad endpoint config: ") + ex.what());
  }
  return e;
}

struct RunConfig {
  std::optional<fs::path> corpus;
  std::optional<fs::path> queries;
  std::optional<fs::path> qrels;
  std::optional<fs::path> cache;
  fs::path output = "rankfusion-out";
  bool icl = false;
  bool calibration = false;
  bool assistant_prefill = false;
  SortAlgorithm algorithm = SortAlgorithm::Heapsort;
  std::string oracle;  // "sim:..." or "endpoint"
  nlohmann::json endpoint = nlohmann::json::object();
  std::string initial = "given";
  bool memoize = true;
  std::string tag = "rankfusion";
  // fuse only
  nlohmann::json settings = nlohmann::json::array();
  nlohmann::json endpoints = nlohmann::json::object();
};

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    if (j.contains("corpus")) c.corpus = j.at("corpus").get<std::string>();
    if (j.contains("queries")) c.queries = j.at("queries").get<std::string>();
    if (j.contains("qrels")) c.qrels = j.at("qrels").get<std::string>();
    if (j.contains("cache")) c.cache = j.at("cache").get<std::string>();
    if (j.contains("output")) c.output = j.at("output").get<std::string>();
    c.icl = j.value("icl", c.icl);
    c.calibration = j.value("calibration", c.calibration);
    c.assistant_prefill = j.value("assistant_prefill", c.assistant_prefill);
    if (j.contains("algorithm")) c.algorithm = sort_algorithm_from_string(j.at("algorithm").get<std::string>());
    c.oracle = j.value("oracle", c.oracle);
    if (j.contains("endpoint")) c.endpoint = j.at("endpoint");
    c.initial = j.value("initial", c.initial);
    c.memoize = j.value("memoize", c.memoize);
    c.tag = j.value("tag", c.tag);
    if (j.contains("settings")) c.settings = j.at("settings");
    if (j.contains("endpoints")) c.endpoints = j.at("endpoints");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline nlohmann::json load_json_file(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
}

inline void require_file(const std::optional<fs::path>& path, const std::string& what) {
  if (!path) throw ConfigError(what + " path is required");
  if (!fs::is_regular_file(*path)) throw ConfigError(what + " not found: " + path->string());
}

/// Queries and their candidate corpora, in query-file (or corpus qid) order.
struct Workload {
  std::vector<Query> queries;
  std::vector<Corpus> corpora;
};

inline Workload load_workload(const RunConfig& c) {
  require_file(c.corpus, "corpus");
  const auto entries = read_corpus_jsonl(*c.corpus);
  Workload w;
  if (c.queries) {
    require_file(c.queries, "queries");
    w.queries = read_queries_jsonl(*c.queries);
  } else {
    std::vector<std::string> seen;
    for (const auto& e : entries) {
      if (e.query_id && std::find(seen.begin(), seen.end(), *e.query_id) == seen.end()) seen.push_back(*e.query_id);
    }
    if (seen.empty()) seen.push_back("q0");
    for (const auto& q : seen) w.queries.push_back(Query{q, ""});
  }
  for (const auto& q : w.queries) {
    auto corpus = corpus_for_query(entries, q.id);
    if (corpus.size() < 2) throw ConfigError("query '" + q.id + "' has fewer than two candidate passages");
    w.corpora.push_back(std::move(corpus));
  }
  return w;
}

/// Oracle factory for one (query, corpus). Owns backends and caches it creates.
class OracleFactory {
 public:
  explicit OracleFactory(const RunConfig& config) {
    if (config.cache) cache_ = std::make_unique<llm::ResponseCache>(*config.cache);
  }

  /// `source` is a "sim:..." spec or an endpoint description.
  OracleFn make(const std::string& source, const nlohmann::json& endpoint_json, const ComparatorConfig& comparator,
                const Query& query, const Corpus& corpus) {
    if (source.starts_with("sim")) {
      const auto spec = parse_sim_spec(source);
      auto owned = std::make_shared<Corpus>(sim::with_pseudo_relevance(corpus, spec.seed));
      auto oracle = std::make_shared<sim::SimOracle>(*owned, spec.bias, spec.seed, comparator.use_calibration);
      return [owned, oracle](const std::string& i, const std::string& j) { return (*oracle)(i, j); };
    }
    auto& backend = backend_for(source, endpoint_json, comparator.use_calibration);
    return make_comparator_oracle(query, corpus, comparator, backend);
  }

  llm::CacheStats cache_stats() const {
    llm::CacheStats total;
    for (const auto& [_, b] : backends_) {
      const auto s = b->cache_stats();
      total.hits += s.hits;
      total.misses += s.misses;
      total.corrupt_entries += s.corrupt_entries;
    }
    return total;
  }

 private:
  llm::LlmBackend& backend_for(const std::string& label, const nlohmann::json& endpoint_json, bool calibration) {
    auto it = backends_.find(label);
    if (it != backends_.end()) return *it->second;
    auto settings = endpoint_from_json(endpoint_json);
    try {
      llm::validate(settings.config, calibration);
    } catch (const Error& e) {
      throw ConfigError(std::string("endpoint '") + label + "': " + e.what());
    }
    auto backend = std::make_unique<llm::LlmBackend>(settings.config, cache_.get());
    auto& ref = *backend;
    backends_.emplace(label, std::move(backend));
    return ref;
  }

  std::unique_ptr<llm::ResponseCache> cache_;
  std::map<std::string, std::unique_ptr<llm::LlmBackend>> backends_;
};

inline ComparatorConfig comparator_config(bool icl, bool calibration, bool prefill) {
  ComparatorConfig c;
  c.use_icl = icl;
  c.use_calibration = calibration;
  c.assistant_prefill = prefill;
  if (icl) c.icl_example = default_icl_example();
  return c;
}

namespace detail {

inline std::string suffix(std::size_t k, std::size_t count) { return count > 1 ? "_" + std::to_string(k) : ""; }

/// Initial orders for one query; hard lists are built with `oracle` and their
/// allpair judgments appended to `allpair_records`.
inline std::vector<RankingList> initial_orders(const InitialOrderSpec& spec, const Query& query, const Corpus& corpus,
                                               const OracleFn& oracle, std::string& allpair_records) {
  const auto base = initial_ranking(query.id, corpus);
  switch (spec.kind) {
    case InitialOrderSpec::Kind::FileOrder: return {base};
    case InitialOrderSpec::Kind::Random: return sim::random_initial_orders(base, sim::mix(spec.seed, sim::fnv1a(query.id)), spec.count);
    case InitialOrderSpec::Kind::HardList: {
      auto all = allpair_rank(base, oracle);
      allpair_records += records_to_jsonl(all.trace.records, query.id);
      return {invert_ranking(all.ranking)};
    }
  }
  return {base};
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

inline void validate_oracle_source(const RunConfig& c) {
  if (c.oracle.empty()) throw ConfigError("an oracle is required: 'sim:...' or 'endpoint'");
  if (c.oracle.starts_with("sim")) {
    parse_sim_spec(c.oracle);
    if (!c.endpoint.empty()) throw ConfigError("exactly one oracle source: sim oracle given together with an endpoint");
  } else if (c.oracle != "endpoint") {
    throw ConfigError("unknown oracle '" + c.oracle + "'");
  }
}

/// Writes run.trec, trace.jsonl, summary.json (deterministic) and timing.json.
inline nlohmann::json cmd_rank(const RunConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  validate_oracle_source(config);
  const auto initial_spec = parse_initial_spec(config.initial);
  const auto workload = load_workload(config);
  OracleFactory factory(config);
  const auto comparator = comparator_config(config.icl, config.calibration, config.assistant_prefill);
  const SortOptions sort_options{config.memoize};

  const std::size_t count = initial_spec.kind == InitialOrderSpec::Kind::Random ? initial_spec.count : 1;
  std::vector<std::vector<RankingList>> runs(count);
  std::string trace;
  std::string allpair;
  nlohmann::json per_query = nlohmann::json::array();
  std::size_t total_calls = 0;

  for (std::size_t q = 0; q < workload.queries.size(); ++q) {
    const auto& query = workload.queries[q];
    const auto& corpus = workload.corpora[q];
    auto oracle = factory.make(config.oracle, config.endpoint, comparator, query, corpus);
    const auto orders = detail::initial_orders(initial_spec, query, corpus, oracle, allpair);
    for (std::size_t k = 0; k < orders.size(); ++k) {
      auto [ranking, sort_trace] = run_ranker(config.algorithm, orders[k], oracle, sort_options);
      for (const auto& r : sort_trace.records) {
        auto j = to_json(r);
        j["qid"] = query.id;
        if (count > 1) j["order"] = k;
        trace += j.dump() + "\n";
      }
      per_query.push_back({{"qid", query.id}, {"order", k}, {"oracle_calls", sort_trace.oracle_calls}});
      total_calls += sort_trace.oracle_calls;
      runs[k].push_back(std::move(ranking));
    }
  }

  fs::create_directories(config.output);
  for (std::size_t k = 0; k < count; ++k) {
    write_file_atomic(config.output / ("run" + detail::suffix(k, count) + ".trec"), format_run(runs[k], config.tag));
  }
  write_file_atomic(config.output / "trace.jsonl", trace);
  if (!allpair.empty()) write_file_atomic(config.output / "allpair.jsonl", allpair);
  const nlohmann::json summary = {{"algorithm", to_string(config.algorithm)},
                                  {"oracle", config.oracle},
                                  {"icl", config.icl},
                                  {"calibration", config.calibration},
                                  {"initial", config.initial},
                                  {"runs", per_query},
                                  {"total_oracle_calls", total_calls}};
  write_file_atomic(config.output / "summary.json", summary.dump(2) + "\n");
  const auto stats = factory.cache_stats();
  nlohmann::json timing = {{"wall_time_seconds", detail::seconds_since(t0)},
                           {"cache_hits", stats.hits},
                           {"cache_misses", stats.misses}};
  write_file_atomic(config.output / "timing.json", timing.dump(2) + "\n");
  return summary;
}

inline std::vector<RankSetting> parse_settings(const RunConfig& config) {
  if (!config.settings.is_array() || config.settings.empty()) throw ConfigError("fuse needs at least one setting");
  std::vector<RankSetting> out;
  try {
    for (const auto& s : config.settings) {
      RankSetting r;
      r.label = s.at("label").get<std::string>();
      r.algorithm = sort_algorithm_from_string(s.value("algorithm", std::string("heapsort")));
      r.comparator = comparator_config(s.value("icl", config.icl), s.value("calibration", config.calibration),
                                       s.value("assistant_prefill", config.assistant_prefill));
      r.endpoint = s.value("endpoint", config.oracle);
      if (r.label.empty() || r.label.find('/') != std::string::npos) {
        throw ConfigError("setting label '" + r.label + "' must be non-empty and contain no '/'");
      }
      for (const auto& prior : out) {
        if (prior.label == r.label) throw ConfigError("duplicate setting label '" + r.label + "'");
      }
      if (r.endpoint.empty()) throw ConfigError("setting '" + r.label + "' names no endpoint or oracle");
      if (!r.endpoint.starts_with("sim") && !config.endpoints.contains(r.endpoint)) {
        throw ConfigError("setting '" + r.label + "' references unknown endpoint '" + r.endpoint + "'");
      }
      out.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad settings: ") + e.what());
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return out;
}

/// Resolves an endpoint label to a sim spec string or an endpoint object.
inline std::pair<std::string, nlohmann::json> resolve_endpoint(const RunConfig& config, const std::string& label) {
  if (label.starts_with("sim")) return {label, nlohmann::json::object()};
  const auto& e = config.endpoints.at(label);
  if (e.is_string()) return {e.get<std::string>(), nlohmann::json::object()};
  if (e.contains("oracle")) return {e.at("oracle").get<std::string>(), nlohmann::json::object()};
  return {label, e};
}

/// Writes fused.trec, constituents/<label>.trec, traces/<label>.jsonl and borda.json.
/// On a failed constituent, writes what completed plus failure.json and rethrows.
inline nlohmann::json cmd_fuse(const RunConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto settings = parse_settings(config);
  const auto initial_spec = parse_initial_spec(config.initial);
  const auto workload = load_workload(config);
  OracleFactory factory(config);
  FuseOptions options;
  options.sort.memoize = config.memoize;

  const std::size_t count = initial_spec.kind == InitialOrderSpec::Kind::Random ? initial_spec.count : 1;
  std::vector<std::vector<RankingList>> fused(count);
  std::map<std::string, std::vector<std::vector<RankingList>>> constituents;
  std::map<std::string, std::string> traces;
  for (const auto& s : settings) constituents[s.label].resize(count);
  std::string allpair;
  nlohmann::json report_queries = nlohmann::json::array();

  const auto write_constituents = [&]() {
    for (const auto& [label, per_order] : constituents) {
      for (std::size_t k = 0; k < count; ++k) {
        if (per_order[k].empty()) continue;
        write_file_atomic(config.output / "constituents" / (label + detail::suffix(k, count) + ".trec"),
                          format_run(per_order[k], config.tag + "-" + label));
      }
    }
    for (const auto& [label, text] : traces) write_file_atomic(config.output / "traces" / (label + ".jsonl"), text);
  };

  for (std::size_t q = 0; q < workload.queries.size(); ++q) {
    const auto& query = workload.queries[q];
    const auto& corpus = workload.corpora[q];
    const OracleResolver resolve = [&](const RankSetting& s) {
      const auto [source, endpoint_json] = resolve_endpoint(config, s.endpoint);
      return factory.make(source, endpoint_json, s.comparator, query, corpus);
    };
    const auto first_oracle = resolve(settings.front());
    const auto orders = detail::initial_orders(initial_spec, query, corpus, first_oracle, allpair);
    for (std::size_t k = 0; k < orders.size(); ++k) {
      FusionResult result;
      try {
        result = fuse(orders[k], settings, resolve, options);
      } catch (const FusionError& e) {
        for (const auto& p : e.completed()) constituents[p.source_label][k].push_back(p.ranking);
        write_constituents();
        const nlohmann::json failure = {{"failed_setting", e.failed_setting()},
                                        {"qid", query.id},
                                        {"order", k},
                                        {"error", e.what()}};
        write_file_atomic(config.output / "failure.json", failure.dump(2) + "\n");
        throw;
      }
      nlohmann::json scores = nlohmann::json::object();
      for (const auto& s : result.aggregate.scores) scores[s.passage_id] = s.score;
      nlohmann::json ties = nlohmann::json::array();
      for (const auto& t : result.aggregate.tie_breaks) {
        ties.push_back({{"ahead", t.ahead}, {"behind", t.behind}, {"score", t.score}});
      }
      nlohmann::json cons = nlohmann::json::object();
      for (std::size_t s = 0; s < settings.size(); ++s) {
        const auto& label = settings[s].label;
        cons[label] = {{"ranking", result.proposals[s].ranking.order()},
                       {"oracle_calls", result.traces[s].oracle_calls}};
        constituents[label][k].push_back(result.proposals[s].ranking);
        for (const auto& r : result.traces[s].records) {
          auto j = to_json(r);
          j["qid"] = query.id;
          if (count > 1) j["order"] = k;
          traces[label] += j.dump() + "\n";
        }
      }
      report_queries.push_back({{"qid", query.id},
                                {"order", k},
                                {"aggregate", result.aggregate.ranking.order()},
                                {"borda_scores", scores},
                                {"tie_breaks", ties},
                                {"constituents", cons}});
      fused[k].push_back(result.aggregate.ranking);
    }
  }

  fs::create_directories(config.output);
  for (std::size_t k = 0; k < count; ++k) {
    write_file_atomic(config.output / ("fused" + detail::suffix(k, count) + ".trec"),
                      format_run(fused[k], config.tag + "-fused"));
  }
  write_constituents();
  if (!allpair.empty()) write_file_atomic(config.output / "allpair.jsonl", allpair);
  nlohmann::json labels = nlohmann::json::array();
  for (const auto& s : settings) {
    labels.push_back({{"label", s.label},
                      {"algorithm", to_string(s.algorithm)},
                      {"endpoint", s.endpoint},
                      {"icl", s.comparator.use_icl},
                      {"calibration", s.comparator.use_calibration}});
  }
  const nlohmann::json report = {{"settings", labels}, {"initial", config.initial}, {"queries", report_queries}};
  write_file_atomic(config.output / "borda.json", report.dump(2) + "\n");
  write_file_atomic(config.output / "timing.json",
                    nlohmann::json({{"wall_time_seconds", detail::seconds_since(t0)}}).dump(2) + "\n");
  return report;
}

/// Triad census, logit discrepancy and order-inconsistency rate per query.
inline nlohmann::json cmd_analyze(const std::vector<fs::path>& traces) {
  if (traces.empty()) throw ConfigError("analyze needs at least one trace file");
  std::vector<TraceLine> lines;
  for (const auto& path : traces) {
    if (!fs::is_regular_file(path)) throw ConfigError("trace not found: " + path.string());
    auto more = read_trace_jsonl(path);
    lines.insert(lines.end(), more.begin(), more.end());
  }
  nlohmann::json per_query = nlohmann::json::array();
  std::vector<TriadCensus> censuses;
  std::vector<PreferenceRecord> all;
  for (const auto& [qid, records] : group_by_query(lines)) {
    all.insert(all.end(), records.begin(), records.end());
    nlohmann::json q = {{"qid", qid}, {"records", records.size()}};
    q["order_inconsistency_rate"] = order_inconsistency_rate(records);
    try {
      const auto stats = mean_choice_logits(records);
      q["mean_logit_a"] = stats.mean_logit_a;
      q["mean_logit_b"] = stats.mean_logit_b;
      q["discrepancy"] = stats.discrepancy;
      q["mean_call_discrepancy"] = stats.mean_call_discrepancy;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::MissingLogits) throw;
    }
    std::set<std::string> ids;
    for (const auto& r : records) ids.insert(r.i), ids.insert(r.j);
    try {
      const auto census = triad_census(build_tournament(records, ids.size()));
      censuses.push_back(census);
      q["census"] = {{"circular", census.circular},
                     {"type1", census.type1},
                     {"type2", census.type2},
                     {"total_inconsistent", census.total_inconsistent},
                     {"total_triads", census.total_triads}};
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::IncompletePairSet && e.kind() != ErrorKind::DuplicatePair) throw;
      q["census"] = nullptr;
      q["census_skipped"] = e.what();
    }
    per_query.push_back(std::move(q));
  }
  nlohmann::json out = {{"queries", per_query}};
  if (!censuses.empty()) {
    const auto mean = mean_census(censuses);
    out["mean_census"] = {{"circular", mean.circular},
                          {"type1", mean.type1},
                          {"type2", mean.type2},
                          {"total_inconsistent", mean.total_inconsistent},
                          {"queries", mean.queries}};
  }
  if (!all.empty()) out["order_inconsistency_rate"] = order_inconsistency_rate(all);
  return out;
}

/// NDCG@k per run file and, with two or more run files, KT_avg across them.
inline nlohmann::json cmd_eval(const fs::path& qrels_path, const std::vector<fs::path>& runs, std::size_t k,
                               GainMode gain) {
  if (!fs::is_regular_file(qrels_path)) throw ConfigError("qrels not found: " + qrels_path.string());
  if (runs.empty()) throw ConfigError("eval needs at least one run file");
  if (k == 0) throw ConfigError("k must be positive");
  const auto qrels = parse_qrels(qrels_path);
  nlohmann::json per_run = nlohmann::json::array();
  std::map<std::string, std::vector<RankingList>> by_query;
  for (const auto& path : runs) {
    if (!fs::is_regular_file(path)) throw ConfigError("run file not found: " + path.string());
    const auto rankings = read_run(path);
    nlohmann::json queries = nlohmann::json::object();
    double sum = 0.0;
    for (const auto& r : rankings) {
      const double v = ndcg_at_k(r, qrels, k, gain);
      queries[r.query_id()] = v;
      sum += v;
      by_query[r.query_id()].push_back(r);
    }
    per_run.push_back({{"run", path.string()},
                       {"ndcg_at_k", rankings.empty() ? 0.0 : sum / double(rankings.size())},
                       {"queries", queries}});
  }
  nlohmann::json out = {{"k", k},
                        {"gain", gain == GainMode::Exponential ? "exponential" : "linear"},
                        {"runs", per_run},
                        {"query_count", by_query.size()},
                        {"initial_order_count", runs.size()}};
  if (runs.size() >= 2) {
    out["kt_avg"] = avg_kendall_tau(by_query);
    // Pairwise KT between whole runs, averaged over queries.
    nlohmann::json matrix = nlohmann::json::array();
    for (std::size_t p = 0; p < runs.size(); ++p) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t q = 0; q < runs.size(); ++q) {
        double s = 0.0;
        for (const auto& [_, lists] : by_query) s += kendall_tau_distance(lists[p], lists[q]);
        row.push_back(s / double(by_query.size()));
      }
      matrix.push_back(row);
    }
    out["kt_pairwise"] = matrix;
  }
  return out;
}

inline std::pair<sim::SimulationReport, nlohmann::json> cmd_simulate(const std::optional<fs::path>& config_path) {
  sim::SimulationConfig config;
  if (config_path) {
    try {
      config = sim::simulation_config_from_json(load_json_file(*config_path));
    } catch (const Error& e) {
      throw ConfigError(e.what());
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("bad simulation config: ") + e.what());
    }
  }
  auto report = sim::run_simulation(config);
  auto j = sim::to_json(report);
  return {std::move(report), std::move(j)};
}

}  // namespace rankfusion::app
