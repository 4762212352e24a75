#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rankfusion/app.hpp"

namespace {

using namespace rankfusion;
namespace fs = std::filesystem;

struct CommonFlags {
  std::string config;
  std::string corpus, queries, cache, output, algo, oracle, initial, tag;
  std::string base_url, model;
  bool icl = false, no_icl = false, calibration = false, no_calibration = false, no_memo = false;
  bool prefill = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("-c,--config", f.config, "JSON run config; flags override its fields");
  cmd->add_option("--corpus", f.corpus, "passages as JSON lines");
  cmd->add_option("--queries", f.queries, "queries as JSON lines");
  cmd->add_option("--cache", f.cache, "response cache file");
  cmd->add_option("-o,--output", f.output, "output directory");
  cmd->add_option("--algo", f.algo, "bubblesort | heapsort | allpair");
  cmd->add_option("--oracle", f.oracle, "sim:seed=N[,beta=..,sigma=..,gamma=..] or endpoint");
  cmd->add_option("--initial", f.initial, "given | bm25-file-order | hard-list | random:SEEDxCOUNT");
  cmd->add_option("--tag", f.tag, "run tag written to TREC files");
  cmd->add_option("--base-url", f.base_url, "endpoint base URL");
  cmd->add_option("--model", f.model, "endpoint model name");
  cmd->add_flag("--icl", f.icl, "prepend the in-context example");
  cmd->add_flag("--no-icl", f.no_icl);
  cmd->add_flag("--calibration", f.calibration, "combine both directions through choice logits");
  cmd->add_flag("--no-calibration", f.no_calibration);
  cmd->add_flag("--prefill", f.prefill, "end the prompt with an assistant 'Passage: ' prefix");
  cmd->add_flag("--no-memo", f.no_memo, "ask the oracle again for pairs already judged");
}

app::RunConfig resolve_config(const CommonFlags& f) {
  app::RunConfig c;
  if (!f.config.empty()) {
    c = app::run_config_from_json(app::load_json_file(f.config));
    // Relative paths inside a config file are relative to the file.
    const auto base = fs::path(f.config).parent_path();
    const auto rebase = [&](std::optional<fs::path>& p) {
      if (p && p->is_relative()) p = base / *p;
    };
    rebase(c.corpus);
    rebase(c.queries);
    rebase(c.qrels);
    rebase(c.cache);
  }
  if (!f.corpus.empty()) c.corpus = f.corpus;
  if (!f.queries.empty()) c.queries = f.queries;
  if (!f.cache.empty()) c.cache = f.cache;
  if (!f.output.empty()) c.output = f.output;
  if (!f.algo.empty()) {
    try {
      c.algorithm = sort_algorithm_from_string(f.algo);
    } catch (const Error& e) {
      throw app::ConfigError(e.what());
    }
  }
  if (!f.oracle.empty()) c.oracle = f.oracle;
  if (!f.initial.empty()) c.initial = f.initial;
  if (!f.tag.empty()) c.tag = f.tag;
  if (!f.base_url.empty()) c.endpoint["base_url"] = f.base_url;
  if (!f.model.empty()) c.endpoint["model"] = f.model;
  if (!f.base_url.empty() || !f.model.empty()) {
    if (c.oracle.empty()) c.oracle = "endpoint";
  }
  if (f.icl) c.icl = true;
  if (f.no_icl) c.icl = false;
  if (f.calibration) c.calibration = true;
  if (f.no_calibration) c.calibration = false;
  if (f.prefill) c.assistant_prefill = true;
  if (f.no_memo) c.memoize = false;
  return c;
}

void emit(const nlohmann::json& j, const std::string& output) {
  const auto text = j.dump(2) + "\n";
  if (output.empty()) {
    std::cout << text;
  } else {
    write_file_atomic(output, text);
  }
}

void report_error(const std::string& label, const std::string& what, const nlohmann::json& extra = nullptr) {
  nlohmann::json j = {{"error", label}, {"message", what}};
  if (!extra.is_null()) j.update(extra);
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Pairwise LLM reranking with calibration and rank fusion"};
  cli.require_subcommand(1);

  CommonFlags rank_flags;
  auto* rank = cli.add_subcommand("rank", "rank each query's passages with one setting");
  add_common(rank, rank_flags);

  CommonFlags fuse_flags;
  auto* fuse = cli.add_subcommand("fuse", "rank under several settings and Borda-fuse the lists");
  add_common(fuse, fuse_flags);

  std::vector<std::string> traces;
  std::string analyze_out;
  auto* analyze = cli.add_subcommand("analyze", "triad census, logit discrepancy and order inconsistency");
  analyze->add_option("traces", traces, "trace JSON-lines files")->required();
  analyze->add_option("-o,--output", analyze_out, "write the JSON report here instead of stdout");

  std::string qrels;
  std::vector<std::string> runs;
  std::size_t k = 10;
  std::string gain = "exponential";
  std::string eval_out;
  auto* eval = cli.add_subcommand("eval", "NDCG@k per run and KT_avg across runs");
  eval->add_option("--qrels", qrels, "TREC qrels")->required();
  eval->add_option("runs", runs, "TREC run files, one per initial order")->required();
  eval->add_option("-k", k, "NDCG cutoff");
  eval->add_option("--gain", gain, "exponential | linear")->check(CLI::IsMember({"exponential", "linear"}));
  eval->add_option("-o,--output", eval_out, "write the JSON report here instead of stdout");

  std::string sim_config;
  std::string sim_out;
  auto* simulate = cli.add_subcommand("simulate", "offline volatility study on the synthetic oracle");
  simulate->add_option("-c,--config", sim_config, "simulation config JSON (bundled defaults otherwise)");
  simulate->add_option("-o,--output", sim_out, "directory for table.md and report.json");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? app::kExitOk : app::kExitConfig;
  }

  try {
    if (*rank) {
      const auto summary = app::cmd_rank(resolve_config(rank_flags));
      std::cout << "total oracle calls: " << summary.at("total_oracle_calls") << "\n";
    } else if (*fuse) {
      const auto config = resolve_config(fuse_flags);
      app::cmd_fuse(config);
      std::cout << "wrote " << config.output.string() << "\n";
    } else if (*analyze) {
      std::vector<fs::path> paths(traces.begin(), traces.end());
      emit(app::cmd_analyze(paths), analyze_out);
    } else if (*eval) {
      std::vector<fs::path> paths(runs.begin(), runs.end());
      emit(app::cmd_eval(qrels, paths, k, gain == "linear" ? GainMode::Linear : GainMode::Exponential), eval_out);
    } else if (*simulate) {
      std::optional<fs::path> path;
      if (!sim_config.empty()) path = sim_config;
      const auto [report, json] = app::cmd_simulate(path);
      const auto table = sim::format_table(report);
      std::cout << table;
      if (!sim_out.empty()) {
        fs::create_directories(sim_out);
        write_file_atomic(fs::path(sim_out) / "table.md", table);
        write_file_atomic(fs::path(sim_out) / "report.json", json.dump(2) + "\n");
      }
    }
  } catch (const app::ConfigError& e) {
    report_error("ConfigError", e.what());
    return app::kExitConfig;
  } catch (const FusionError& e) {
    report_error(std::string(to_string(e.kind())), e.what(), {{"failed_setting", e.failed_setting()}});
    return app::kExitRuntime;
  } catch (const ParseError& e) {
    report_error("ParseError", e.what());
    return app::kExitRuntime;
  } catch (const Error& e) {
    report_error(std::string(to_string(e.kind())), e.what());
    return app::kExitRuntime;
  } catch (const std::exception& e) {
    report_error("Error", e.what());
    return app::kExitRuntime;
  }
  return app::kExitOk;
}
