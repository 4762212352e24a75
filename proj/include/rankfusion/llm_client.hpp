#pragma once

// Chat-completions client for OpenAI-compatible endpoints, with choice-token
// log-probability extraction, retry with exponential backoff, a concurrency
// limiter and an append-only response cache.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <string>
#include <thread>
#include <unordered_map>

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include "httplib.h"
#include "rankfusion/completion.hpp"
#include "rankfusion/error.hpp"

namespace rankfusion::llm {

using json = nlohmann::json;

inline constexpr const char* kApiKeyEnv = "RANKFUSION_API_KEY";
inline constexpr const char* kBaseUrlEnv = "RANKFUSION_BASE_URL";

struct ModelEndpointConfig {
  std::string base_url = "http://localhost:8000/v1";
  std::string model_name;
  std::optional<std::string> api_key;
  double temperature = 0.0;
  int max_output_tokens = 4;
  bool request_logprobs = true;
  int top_logprobs = 5;
  std::chrono::milliseconds timeout{60000};
  int max_retries = 3;
  std::chrono::milliseconds backoff_initial{500};
  // The endpoint continues a trailing assistant message ("Passage: ").
  bool assistant_prefill = false;
  int max_in_flight = 4;
  // Merged into every request body, e.g. server-specific sampling switches.
  json extra_body = json::object();
};

inline void validate(const ModelEndpointConfig& c, bool calibration_enabled = false) {
  if (c.base_url.empty()) throw Error(ErrorKind::InvalidArgument, "base_url is empty");
  if (c.model_name.empty()) throw Error(ErrorKind::InvalidArgument, "model_name is empty");
  if (!(c.temperature >= 0.0)) throw Error(ErrorKind::InvalidArgument, "temperature must be >= 0");
  if (c.max_output_tokens < 1) throw Error(ErrorKind::InvalidArgument, "max_output_tokens must be positive");
  if (c.top_logprobs < 1) throw Error(ErrorKind::InvalidArgument, "top_logprobs must be positive");
  if (c.max_retries < 0) throw Error(ErrorKind::InvalidArgument, "max_retries must be >= 0");
  if (c.max_in_flight < 1) throw Error(ErrorKind::InvalidArgument, "max_in_flight must be positive");
  if (calibration_enabled && (!c.request_logprobs || c.top_logprobs < 2)) {
    throw Error(ErrorKind::InvalidArgument, "calibration needs logprobs with top_logprobs >= 2");
  }
  if (!c.extra_body.is_object()) throw Error(ErrorKind::InvalidArgument, "extra_body must be an object");
}

/// Fills api_key and base_url from the environment when the environment sets them.
inline void apply_environment(ModelEndpointConfig& c) {
  if (const char* key = std::getenv(kApiKeyEnv); key && *key) c.api_key = key;
  if (const char* url = std::getenv(kBaseUrlEnv); url && *url) c.base_url = url;
}

inline json build_request_body(const PromptMessages& messages, const ModelEndpointConfig& c) {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  json body = {{"model", c.model_name},
               {"messages", std::move(msgs)},
               {"temperature", c.temperature},
               {"max_tokens", c.max_output_tokens},
               {"stream", false}};
  if (c.request_logprobs) {
    body["logprobs"] = true;
    body["top_logprobs"] = c.top_logprobs;
  }
  body.update(c.extra_body);
  return body;
}

namespace detail {

inline bool is_choice_token(const std::string& token) {
  const auto n = rankfusion::detail::normalize_token(token);
  return n == "A" || n == "B";
}

/// Index of the generated token that carries the A/B decision.
inline std::size_t decision_position(const json& tokens, bool prefilled) {
  if (prefilled || tokens.empty()) return 0;
  std::string prefix;
  std::optional<std::size_t> first_choice;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const auto token = tokens[k].value("token", std::string());
    if (is_choice_token(token)) {
      if (prefix.find("Passage:") != std::string::npos) return k;
      if (!first_choice) first_choice = k;
    }
    prefix += token;
  }
  return first_choice.value_or(0);
}

}  // namespace detail

/// Reads text and decision-token alternatives from a chat-completions response.
inline CompletionResult parse_completion_response(const json& response, const ModelEndpointConfig& c) {
  try {
    const auto& choice = response.at("choices").at(0);
    CompletionResult result;
    const auto& message = choice.at("message");
    if (message.contains("content") && message.at("content").is_string()) {
      result.text = message.at("content").get<std::string>();
    }
    if (!c.request_logprobs) return result;
    if (!choice.contains("logprobs") || choice.at("logprobs").is_null() ||
        !choice.at("logprobs").contains("content") || !choice.at("logprobs").at("content").is_array() ||
        choice.at("logprobs").at("content").empty()) {
      throw Error(ErrorKind::MalformedResponse, "response carries no token logprobs");
    }
    const auto& tokens = choice.at("logprobs").at("content");
    const auto& decision = tokens.at(detail::decision_position(tokens, c.assistant_prefill));
    std::map<std::string, double> alternatives;
    const auto keep_max = [&](const std::string& token, double lp) {
      auto [it, inserted] = alternatives.emplace(token, lp);
      if (!inserted) it->second = std::max(it->second, lp);
    };
    if (decision.contains("top_logprobs") && decision.at("top_logprobs").is_array()) {
      for (const auto& alt : decision.at("top_logprobs")) {
        keep_max(alt.at("token").get<std::string>(), alt.at("logprob").get<double>());
      }
    }
    keep_max(decision.at("token").get<std::string>(), decision.at("logprob").get<double>());
    result.first_token_alternatives = std::move(alternatives);
    return result;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::MalformedResponse, e.what());
  }
}

/// Splits "https://host:port/v1" into "https://host:port" and "/v1".
inline std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorKind::InvalidArgument, "base_url lacks a scheme: " + base_url);
  const auto path_start = base_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {base_url, ""};
  std::string path = base_url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {base_url.substr(0, path_start), path};
}

/// POSTs the body and returns the raw response text. Retries 429, 5xx and
/// transport failures with exponential backoff.
inline std::string post_chat_completion(const json& body, const ModelEndpointConfig& c) {
  const auto [host, prefix] = split_base_url(c.base_url);
  const std::string path = prefix + "/chat/completions";
  const std::string payload = body.dump();
  auto backoff = c.backoff_initial;
  ErrorKind last_kind = ErrorKind::HttpError;
  std::string last_message;

  for (int attempt = 0; attempt <= c.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    httplib::Client client(host);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(c.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(c.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (c.api_key) headers.emplace("Authorization", "Bearer " + *c.api_key);

    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      const auto err = res.error();
      last_kind = (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) ? ErrorKind::Timeout
                                                                                            : ErrorKind::HttpError;
      last_message = "transport error: " + httplib::to_string(err);
      continue;
    }
    if (res->status == 200) return res->body;
    if (res->status == 401 || res->status == 403) {
      throw Error(ErrorKind::AuthFailure, "endpoint rejected credentials (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status == 429) {
      last_kind = ErrorKind::RateLimited;
      last_message = "HTTP 429 after " + std::to_string(attempt + 1) + " attempt(s)";
      continue;
    }
    if (res->status >= 500) {
      last_kind = ErrorKind::HttpError;
      last_message = "HTTP " + std::to_string(res->status);
      continue;
    }
    throw Error(ErrorKind::HttpError, "HTTP " + std::to_string(res->status) + ": " + res->body);
  }
  throw Error(last_kind, last_message);
}

inline CompletionResult complete(const PromptMessages& messages, const ModelEndpointConfig& c) {
  if (messages.empty()) throw Error(ErrorKind::InvalidArgument, "no messages to send");
  const auto raw = post_chat_completion(build_request_body(messages, c), c);
  json response;
  try {
    response = json::parse(raw);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::MalformedResponse, e.what());
  }
  return parse_completion_response(response, c);
}

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::IoError, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int k = 0; k < len; ++k) {
    out.push_back(kHex[digest[k] >> 4]);
    out.push_back(kHex[digest[k] & 0xF]);
  }
  return out;
}

/// Digest of model name, full prompt and temperature.
inline std::string cache_key(const PromptMessages& messages, const ModelEndpointConfig& c) {
  json msgs = json::array();
  for (const auto& m : messages) msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
  const json keyed = {{"model", c.model_name}, {"messages", std::move(msgs)}, {"temperature", c.temperature}};
  return sha256_hex(keyed.dump());
}

/// Append-only JSON-lines store of raw responses. The last line for a key wins.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path path) : path_(std::move(path)) { load(); }

  std::optional<std::string> get(const std::string& key) const {
    std::shared_lock lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void put(const std::string& key, const std::string& raw_response) {
    std::unique_lock lock(mutex_);
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) throw Error(ErrorKind::IoError, "cannot append to cache '" + path_.string() + "'");
    out << json({{"key", key}, {"response", raw_response}}).dump() << '\n';
    out.flush();
    entries_[key] = raw_response;
  }

  void clear() {
    std::unique_lock lock(mutex_);
    std::error_code ec;
    std::filesystem::remove(path_, ec);
    entries_.clear();
  }

  std::size_t size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
  }
  /// Lines skipped at load time because they did not parse.
  std::size_t corrupt_lines() const noexcept { return corrupt_lines_; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  void load() {
    std::ifstream in(path_);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        const auto j = json::parse(line);
        entries_[j.at("key").get<std::string>()] = j.at("response").get<std::string>();
      } catch (const json::exception&) {
        ++corrupt_lines_;
      }
    }
  }

  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, std::string> entries_;
  std::size_t corrupt_lines_ = 0;
};

struct CacheStats {
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t corrupt_entries = 0;
};

/// Serves from `cache` when possible; a stored response that no longer parses
/// counts as corrupt, is fetched again and overwritten.
inline CompletionResult cached_complete(const PromptMessages& messages, const ModelEndpointConfig& c,
                                        ResponseCache& cache, CacheStats* stats = nullptr) {
  const auto key = cache_key(messages, c);
  if (auto raw = cache.get(key)) {
    try {
      auto result = parse_completion_response(json::parse(*raw), c);
      if (stats) ++stats->hits;
      return result;
    } catch (const std::exception&) {
      if (stats) ++stats->corrupt_entries;
    }
  }
  if (stats) ++stats->misses;
  if (messages.empty()) throw Error(ErrorKind::InvalidArgument, "no messages to send");
  const auto fresh = post_chat_completion(build_request_body(messages, c), c);
  json response;
  try {
    response = json::parse(fresh);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::MalformedResponse, e.what());
  }
  auto result = parse_completion_response(response, c);
  cache.put(key, fresh);
  return result;
}

/// CompletionBackend over an HTTP endpoint. At most `max_in_flight` requests run at once.
class LlmBackend : public CompletionBackend {
 public:
  explicit LlmBackend(ModelEndpointConfig config, ResponseCache* cache = nullptr)
      : config_(std::move(config)), cache_(cache), limiter_(config_.max_in_flight) {
    validate(config_);
  }

  CompletionResult complete(const PromptMessages& messages) override {
    limiter_.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{limiter_};
    if (!cache_) return llm::complete(messages, config_);
    CacheStats local;
    auto result = cached_complete(messages, config_, *cache_, &local);
    std::lock_guard lock(stats_mutex_);
    stats_.hits += local.hits;
    stats_.misses += local.misses;
    stats_.corrupt_entries += local.corrupt_entries;
    return result;
  }

  const ModelEndpointConfig& config() const noexcept { return config_; }

  CacheStats cache_stats() const {
    std::lock_guard lock(stats_mutex_);
    return stats_;
  }

 private:
  ModelEndpointConfig config_;
  ResponseCache* cache_;
  std::counting_semaphore<> limiter_;
  mutable std::mutex stats_mutex_;
  CacheStats stats_;
};

}  // namespace rankfusion::llm
