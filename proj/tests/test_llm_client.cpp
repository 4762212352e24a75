#include <atomic>
#include <filesystem>
#include <thread>

#include <gtest/gtest.h>

#include "rankfusion/llm_client.hpp"
#include "rankfusion/sorting.hpp"

using namespace rankfusion;
using namespace rankfusion::llm;
using nlohmann::json;

namespace {

json chat_response(const std::string& text, const json& tokens) {
  json choice = {{"index", 0}, {"message", {{"role", "assistant"}, {"content", text}}}};
  if (!tokens.is_null()) choice["logprobs"] = {{"content", tokens}};
  return {{"id", "x"}, {"choices", json::array({choice})}};
}

json token(const std::string& tok, double lp, json top = json::array()) {
  return {{"token", tok}, {"logprob", lp}, {"top_logprobs", std::move(top)}};
}

json passage_a_tokens() {
  return json::array({token("Passage", -0.01), token(":", -0.01),
                      token(" A", -0.2, json::array({{{"token", " A"}, {"logprob", -0.2}},
                                                     {{"token", " B"}, {"logprob", -1.8}},
                                                     {{"token", " The"}, {"logprob", -4.0}}}))});
}

/// Local chat-completions endpoint whose behaviour is switched per test.
class MockEndpoint {
 public:
  enum class Mode { Ok, RateLimit, NoLogprobs, Unauthorized, ServerErrorThenOk, BadRequest };

  MockEndpoint() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = ++hits;
      last_body = json::parse(req.body);
      last_auth = req.get_header_value("Authorization");
      switch (mode.load()) {
        case Mode::RateLimit: res.status = 429; return;
        case Mode::Unauthorized: res.status = 401; return;
        case Mode::BadRequest:
          res.status = 400;
          res.set_content("bad", "text/plain");
          return;
        case Mode::ServerErrorThenOk:
          if (n == 1) {
            res.status = 503;
            return;
          }
          break;
        case Mode::NoLogprobs:
          res.set_content(chat_response("Passage: A", nullptr).dump(), "application/json");
          return;
        case Mode::Ok: break;
      }
      res.set_content(chat_response("Passage: A", passage_a_tokens()).dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockEndpoint() {
    server_.stop();
    thread_.join();
  }

  ModelEndpointConfig config() const {
    ModelEndpointConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    c.model_name = "mock-model";
    c.max_retries = 2;
    c.backoff_initial = std::chrono::milliseconds(1);
    c.timeout = std::chrono::milliseconds(2000);
    return c;
  }

  std::atomic<Mode> mode{Mode::Ok};
  std::atomic<int> hits{0};
  json last_body;
  std::string last_auth;

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

const PromptMessages kMessages{{Role::User, "Which passage?"}};

ErrorKind error_kind(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::InvalidArgument;
}

std::filesystem::path temp_cache(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("rankfusion_" + name + ".jsonl");
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST(LlmClient, ExtractsDecisionTokenAlternatives) {
  MockEndpoint mock;
  auto c = mock.config();
  c.api_key = "secret";
  const auto r = complete(kMessages, c);
  EXPECT_EQ(r.text, "Passage: A");
  ASSERT_TRUE(r.first_token_alternatives);
  const auto d = extract_choice_logits(r);
  EXPECT_EQ(d.logit_a, -0.2);
  EXPECT_EQ(d.logit_b, -1.8);
  EXPECT_EQ(mock.last_body["temperature"], 0.0);
  EXPECT_EQ(mock.last_body["logprobs"], true);
  EXPECT_EQ(mock.last_body["top_logprobs"], 5);
  EXPECT_EQ(mock.last_body["model"], "mock-model");
  EXPECT_EQ(mock.last_auth, "Bearer secret");
}

TEST(LlmClient, RateLimitedAfterRetries) {
  MockEndpoint mock;
  mock.mode = MockEndpoint::Mode::RateLimit;
  EXPECT_EQ(error_kind([&] { complete(kMessages, mock.config()); }), ErrorKind::RateLimited);
  EXPECT_EQ(mock.hits, 3);
}

TEST(LlmClient, RetriesServerErrors) {
  MockEndpoint mock;
  mock.mode = MockEndpoint::Mode::ServerErrorThenOk;
  EXPECT_EQ(complete(kMessages, mock.config()).text, "Passage: A");
  EXPECT_EQ(mock.hits, 2);
}

TEST(LlmClient, MissingLogprobsIsMalformed) {
  MockEndpoint mock;
  mock.mode = MockEndpoint::Mode::NoLogprobs;
  EXPECT_EQ(error_kind([&] { complete(kMessages, mock.config()); }), ErrorKind::MalformedResponse);
  auto text_only = mock.config();
  text_only.request_logprobs = false;
  EXPECT_FALSE(complete(kMessages, text_only).first_token_alternatives.has_value());
}

TEST(LlmClient, AuthAndClientErrorsAreNotRetried) {
  MockEndpoint mock;
  mock.mode = MockEndpoint::Mode::Unauthorized;
  EXPECT_EQ(error_kind([&] { complete(kMessages, mock.config()); }), ErrorKind::AuthFailure);
  EXPECT_EQ(mock.hits, 1);
  mock.mode = MockEndpoint::Mode::BadRequest;
  EXPECT_EQ(error_kind([&] { complete(kMessages, mock.config()); }), ErrorKind::HttpError);
  EXPECT_EQ(mock.hits, 2);
}

TEST(LlmClient, UnreachableEndpoint) {
  ModelEndpointConfig c;
  c.base_url = "http://127.0.0.1:1/v1";
  c.model_name = "m";
  c.max_retries = 1;
  c.backoff_initial = std::chrono::milliseconds(1);
  const auto kind = error_kind([&] { complete(kMessages, c); });
  EXPECT_TRUE(kind == ErrorKind::HttpError || kind == ErrorKind::Timeout);
}

TEST(LlmClient, CacheHitMakesNoNetworkCall) {
  MockEndpoint mock;
  const auto path = temp_cache("hit");
  ResponseCache cache(path);
  CacheStats stats;
  const auto first = cached_complete(kMessages, mock.config(), cache, &stats);
  const auto second = cached_complete(kMessages, mock.config(), cache, &stats);
  EXPECT_EQ(mock.hits, 1);
  EXPECT_EQ(stats.hits, 1u);
  EXPECT_EQ(first.first_token_alternatives, second.first_token_alternatives);

  // A fresh cache object reads the same file.
  ResponseCache reloaded(path);
  cached_complete(kMessages, mock.config(), reloaded);
  EXPECT_EQ(mock.hits, 1);

  cache.clear();
  cached_complete(kMessages, mock.config(), cache);
  EXPECT_EQ(mock.hits, 2);

  auto warmer = mock.config();
  warmer.temperature = 0.7;
  EXPECT_NE(cache_key(kMessages, warmer), cache_key(kMessages, mock.config()));
  cached_complete(kMessages, warmer, cache);
  EXPECT_EQ(mock.hits, 3);
  EXPECT_EQ(cache.size(), 2u);
  std::filesystem::remove(path);
}

TEST(LlmClient, CorruptCacheEntryIsRefetched) {
  MockEndpoint mock;
  const auto path = temp_cache("corrupt");
  const auto key = cache_key(kMessages, mock.config());
  {
    std::ofstream out(path);
    out << json({{"key", key}, {"response", "{not json"}}).dump() << "\n" << "garbage line\n";
  }
  ResponseCache cache(path);
  EXPECT_EQ(cache.corrupt_lines(), 1u);
  CacheStats stats;
  EXPECT_EQ(cached_complete(kMessages, mock.config(), cache, &stats).text, "Passage: A");
  EXPECT_EQ(stats.corrupt_entries, 1u);
  EXPECT_EQ(mock.hits, 1);
  cached_complete(kMessages, mock.config(), cache, &stats);
  EXPECT_EQ(mock.hits, 1);
  std::filesystem::remove(path);
}

TEST(LlmClient, BackendDrivesComparator) {
  MockEndpoint mock;
  const auto path = temp_cache("backend");
  ResponseCache cache(path);
  LlmBackend backend(mock.config(), &cache);
  const Query q{"q", "query"};
  const Corpus corpus({{"x", "passage x", {}}, {"y", "passage y", {}}});
  ComparatorConfig cc;
  cc.use_calibration = true;
  // The mock always answers A, so both directions conflict and calibration gives 0.5.
  const auto r = compare(q, corpus.at("x"), corpus.at("y"), cc, backend);
  EXPECT_EQ(r.outcome, PreferenceOutcome::Tie);
  EXPECT_DOUBLE_EQ(*r.p_ij, 0.5);
  EXPECT_EQ(mock.hits, 2);
  compare(q, corpus.at("x"), corpus.at("y"), cc, backend);
  EXPECT_EQ(mock.hits, 2);
  EXPECT_EQ(backend.cache_stats().hits, 2u);
  std::filesystem::remove(path);
}

TEST(LlmClient, DecisionPosition) {
  const json tokens = json::array({token("A", -1.0), token("Passage", -0.1), token(":", -0.1), token("B", -0.3)});
  EXPECT_EQ(llm::detail::decision_position(tokens, false), 3u);
  EXPECT_EQ(llm::detail::decision_position(tokens, true), 0u);
  EXPECT_EQ(llm::detail::decision_position(json::array({token("Sure", -1.0), token(" B", -0.2)}), false), 1u);
}

TEST(LlmClient, ConfigValidation) {
  ModelEndpointConfig c;
  EXPECT_THROW(validate(c), Error);
  c.model_name = "m";
  EXPECT_NO_THROW(validate(c));
  c.request_logprobs = false;
  EXPECT_NO_THROW(validate(c));
  EXPECT_THROW(validate(c, true), Error);
  EXPECT_EQ(split_base_url("https://api.example.com/v1/").second, "/v1");
  EXPECT_EQ(split_base_url("http://h:8000").first, "http://h:8000");
  EXPECT_THROW(split_base_url("localhost/v1"), Error);
}

TEST(LlmClient, ConcurrentRequestsAreCapped) {
  MockEndpoint mock;
  auto c = mock.config();
  c.max_in_flight = 2;
  const auto path = temp_cache("concurrent");
  ResponseCache cache(path);
  LlmBackend backend(c, &cache);
  std::vector<std::thread> threads;
  for (int k = 0; k < 8; ++k) {
    threads.emplace_back([&, k] { backend.complete({{Role::User, "prompt " + std::to_string(k % 4)}}); });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(cache.size(), 4u);
  const auto s = backend.cache_stats();
  EXPECT_EQ(s.hits + s.misses, 8u);
  std::filesystem::remove(path);
}
