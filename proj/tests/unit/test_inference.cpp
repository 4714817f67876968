#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "lx/error.hpp"
#include "lx/inference.hpp"
#include "test_support.hpp"

using namespace lx;
using namespace lx::infer;
using lx::testing::chat_body;
using lx::testing::LocalServer;

namespace {

BackendConfig remote_config(const std::string& url) {
  BackendConfig c;
  c.kind = BackendKind::Remote;
  c.endpoint_url = url;
  c.model_name = "test-model";
  c.auth_token = "secret";
  c.retry_base_delay = std::chrono::milliseconds(1);
  c.retry_max_delay = std::chrono::milliseconds(4);
  c.timeout = std::chrono::milliseconds(2000);
  c.price_per_1m_input = 1.5;
  c.price_per_1m_output = 2.0;
  return c;
}

instruct::InstructionRecord joy_record(const std::string& text = "so happy today") {
  return instruct::make_inference_record(default_taxonomy().lookup("joy"), text, "r1");
}

}  // namespace

TEST(Inference, ChatRequestShape) {
  const auto body = nlohmann::json::parse(build_chat_request(joy_record(), remote_config("http://x/v1")));
  EXPECT_EQ(body["model"], "test-model");
  EXPECT_EQ(body["temperature"], 0.0);
  ASSERT_EQ(body["messages"].size(), 2u);
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][1]["content"], "so happy today");
}

TEST(Inference, ParseChatResponse) {
  const auto r = parse_chat_response(chat_body("A", 12, 3));
  EXPECT_EQ(r.content, "A");
  EXPECT_EQ(r.usage.input_tokens, 12);
  EXPECT_EQ(r.usage.output_tokens, 3);
  EXPECT_THROW(parse_chat_response("{}"), Error);
  EXPECT_THROW(parse_chat_response("not json"), Error);
}

TEST(Inference, RemoteSuccessSendsBearerToken) {
  std::string auth;
  LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
    auth = req.get_header_value("Authorization");
    res.set_content(chat_body("A", 20, 1), "application/json");
  });
  RemoteBackend backend(remote_config(server.url()));
  const auto p = backend.classify(joy_record());
  ASSERT_TRUE(p.ok()) << (p.error ? p.error->message : "");
  EXPECT_EQ(*p.label, Label::Present);
  EXPECT_EQ(p.attempt_count, 1);
  EXPECT_EQ(p.usage.input_tokens, 20);
  EXPECT_EQ(auth, "Bearer secret");
}

TEST(Inference, RetriesServerErrorsThenSucceeds) {
  std::atomic<int> calls{0};
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    if (++calls <= 2) {
      res.status = 503;
      return;
    }
    res.set_content(chat_body("B"), "application/json");
  });
  RemoteBackend backend(remote_config(server.url()));
  const auto p = backend.classify(joy_record());
  ASSERT_TRUE(p.ok());
  EXPECT_EQ(*p.label, Label::NotPresent);
  EXPECT_EQ(p.attempt_count, 3);
}

TEST(Inference, RateLimitIsRetried) {
  std::atomic<int> calls{0};
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    if (++calls == 1) {
      res.status = 429;
      return;
    }
    res.set_content(chat_body("A"), "application/json");
  });
  const auto p = RemoteBackend(remote_config(server.url())).classify(joy_record());
  EXPECT_TRUE(p.ok());
  EXPECT_EQ(p.attempt_count, 2);
}

TEST(Inference, ClientErrorIsNotRetried) {
  std::atomic<int> calls{0};
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 401;
    res.set_content("bad key", "text/plain");
  });
  const auto p = RemoteBackend(remote_config(server.url())).classify(joy_record());
  ASSERT_FALSE(p.ok());
  EXPECT_EQ(p.error->code, ErrorCode::HttpError);
  EXPECT_EQ(p.error->http_status, 401);
  EXPECT_EQ(calls.load(), 1);
  try {
    p.value();
    FAIL();
  } catch (const HttpStatusError& e) {
    EXPECT_EQ(e.status(), 401);
  }
}

TEST(Inference, RetriesExhausted) {
  std::atomic<int> calls{0};
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 500;
  });
  auto cfg = remote_config(server.url());
  cfg.max_retries = 2;
  const auto p = RemoteBackend(cfg).classify(joy_record());
  ASSERT_FALSE(p.ok());
  EXPECT_EQ(p.error->code, ErrorCode::RetriesExhausted);
  EXPECT_EQ(calls.load(), 3);
  EXPECT_EQ(p.attempt_count, 3);
}

TEST(Inference, TimeoutWithoutRetries) {
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(600));
    res.set_content(chat_body("A"), "application/json");
  });
  auto cfg = remote_config(server.url());
  cfg.timeout = std::chrono::milliseconds(150);
  cfg.max_retries = 0;
  const auto p = RemoteBackend(cfg).classify(joy_record());
  ASSERT_FALSE(p.ok());
  EXPECT_EQ(p.error->code, ErrorCode::Timeout);
}

TEST(Inference, UnparseableAnswerStrictVsLenient) {
  LocalServer server([&](const httplib::Request&, httplib::Response& res) {
    res.set_content(chat_body("I think so"), "application/json");
  });
  auto cfg = remote_config(server.url());
  const auto strict = RemoteBackend(cfg).classify(joy_record());
  ASSERT_FALSE(strict.ok());
  EXPECT_EQ(strict.error->code, ErrorCode::Unparseable);
  EXPECT_EQ(strict.raw_output, "I think so");
  cfg.decode_mode = instruct::DecodeMode::Lenient;
  const auto lenient = RemoteBackend(cfg).classify(joy_record());
  ASSERT_TRUE(lenient.ok());
  EXPECT_EQ(*lenient.label, Label::NotPresent);
}

TEST(Inference, BatchRespectsConcurrencyBoundAndKeepsOrder) {
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
  LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
    const int now = ++in_flight;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    --in_flight;
    const auto body = nlohmann::json::parse(req.body);
    const std::string text = body["messages"][1]["content"];
    res.set_content(chat_body(text.back() == '0' ? "A" : "B", 100, 2), "application/json");
  });
  auto cfg = remote_config(server.url());
  cfg.max_concurrency = 3;
  RemoteBackend backend(cfg);
  std::vector<instruct::InstructionRecord> records;
  for (int i = 0; i < 24; ++i) records.push_back(joy_record("item " + std::to_string(i % 2)));
  const auto result = classify_batch(records, backend);
  ASSERT_EQ(result.predictions.size(), 24u);
  for (std::size_t i = 0; i < records.size(); ++i) {
    ASSERT_TRUE(result.predictions[i].ok());
    EXPECT_EQ(result.predictions[i].record_ref, i);
    EXPECT_EQ(*result.predictions[i].label, i % 2 == 0 ? Label::Present : Label::NotPresent);
  }
  EXPECT_LE(peak.load(), 3);
  EXPECT_GE(peak.load(), 2);
  EXPECT_EQ(result.ledger.input_tokens, 2400);
  EXPECT_EQ(result.ledger.output_tokens, 48);
  EXPECT_NEAR(result.ledger.total_cost, 2400 * 1.5e-6 + 48 * 2e-6, 1e-15);
}

TEST(Inference, LexiconBackend) {
  BackendConfig cfg;
  const auto p = classify(joy_record("I was joyful"), cfg);
  ASSERT_TRUE(p.ok());
  EXPECT_EQ(*p.label, Label::Present);
  EXPECT_EQ(p.raw_output, "A");
  EXPECT_EQ(p.usage.input_tokens, 0);
}

TEST(Inference, BackoffBounds) {
  BackoffPolicy policy(std::chrono::milliseconds(100), std::chrono::milliseconds(1000), 42);
  for (int retry = 1; retry <= 8; ++retry) {
    const double d = std::min(1000.0, 100.0 * (1 << (retry - 1)));
    const auto wait = policy.delay_for(retry).count();
    EXPECT_GE(wait, static_cast<long>(d / 2) - 1);
    EXPECT_LE(wait, static_cast<long>(d));
  }
  EXPECT_TRUE(is_retryable_status(500));
  EXPECT_TRUE(is_retryable_status(429));
  EXPECT_FALSE(is_retryable_status(404));
}

TEST(Inference, ConfigJsonRoundTripAndValidation) {
  auto cfg = remote_config("https://api.example.com/v1/chat/completions");
  const auto back = BackendConfig::from_json(cfg.to_json());
  EXPECT_EQ(back.kind, BackendKind::Remote);
  EXPECT_EQ(back.endpoint_url, cfg.endpoint_url);
  EXPECT_EQ(back.max_concurrency, cfg.max_concurrency);
  EXPECT_EQ(back.timeout, cfg.timeout);
  EXPECT_THROW(BackendConfig::from_json(R"({"kind":"remote","endpoint_url":"ftp://x","model_name":"m"})"), Error);
  EXPECT_THROW(BackendConfig::from_json(R"({"kind":"psychic"})"), Error);
  EXPECT_THROW(BackendConfig::from_json(R"({"max_concurrency":0})"), Error);
}
