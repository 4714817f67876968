#include "lx/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "lx/cost.hpp"
#include "lx/lexicon.hpp"

namespace lx::infer {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Failure {
  PredictionError error;
  bool retryable = false;
};

std::string kind_name(BackendKind kind) { return kind == BackendKind::Remote ? "remote" : "lexicon"; }

}  // namespace

void BackendConfig::validate() const {
  if (price_per_1m_input < 0 || price_per_1m_output < 0) {
    throw Error(ErrorCode::InvalidConfig, "backend prices must be >= 0");
  }
  if (max_concurrency < 1) throw Error(ErrorCode::InvalidConfig, "max_concurrency must be >= 1");
  if (max_retries < 0) throw Error(ErrorCode::InvalidConfig, "max_retries must be >= 0");
  if (timeout.count() <= 0) throw Error(ErrorCode::InvalidConfig, "timeout must be positive");
  if (kind == BackendKind::Remote) {
    if (endpoint_url.rfind("http://", 0) != 0 && endpoint_url.rfind("https://", 0) != 0) {
      throw Error(ErrorCode::InvalidConfig, "remote backend needs an http(s) endpoint_url");
    }
    if (model_name.empty()) throw Error(ErrorCode::InvalidConfig, "remote backend needs model_name");
  }
}

BackendConfig BackendConfig::from_json(std::string_view text) {
  BackendConfig c;
  try {
    const auto j = json::parse(text);
    const auto kind = j.value("kind", std::string("lexicon"));
    if (kind == "remote" || kind == "Remote") {
      c.kind = BackendKind::Remote;
    } else if (kind == "lexicon" || kind == "Lexicon") {
      c.kind = BackendKind::Lexicon;
    } else {
      throw Error(ErrorCode::InvalidConfig, "unknown backend kind '" + kind + "'");
    }
    c.endpoint_url = j.value("endpoint_url", c.endpoint_url);
    c.model_name = j.value("model_name", c.model_name);
    c.auth_token = j.value("auth_token", c.auth_token);
    c.price_per_1m_input = j.value("price_per_1M_input", c.price_per_1m_input);
    c.price_per_1m_output = j.value("price_per_1M_output", c.price_per_1m_output);
    c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
    c.timeout = std::chrono::milliseconds(j.value("timeout_ms", static_cast<std::int64_t>(c.timeout.count())));
    c.max_retries = j.value("max_retries", c.max_retries);
    c.temperature = j.value("temperature", c.temperature);
    c.retry_base_delay =
        std::chrono::milliseconds(j.value("retry_base_delay_ms", static_cast<std::int64_t>(c.retry_base_delay.count())));
    c.retry_max_delay =
        std::chrono::milliseconds(j.value("retry_max_delay_ms", static_cast<std::int64_t>(c.retry_max_delay.count())));
    const auto mode = j.value("decode_mode", std::string("strict"));
    c.decode_mode = mode == "lenient" ? instruct::DecodeMode::Lenient : instruct::DecodeMode::Strict;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("backend config JSON: ") + e.what());
  }
  if (c.auth_token.empty()) {
    if (const char* env = std::getenv("LX_AUTH_TOKEN")) c.auth_token = env;
  }
  c.validate();
  return c;
}

std::string BackendConfig::to_json() const {
  json j{{"kind", kind_name(kind)},
         {"endpoint_url", endpoint_url},
         {"model_name", model_name},
         {"price_per_1M_input", price_per_1m_input},
         {"price_per_1M_output", price_per_1m_output},
         {"max_concurrency", max_concurrency},
         {"timeout_ms", timeout.count()},
         {"max_retries", max_retries},
         {"temperature", temperature},
         {"retry_base_delay_ms", retry_base_delay.count()},
         {"retry_max_delay_ms", retry_max_delay.count()},
         {"decode_mode", decode_mode == instruct::DecodeMode::Lenient ? "lenient" : "strict"}};
  return j.dump(2);
}

void UsageLedger::add(const Usage& delta, double price_in, double price_out) {
  input_tokens += delta.input_tokens;
  output_tokens += delta.output_tokens;
  total_cost = cost::estimate_cost(input_tokens, output_tokens, price_in, price_out);
}

Label Prediction::value() const {
  if (error) {
    if (error->http_status) throw HttpStatusError(*error->http_status, error->message);
    throw Error(error->code, error->message);
  }
  if (!label) throw Error(ErrorCode::Unparseable, "prediction has no label");
  return *label;
}

BackoffPolicy::BackoffPolicy(std::chrono::milliseconds base, std::chrono::milliseconds max, std::uint64_t seed)
    : base_(base), max_(max), rng_(seed) {}

std::chrono::milliseconds BackoffPolicy::delay_for(int retry) {
  const int shift = std::clamp(retry - 1, 0, 30);
  const auto scaled = static_cast<double>(base_.count()) * static_cast<double>(1LL << shift);
  const double d = std::min(scaled, static_cast<double>(max_.count()));
  std::uniform_real_distribution<double> jitter(0.0, d / 2.0);
  return std::chrono::milliseconds(static_cast<std::int64_t>(d / 2.0 + jitter(rng_)));
}

bool is_retryable_status(int status) noexcept { return status == 429 || (status >= 500 && status <= 599); }

std::string build_chat_request(const instruct::InstructionRecord& record, const BackendConfig& config) {
  json body{{"model", config.model_name},
            {"messages", json::array({json{{"role", "system"}, {"content", record.instruction_text}},
                                      json{{"role", "user"}, {"content", record.input_text}}})},
            {"temperature", config.temperature}};
  return body.dump();
}

ChatResponse parse_chat_response(std::string_view body) {
  try {
    const auto j = json::parse(body);
    ChatResponse r;
    r.content = j.at("choices").at(0).at("message").at("content").get<std::string>();
    if (j.contains("usage") && j.at("usage").is_object()) {
      const auto& u = j.at("usage");
      r.usage.input_tokens = u.value("prompt_tokens", std::int64_t{0});
      r.usage.output_tokens = u.value("completion_tokens", std::int64_t{0});
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Unparseable, std::string("malformed chat-completion response: ") + e.what());
  }
}

LexiconBackend::LexiconBackend(const Taxonomy& taxonomy, BackendConfig config)
    : taxonomy_(&taxonomy), config_(std::move(config)) {
  config_.kind = BackendKind::Lexicon;
  config_.validate();
}

Prediction LexiconBackend::classify(const instruct::InstructionRecord& record) const {
  Prediction p;
  p.attempt_count = 1;
  const auto start = Clock::now();
  try {
    const Label label = lexicon::lexicon_classify(record.input_text, taxonomy_->lookup(record.perception_id));
    p.raw_output = instruct::render_option(label, record.options);
    p.label = label;
  } catch (const Error& e) {
    p.error = PredictionError{e.code(), e.what(), std::nullopt};
  }
  p.latency = std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start);
  return p;
}

RemoteBackend::RemoteBackend(BackendConfig config) : config_(std::move(config)) {
  config_.kind = BackendKind::Remote;
  config_.validate();
  const auto scheme_end = config_.endpoint_url.find("://");
  const auto path_start = config_.endpoint_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_port_ = config_.endpoint_url;
    path_ = "/v1/chat/completions";
  } else {
    scheme_host_port_ = config_.endpoint_url.substr(0, path_start);
    path_ = config_.endpoint_url.substr(path_start);
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (config_.endpoint_url.rfind("https://", 0) == 0) {
    throw Error(ErrorCode::InvalidConfig, "this build has no TLS support; use an http:// endpoint");
  }
#endif
}

Prediction RemoteBackend::classify(const instruct::InstructionRecord& record) const {
  Prediction p;
  const auto start = Clock::now();
  const std::string body = build_chat_request(record, config_);

  httplib::Client client(scheme_host_port_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!config_.auth_token.empty()) headers.emplace("Authorization", "Bearer " + config_.auth_token);

  BackoffPolicy backoff(config_.retry_base_delay, config_.retry_max_delay,
                        std::hash<std::string>{}(record.text_id + record.perception_id) ^
                            static_cast<std::uint64_t>(start.time_since_epoch().count()));
  std::optional<Failure> last;
  const int max_attempts = config_.max_retries + 1;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    p.attempt_count = attempt;
    if (attempt > 1) std::this_thread::sleep_for(backoff.delay_for(attempt - 1));

    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      const auto err = res.error();
      const bool timeout = err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout ||
                           err == httplib::Error::Write;
      last = Failure{{timeout ? ErrorCode::Timeout : ErrorCode::HttpError,
                      "transport failure: " + httplib::to_string(err), std::nullopt},
                     true};
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last = Failure{{ErrorCode::HttpError, res->body.substr(0, 200), res->status}, is_retryable_status(res->status)};
      if (!last->retryable) break;
      continue;
    }
    try {
      auto chat = parse_chat_response(res->body);
      p.usage = chat.usage;
      p.raw_output = chat.content;
      p.label = instruct::decode_output(chat.content, record.options, config_.decode_mode);
      last.reset();
    } catch (const Error& e) {
      last = Failure{{e.code(), e.what(), std::nullopt}, false};
    }
    break;
  }

  if (last) {
    if (last->retryable && max_attempts > 1) {
      PredictionError exhausted{ErrorCode::RetriesExhausted,
                                "gave up after " + std::to_string(p.attempt_count) + " attempts; last: " +
                                    std::string(to_string(last->error.code)) + " " + last->error.message,
                                last->error.http_status};
      p.error = std::move(exhausted);
    } else {
      p.error = std::move(last->error);
    }
    p.label.reset();
  }
  p.latency = std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start);
  return p;
}

std::unique_ptr<Backend> make_backend(const BackendConfig& config, const Taxonomy& taxonomy) {
  if (config.kind == BackendKind::Remote) return std::make_unique<RemoteBackend>(config);
  return std::make_unique<LexiconBackend>(taxonomy, config);
}

Prediction classify(const instruct::InstructionRecord& record, const BackendConfig& backend, const Taxonomy& taxonomy) {
  return make_backend(backend, taxonomy)->classify(record);
}

BatchResult classify_batch(const std::vector<instruct::InstructionRecord>& records, const Backend& backend) {
  BatchResult result;
  result.predictions.resize(records.size());
  if (records.empty()) return result;

  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(1, backend.config().max_concurrency)), records.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < records.size(); i = next.fetch_add(1)) {
      Prediction p = backend.classify(records[i]);
      p.record_ref = i;
      result.predictions[i] = std::move(p);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  const auto& cfg = backend.config();
  for (const auto& p : result.predictions) result.ledger.add(p.usage, cfg.price_per_1m_input, cfg.price_per_1m_output);
  return result;
}

}  // namespace lx::infer
