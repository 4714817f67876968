#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "lx/error.hpp"
#include "lx/instruction.hpp"
#include "lx/taxonomy.hpp"

namespace lx::infer {

enum class BackendKind { Remote, Lexicon };

struct BackendConfig {
  BackendKind kind = BackendKind::Lexicon;
  std::string endpoint_url;  // e.g. https://api.example.com/v1/chat/completions
  std::string model_name;
  std::string auth_token;    // falls back to LX_AUTH_TOKEN when empty
  double price_per_1m_input = 0.0;
  double price_per_1m_output = 0.0;
  int max_concurrency = 4;
  std::chrono::milliseconds timeout{30000};
  int max_retries = 3;
  double temperature = 0.0;
  std::chrono::milliseconds retry_base_delay{500};
  std::chrono::milliseconds retry_max_delay{20000};
  instruct::DecodeMode decode_mode = instruct::DecodeMode::Strict;

  void validate() const;
  static BackendConfig from_json(std::string_view text);
  std::string to_json() const;
};

struct Usage {
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
};

struct UsageLedger {
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  double total_cost = 0.0;

  void add(const Usage& delta, double price_in, double price_out);
};

struct PredictionError {
  ErrorCode code = ErrorCode::Unparseable;
  std::string message;
  std::optional<int> http_status;
};

struct Prediction {
  std::size_t record_ref = 0;
  std::optional<Label> label;
  std::string raw_output;
  std::chrono::microseconds latency{0};
  int attempt_count = 0;
  std::optional<PredictionError> error;
  Usage usage;

  bool ok() const noexcept { return label.has_value() && !error; }
  /// The label, or rethrows the embedded error.
  Label value() const;
};

/// Exponential backoff with equal jitter: the k-th retry waits d/2 + U(0, d/2) where
/// d = min(max, base * 2^(k-1)).
class BackoffPolicy {
 public:
  BackoffPolicy(std::chrono::milliseconds base, std::chrono::milliseconds max, std::uint64_t seed);
  std::chrono::milliseconds delay_for(int retry);

 private:
  std::chrono::milliseconds base_;
  std::chrono::milliseconds max_;
  std::mt19937_64 rng_;
};

bool is_retryable_status(int status) noexcept;

/// Chat-completion request body for a record.
std::string build_chat_request(const instruct::InstructionRecord& record, const BackendConfig& config);

struct ChatResponse {
  std::string content;
  Usage usage;
};
/// Reads choices[0].message.content and usage.{prompt,completion}_tokens. Throws Unparseable.
ChatResponse parse_chat_response(std::string_view body);

class Backend {
 public:
  virtual ~Backend() = default;
  /// Never throws for per-record failures; they are embedded in the prediction.
  virtual Prediction classify(const instruct::InstructionRecord& record) const = 0;
  virtual const BackendConfig& config() const noexcept = 0;
};

class LexiconBackend final : public Backend {
 public:
  explicit LexiconBackend(const Taxonomy& taxonomy, BackendConfig config = {});
  Prediction classify(const instruct::InstructionRecord& record) const override;
  const BackendConfig& config() const noexcept override { return config_; }

 private:
  const Taxonomy* taxonomy_;
  BackendConfig config_;
};

class RemoteBackend final : public Backend {
 public:
  explicit RemoteBackend(BackendConfig config);
  Prediction classify(const instruct::InstructionRecord& record) const override;
  const BackendConfig& config() const noexcept override { return config_; }

 private:
  BackendConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

std::unique_ptr<Backend> make_backend(const BackendConfig& config, const Taxonomy& taxonomy);

/// One-shot classification with a backend built from the config.
Prediction classify(const instruct::InstructionRecord& record, const BackendConfig& backend,
                    const Taxonomy& taxonomy = default_taxonomy());

struct BatchResult {
  std::vector<Prediction> predictions;  // input order
  UsageLedger ledger;
};

/// At most config().max_concurrency records in flight. Usage is merged after all workers finish.
BatchResult classify_batch(const std::vector<instruct::InstructionRecord>& records, const Backend& backend);

}  // namespace lx::infer
