#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "lx/inference.hpp"
#include "lx/job_store.hpp"
#include "lx/pipeline.hpp"

namespace httplib {
class Server;
}

namespace lx::service {

/// Told about every job that reaches Done or Failed.
class Notifier {
 public:
  virtual ~Notifier() = default;
  virtual void job_finished(const jobs::Job& job) = 0;
};

class NoopNotifier final : public Notifier {
 public:
  void job_finished(const jobs::Job&) override {}
};

/// POSTs {"job_id", "state", "row_count", "warnings"} to a URL. Delivery failures are logged and dropped.
class WebhookNotifier final : public Notifier {
 public:
  explicit WebhookNotifier(std::string url);
  void job_finished(const jobs::Job& job) override;

 private:
  std::string url_;
};

struct ServiceConfig {
  std::filesystem::path data_dir = jobs::data_dir_from_env();
  std::chrono::hours retention{24 * 7};
  pipeline::IngestLimits limits;
  /// Backend used for every job. Clients choose columns and perceptions only.
  infer::BackendConfig backend;
  unsigned workers = 2;
  std::chrono::milliseconds purge_interval{std::chrono::minutes(10)};
  /// When non-empty every request must carry "Authorization: Bearer <token>".
  std::string auth_token;
};

/// Job queue, worker pool, retention timer and the HTTP API.
///
///   POST   /jobs              multipart "file" + "config" (JSON)   -> 202 {"job_id"}
///   GET    /jobs/{id}                                               -> {state, row_count, warnings, ...}
///   GET    /jobs/{id}/result  text/csv, 404 until Done
///   GET    /jobs/{id}/warnings
///   DELETE /jobs/{id}         409 while running
///   POST   /preview           multipart "file" + "text_column" [+ "n"] -> {header, values}
///   GET    /perceptions       selectable perception ids
class Service {
 public:
  explicit Service(ServiceConfig config, std::unique_ptr<Notifier> notifier = std::make_unique<NoopNotifier>(),
                   jobs::Clock clock = std::chrono::system_clock::now);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Validates the analysis config and upload size, stores the job and queues it.
  std::string submit(std::string_view csv_bytes, pipeline::AnalysisConfig config);
  /// Blocks until the job is Done or Failed or the timeout passes. Returns the last snapshot.
  jobs::Job wait(std::string_view job_id, std::chrono::milliseconds timeout);

  jobs::JobStore& store() noexcept { return store_; }

  /// Binds the HTTP API; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves on a background thread until stop().
  void start();
  /// Serves on the calling thread until stop() is called from elsewhere.
  void listen();
  void stop();

 private:
  void register_routes();
  void worker_loop(std::stop_token stop);
  void purge_loop(std::stop_token stop);
  void execute(const std::string& job_id);

  ServiceConfig config_;
  std::unique_ptr<Notifier> notifier_;
  jobs::Clock clock_;
  jobs::JobStore store_;
  std::unique_ptr<infer::Backend> backend_;
  std::unique_ptr<httplib::Server> server_;

  std::mutex queue_mutex_;
  std::condition_variable_any queue_cv_;
  std::deque<std::string> queue_;
  std::condition_variable_any done_cv_;
  std::mutex done_mutex_;

  std::vector<std::jthread> workers_;
  std::jthread purger_;
  std::jthread http_thread_;
};

/// ISO 8601 UTC with a Z suffix.
std::string format_utc(jobs::TimePoint t);

}  // namespace lx::service
