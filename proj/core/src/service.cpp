#include "lx/service.hpp"

#include <ctime>
#include <iostream>

#include "httplib.h"
#include "json.hpp"
#include "lx/error.hpp"

namespace lx::service {

namespace {

using nlohmann::json;

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound:
      return 404;
    case ErrorCode::InvalidTransition:
      return 409;
    case ErrorCode::SizeExceeded:
      return 413;
    case ErrorCode::InvalidConfig:
    case ErrorCode::UnknownPerception:
    case ErrorCode::MissingColumn:
    case ErrorCode::NotUtf8:
    case ErrorCode::EmptyFile:
    case ErrorCode::Unparseable:
      return 400;
    default:
      return 500;
  }
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", code}, {"message", message}}.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
  send_error(res, status_for(e.code()), to_string(e.code()), e.what());
}

json job_status(const jobs::Job& job) {
  json j{{"job_id", job.job_id},
         {"state", std::string(jobs::to_string(job.state))},
         {"row_count", job.row_count},
         {"warnings", job.warning_count},
         {"created_at", format_utc(job.created_at)},
         {"error_detail", job.error_detail}};
  j["completed_at"] = job.completed_at ? json(format_utc(*job.completed_at)) : json(nullptr);
  j["retention_deadline"] = job.retention_deadline ? json(format_utc(*job.retention_deadline)) : json(nullptr);
  return j;
}

bool terminal(jobs::JobState s) { return s == jobs::JobState::Done || s == jobs::JobState::Failed; }

}  // namespace

std::string format_utc(jobs::TimePoint t) {
  const std::time_t secs = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

WebhookNotifier::WebhookNotifier(std::string url) : url_(std::move(url)) {
  if (url_.rfind("http://", 0) != 0 && url_.rfind("https://", 0) != 0) {
    throw Error(ErrorCode::InvalidConfig, "webhook URL must be http(s)");
  }
}

void WebhookNotifier::job_finished(const jobs::Job& job) {
  const auto scheme_end = url_.find("://");
  const auto path_start = url_.find('/', scheme_end + 3);
  httplib::Client client(url_.substr(0, path_start));
  client.set_connection_timeout(5, 0);
  client.set_read_timeout(5, 0);
  const std::string path = path_start == std::string::npos ? "/" : url_.substr(path_start);
  const json body{{"job_id", job.job_id},
                  {"state", std::string(jobs::to_string(job.state))},
                  {"row_count", job.row_count},
                  {"warnings", job.warning_count}};
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res || res->status >= 300) {
    std::cerr << "lx: webhook for job " << job.job_id << " failed: "
              << (res ? std::to_string(res->status) : httplib::to_string(res.error())) << '\n';
  }
}

Service::Service(ServiceConfig config, std::unique_ptr<Notifier> notifier, jobs::Clock clock)
    : config_(std::move(config)),
      notifier_(notifier ? std::move(notifier) : std::make_unique<NoopNotifier>()),
      clock_(std::move(clock)),
      store_(config_.data_dir, config_.retention, clock_),
      backend_(infer::make_backend(config_.backend, default_taxonomy())),
      server_(std::make_unique<httplib::Server>()) {
  register_routes();
  for (const auto& job : store_.list()) {
    if (job.state == jobs::JobState::Pending) queue_.push_back(job.job_id);
  }
  for (unsigned w = 0; w < std::max(1u, config_.workers); ++w) {
    workers_.emplace_back([this](std::stop_token st) { worker_loop(st); });
  }
  purger_ = std::jthread([this](std::stop_token st) { purge_loop(st); });
}

Service::~Service() {
  stop();
  for (auto& w : workers_) w.request_stop();
  purger_.request_stop();
  queue_cv_.notify_all();
  workers_.clear();
  purger_ = {};
}

std::string Service::submit(std::string_view csv_bytes, pipeline::AnalysisConfig config) {
  config.validate(default_taxonomy());
  if (csv_bytes.size() > config_.limits.max_bytes) {
    throw Error(ErrorCode::SizeExceeded, "upload is " + std::to_string(csv_bytes.size()) + " bytes; limit is " +
                                             std::to_string(config_.limits.max_bytes));
  }
  // Encoding and column problems are reported to the uploader instead of surfacing as a failed job.
  pipeline::ingest_csv(csv_bytes, config.id_column, config.text_column, config_.limits);
  const auto job = store_.create(csv_bytes, config.to_json());
  {
    std::lock_guard lock(queue_mutex_);
    queue_.push_back(job.job_id);
  }
  queue_cv_.notify_one();
  return job.job_id;
}

jobs::Job Service::wait(std::string_view job_id, std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::unique_lock lock(done_mutex_);
  for (;;) {
    auto job = store_.get(job_id);
    if (terminal(job.state)) return job;
    if (done_cv_.wait_until(lock, deadline) == std::cv_status::timeout) return store_.get(job_id);
  }
}

void Service::worker_loop(std::stop_token stop) {
  for (;;) {
    std::string id;
    {
      std::unique_lock lock(queue_mutex_);
      if (!queue_cv_.wait(lock, stop, [this] { return !queue_.empty(); })) return;
      id = std::move(queue_.front());
      queue_.pop_front();
    }
    execute(id);
  }
}

void Service::execute(const std::string& job_id) {
  std::optional<jobs::Job> finished;
  try {
    const auto job = store_.mark_running(job_id);
    try {
      auto config = pipeline::AnalysisConfig::from_json(job.config_json);
      const auto ingest =
          pipeline::ingest_csv(store_.read_input(job_id), config.id_column, config.text_column, config_.limits);
      auto output = pipeline::run_analysis(ingest.rows, config, *backend_);
      for (const auto& bad : ingest.rejected) {
        output.warnings.push_back({bad.row_index, "", "", "MalformedRow", bad.reason});
      }
      finished = store_.mark_done(job_id, output.csv, output.warnings_csv(), output.row_count, output.warnings.size());
    } catch (const std::exception& e) {
      finished = store_.mark_failed(job_id, e.what());
    }
  } catch (const Error& e) {
    // deleted before it ran, or already finished
    std::cerr << "lx: skipping job " << job_id << ": " << e.what() << '\n';
  }
  if (finished) {
    try {
      notifier_->job_finished(*finished);
    } catch (const std::exception& e) {
      std::cerr << "lx: notifier failed for job " << job_id << ": " << e.what() << '\n';
    }
  }
  {
    std::lock_guard lock(done_mutex_);
  }
  done_cv_.notify_all();
}

void Service::purge_loop(std::stop_token stop) {
  std::mutex m;
  std::unique_lock lock(m);
  while (!stop.stop_requested()) {
    for (const auto& id : store_.purge_expired(clock_())) std::cerr << "lx: purged expired job " << id << '\n';
    std::condition_variable_any cv;
    cv.wait_for(lock, stop, config_.purge_interval, [] { return false; });
  }
}

void Service::register_routes() {
  auto& srv = *server_;
  const std::string token = config_.auth_token;
  srv.set_pre_routing_handler([token](const httplib::Request& req, httplib::Response& res) {
    if (token.empty() || req.path == "/health") return httplib::Server::HandlerResponse::Unhandled;
    if (req.get_header_value("Authorization") != "Bearer " + token) {
      send_error(res, 401, "Unauthorized", "missing or wrong bearer token");
      return httplib::Server::HandlerResponse::Handled;
    }
    return httplib::Server::HandlerResponse::Unhandled;
  });
  srv.set_payload_max_length(config_.limits.max_bytes + 64 * 1024);

  srv.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });

  srv.Get("/perceptions", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(json(pipeline::selectable_perceptions()).dump(), "application/json");
  });

  srv.Post("/jobs", [this](const httplib::Request& req, httplib::Response& res) {
    if (!req.is_multipart_form_data() || !req.has_file("file") || !req.has_file("config")) {
      send_error(res, 400, "InvalidConfig", "expected multipart fields 'file' and 'config'");
      return;
    }
    try {
      auto config = pipeline::AnalysisConfig::from_json(req.get_file_value("config").content);
      const auto id = submit(req.get_file_value("file").content, std::move(config));
      res.status = 202;
      res.set_content(json{{"job_id", id}}.dump(), "application/json");
    } catch (const Error& e) {
      send_error(res, e);
    }
  });

  srv.Post("/preview", [this](const httplib::Request& req, httplib::Response& res) {
    if (!req.is_multipart_form_data() || !req.has_file("file") || !req.has_file("text_column")) {
      send_error(res, 400, "InvalidConfig", "expected multipart fields 'file' and 'text_column'");
      return;
    }
    try {
      std::size_t n = 5;
      if (req.has_file("n")) n = static_cast<std::size_t>(std::stoul(req.get_file_value("n").content));
      const auto ingest =
          pipeline::ingest_csv(req.get_file_value("file").content, "", req.get_file_value("text_column").content,
                               config_.limits);
      res.set_content(json{{"header", ingest.header}, {"values", pipeline::preview(ingest.rows, n)}}.dump(),
                      "application/json");
    } catch (const Error& e) {
      send_error(res, e);
    } catch (const std::exception& e) {
      send_error(res, 400, "InvalidConfig", e.what());
    }
  });

  srv.Get(R"(/jobs/([0-9a-f]{32}))", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      res.set_content(job_status(store_.get(req.matches[1].str())).dump(), "application/json");
    } catch (const Error& e) {
      send_error(res, e);
    }
  });

  srv.Get(R"(/jobs/([0-9a-f]{32})/result)", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      const std::string id = req.matches[1].str();
      res.set_content(store_.read_result(id), "text/csv");
      res.set_header("Content-Disposition", "attachment; filename=\"" + id + ".csv\"");
    } catch (const Error& e) {
      send_error(res, e);
    }
  });

  srv.Get(R"(/jobs/([0-9a-f]{32})/warnings)", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      res.set_content(store_.read_warnings(req.matches[1].str()), "text/csv");
    } catch (const Error& e) {
      send_error(res, e);
    }
  });

  srv.Delete(R"(/jobs/([0-9a-f]{32}))", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      store_.remove(req.matches[1].str());
      res.status = 204;
    } catch (const Error& e) {
      send_error(res, e);
    }
  });
}

int Service::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::Io, "cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void Service::start() {
  http_thread_ = std::jthread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void Service::listen() { server_->listen_after_bind(); }

void Service::stop() {
  if (server_ && server_->is_running()) server_->stop();
  if (http_thread_.joinable()) http_thread_.join();
}

}  // namespace lx::service
