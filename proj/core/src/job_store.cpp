#include "lx/job_store.hpp"

#include <cstdlib>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>

#include "json.hpp"
#include "lx/error.hpp"

namespace lx::jobs {

namespace fs = std::filesystem;

namespace {

std::int64_t to_unix_ms(TimePoint t) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(t.time_since_epoch()).count();
}

TimePoint from_unix_ms(std::int64_t ms) { return TimePoint(std::chrono::milliseconds(ms)); }

void write_file(const fs::path& path, std::string_view data) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error(ErrorCode::Io, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "missing " + path.filename().string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool valid_id(std::string_view id) {
  if (id.size() != 32) return false;
  for (const char c : id) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

}  // namespace

std::string_view to_string(JobState s) {
  switch (s) {
    case JobState::Pending:
      return "Pending";
    case JobState::Running:
      return "Running";
    case JobState::Done:
      return "Done";
    case JobState::Failed:
      return "Failed";
  }
  return "Failed";
}

JobState state_from_string(std::string_view s) {
  if (s == "Pending") return JobState::Pending;
  if (s == "Running") return JobState::Running;
  if (s == "Done") return JobState::Done;
  if (s == "Failed") return JobState::Failed;
  throw Error(ErrorCode::Unparseable, "unknown job state '" + std::string(s) + "'");
}

bool is_valid_transition(JobState from, JobState to) noexcept {
  return (from == JobState::Pending && to == JobState::Running) ||
         (from == JobState::Running && (to == JobState::Done || to == JobState::Failed));
}

std::string Job::to_json() const {
  nlohmann::json j{{"job_id", job_id},
                   {"state", std::string(lx::jobs::to_string(state))},
                   {"created_at_ms", to_unix_ms(created_at)},
                   {"row_count", row_count},
                   {"warning_count", warning_count},
                   {"error_detail", error_detail},
                   {"config", config_json}};
  j["completed_at_ms"] = completed_at ? nlohmann::json(to_unix_ms(*completed_at)) : nlohmann::json(nullptr);
  j["retention_deadline_ms"] =
      retention_deadline ? nlohmann::json(to_unix_ms(*retention_deadline)) : nlohmann::json(nullptr);
  return j.dump(2);
}

Job Job::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    Job job;
    job.job_id = j.at("job_id").get<std::string>();
    job.state = state_from_string(j.at("state").get<std::string>());
    job.created_at = from_unix_ms(j.at("created_at_ms").get<std::int64_t>());
    if (!j.at("completed_at_ms").is_null()) job.completed_at = from_unix_ms(j.at("completed_at_ms").get<std::int64_t>());
    if (!j.at("retention_deadline_ms").is_null()) {
      job.retention_deadline = from_unix_ms(j.at("retention_deadline_ms").get<std::int64_t>());
    }
    job.row_count = j.value("row_count", std::size_t{0});
    job.warning_count = j.value("warning_count", std::size_t{0});
    job.error_detail = j.value("error_detail", std::string());
    job.config_json = j.value("config", std::string());
    return job;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Unparseable, std::string("job metadata: ") + e.what());
  }
}

std::string new_job_id() {
  static thread_local std::random_device rd;
  static const char* hex = "0123456789abcdef";
  std::string id;
  for (int word = 0; word < 4; ++word) {
    std::uint32_t v = rd();
    for (int k = 0; k < 8; ++k, v >>= 4) id.push_back(hex[v & 0xf]);
  }
  return id;
}

std::chrono::hours retention_from_env() {
  if (const char* env = std::getenv("LX_RETENTION_DAYS")) {
    char* end = nullptr;
    const long days = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && days >= 0) return std::chrono::hours(24 * days);
    throw Error(ErrorCode::InvalidConfig, "LX_RETENTION_DAYS must be a non-negative integer");
  }
  return std::chrono::hours(24 * 7);
}

fs::path data_dir_from_env() {
  if (const char* env = std::getenv("LX_DATA_DIR"); env && *env) return env;
  return "lx-data";
}

JobStore::JobStore(fs::path root, std::chrono::hours retention, Clock clock)
    : root_(std::move(root)), retention_(retention), clock_(std::move(clock)) {
  fs::create_directories(root_ / "jobs");
  load_existing();
}

void JobStore::load_existing() {
  for (const auto& entry : fs::directory_iterator(root_ / "jobs")) {
    const auto meta = entry.path() / "meta.json";
    if (!entry.is_directory() || !fs::exists(meta)) continue;
    try {
      auto job = Job::from_json(read_file(meta));
      // A job that was running when the process died will never finish. Pending jobs stay queued.
      if (job.state == JobState::Running) {
        job.state = JobState::Failed;
        job.error_detail = "interrupted by service restart";
        job.completed_at = clock_();
        job.retention_deadline = *job.completed_at + retention_;
        write_meta(job);
      }
      jobs_.emplace(job.job_id, std::move(job));
    } catch (const Error&) {
      // unreadable metadata: leave the directory for an operator to inspect
    }
  }
}

fs::path JobStore::job_dir(std::string_view job_id) const { return root_ / "jobs" / std::string(job_id); }

void JobStore::write_meta(const Job& job) const { write_file(job_dir(job.job_id) / "meta.json", job.to_json()); }

Job JobStore::create(std::string_view input_csv, std::string config_json) {
  Job job;
  job.created_at = clock_();
  job.config_json = std::move(config_json);
  std::unique_lock lock(mutex_);
  do {
    job.job_id = new_job_id();
  } while (jobs_.count(job.job_id));
  fs::create_directories(job_dir(job.job_id));
  write_file(job_dir(job.job_id) / "input.csv", input_csv);
  write_meta(job);
  jobs_.emplace(job.job_id, job);
  return job;
}

std::optional<Job> JobStore::find(std::string_view job_id) const {
  std::shared_lock lock(mutex_);
  const auto it = jobs_.find(job_id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second;
}

Job JobStore::get(std::string_view job_id) const {
  auto job = find(job_id);
  if (!job) throw Error(ErrorCode::NotFound, "no job '" + std::string(job_id) + "'");
  return *job;
}

std::vector<Job> JobStore::list() const {
  std::shared_lock lock(mutex_);
  std::vector<Job> out;
  for (const auto& [id, job] : jobs_) out.push_back(job);
  return out;
}

Job JobStore::transition(std::string_view job_id, JobState to, const std::function<void(Job&)>& update) {
  std::unique_lock lock(mutex_);
  const auto it = jobs_.find(job_id);
  if (it == jobs_.end()) throw Error(ErrorCode::NotFound, "no job '" + std::string(job_id) + "'");
  Job next = it->second;
  if (!is_valid_transition(next.state, to)) {
    throw Error(ErrorCode::InvalidTransition,
                std::string(to_string(next.state)) + " -> " + std::string(to_string(to)) + " is not allowed");
  }
  next.state = to;
  if (update) update(next);
  write_meta(next);
  it->second = next;
  return next;
}

Job JobStore::mark_running(std::string_view job_id) { return transition(job_id, JobState::Running, nullptr); }

Job JobStore::mark_done(std::string_view job_id, std::string_view result_csv, std::string_view warnings_csv,
                        std::size_t row_count, std::size_t warning_count) {
  return transition(job_id, JobState::Done, [&](Job& j) {
    write_file(job_dir(j.job_id) / "result.csv", result_csv);
    write_file(job_dir(j.job_id) / "warnings.csv", warnings_csv);
    j.row_count = row_count;
    j.warning_count = warning_count;
    j.completed_at = clock_();
    j.retention_deadline = *j.completed_at + retention_;
  });
}

Job JobStore::mark_failed(std::string_view job_id, std::string detail) {
  return transition(job_id, JobState::Failed, [&](Job& j) {
    j.error_detail = std::move(detail);
    j.completed_at = clock_();
    j.retention_deadline = *j.completed_at + retention_;
  });
}

std::string JobStore::read_input(std::string_view job_id) const {
  get(job_id);
  return read_file(job_dir(job_id) / "input.csv");
}

std::string JobStore::read_result(std::string_view job_id) const {
  const auto job = get(job_id);
  if (job.state != JobState::Done) throw Error(ErrorCode::NotFound, "job is " + std::string(to_string(job.state)));
  return read_file(job_dir(job_id) / "result.csv");
}

std::string JobStore::read_warnings(std::string_view job_id) const {
  const auto job = get(job_id);
  if (job.state != JobState::Done) throw Error(ErrorCode::NotFound, "job is " + std::string(to_string(job.state)));
  return read_file(job_dir(job_id) / "warnings.csv");
}

void JobStore::remove(std::string_view job_id) {
  std::unique_lock lock(mutex_);
  const auto it = jobs_.find(job_id);
  if (it == jobs_.end()) throw Error(ErrorCode::NotFound, "no job '" + std::string(job_id) + "'");
  if (it->second.state == JobState::Running) throw Error(ErrorCode::InvalidTransition, "job is running");
  if (valid_id(job_id)) fs::remove_all(job_dir(job_id));
  jobs_.erase(it);
}

std::vector<std::string> JobStore::purge_expired(TimePoint now) {
  std::unique_lock lock(mutex_);
  std::vector<std::string> deleted;
  for (auto it = jobs_.begin(); it != jobs_.end();) {
    const auto& job = it->second;
    const bool finished = job.state == JobState::Done || job.state == JobState::Failed;
    if (finished && job.retention_deadline && *job.retention_deadline <= now) {
      if (valid_id(job.job_id)) fs::remove_all(job_dir(job.job_id));
      deleted.push_back(job.job_id);
      it = jobs_.erase(it);
    } else {
      ++it;
    }
  }
  return deleted;
}

}  // namespace lx::jobs
