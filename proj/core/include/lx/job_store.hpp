#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace lx::jobs {

using TimePoint = std::chrono::system_clock::time_point;
using Clock = std::function<TimePoint()>;

enum class JobState { Pending, Running, Done, Failed };
std::string_view to_string(JobState state);
JobState state_from_string(std::string_view s);
/// Pending -> Running -> {Done, Failed}; nothing leaves a terminal state.
bool is_valid_transition(JobState from, JobState to) noexcept;

struct Job {
  std::string job_id;
  JobState state = JobState::Pending;
  TimePoint created_at{};
  std::optional<TimePoint> completed_at;
  std::optional<TimePoint> retention_deadline;  // completed_at + retention
  std::size_t row_count = 0;
  std::size_t warning_count = 0;
  std::string error_detail;
  std::string config_json;

  std::string to_json() const;
  static Job from_json(std::string_view text);
};

/// 32 lowercase hex digits from the system entropy source.
std::string new_job_id();

/// Days from LX_RETENTION_DAYS, default 7.
std::chrono::hours retention_from_env();
/// LX_DATA_DIR or ./lx-data.
std::filesystem::path data_dir_from_env();

/// One directory per job under root/jobs/<id>/ holding meta.json, input.csv, result.csv, warnings.csv.
/// Only the job runner writes a given job; readers get copies taken under a shared lock.
class JobStore {
 public:
  JobStore(std::filesystem::path root, std::chrono::hours retention, Clock clock = std::chrono::system_clock::now);

  /// Stores the upload and returns the Pending job.
  Job create(std::string_view input_csv, std::string config_json);
  /// Throws NotFound.
  Job get(std::string_view job_id) const;
  std::optional<Job> find(std::string_view job_id) const;
  std::vector<Job> list() const;

  /// Throws InvalidTransition.
  Job mark_running(std::string_view job_id);
  Job mark_done(std::string_view job_id, std::string_view result_csv, std::string_view warnings_csv,
                std::size_t row_count, std::size_t warning_count);
  Job mark_failed(std::string_view job_id, std::string detail);

  std::string read_input(std::string_view job_id) const;
  /// Throws NotFound unless the job is Done.
  std::string read_result(std::string_view job_id) const;
  std::string read_warnings(std::string_view job_id) const;

  /// Deletes a non-running job. Throws NotFound, InvalidTransition (job is running).
  void remove(std::string_view job_id);

  /// Deletes every finished job with deadline <= now. Running and Pending jobs are never touched.
  std::vector<std::string> purge_expired(TimePoint now);

  const std::filesystem::path& root() const noexcept { return root_; }
  std::chrono::hours retention() const noexcept { return retention_; }

 private:
  std::filesystem::path job_dir(std::string_view job_id) const;
  Job transition(std::string_view job_id, JobState to, const std::function<void(Job&)>& update);
  void write_meta(const Job& job) const;
  void load_existing();

  std::filesystem::path root_;
  std::chrono::hours retention_;
  Clock clock_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Job, std::less<>> jobs_;
};

}  // namespace lx::jobs
