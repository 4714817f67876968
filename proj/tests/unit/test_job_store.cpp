#include <gtest/gtest.h>

#include <memory>
#include <random>
#include <set>

#include "lx/error.hpp"
#include "lx/job_store.hpp"
#include "test_support.hpp"

using namespace lx;
using namespace lx::jobs;
using namespace std::chrono_literals;
using lx::testing::TempDir;

namespace {

struct FakeClock {
  std::shared_ptr<TimePoint> now = std::make_shared<TimePoint>(std::chrono::sys_days{std::chrono::year{2026} / 3 / 1});
  Clock fn() const {
    auto p = now;
    return [p] { return *p; };
  }
  void advance(std::chrono::system_clock::duration d) { *now += d; }
};

Job finished(JobStore& store, const std::string& csv = "id,text\n1,a\n") {
  const auto j = store.create(csv, "{}");
  store.mark_running(j.job_id);
  return store.mark_done(j.job_id, "id,joy\n1,0\n", "row,id,perception,code,message\n", 1, 0);
}

}  // namespace

TEST(JobState, Transitions) {
  EXPECT_TRUE(is_valid_transition(JobState::Pending, JobState::Running));
  EXPECT_TRUE(is_valid_transition(JobState::Running, JobState::Done));
  EXPECT_TRUE(is_valid_transition(JobState::Running, JobState::Failed));
  EXPECT_FALSE(is_valid_transition(JobState::Pending, JobState::Done));
  EXPECT_FALSE(is_valid_transition(JobState::Done, JobState::Running));
  EXPECT_FALSE(is_valid_transition(JobState::Failed, JobState::Pending));
  EXPECT_FALSE(is_valid_transition(JobState::Running, JobState::Running));
  for (auto s : {JobState::Pending, JobState::Running, JobState::Done, JobState::Failed})
    EXPECT_EQ(state_from_string(to_string(s)), s);
}

TEST(JobId, FormatAndUniqueness) {
  std::set<std::string> seen;
  for (int i = 0; i < 200; ++i) {
    const auto id = new_job_id();
    EXPECT_EQ(id.size(), 32u);
    EXPECT_EQ(id.find_first_not_of("0123456789abcdef"), std::string::npos);
    seen.insert(id);
  }
  EXPECT_EQ(seen.size(), 200u);
}

TEST(JobStore, Lifecycle) {
  TempDir dir;
  FakeClock clock;
  JobStore store(dir.path(), 24h * 7, clock.fn());
  const auto j = store.create("id,text\n1,hi\n", R"({"text_column":"text"})");
  EXPECT_EQ(j.state, JobState::Pending);
  EXPECT_EQ(store.read_input(j.job_id), "id,text\n1,hi\n");
  EXPECT_THROW(store.read_result(j.job_id), Error);
  EXPECT_THROW(store.mark_done(j.job_id, "", "", 0, 0), Error);
  store.mark_running(j.job_id);
  EXPECT_THROW(store.remove(j.job_id), Error);
  clock.advance(90s);
  const auto done = store.mark_done(j.job_id, "id,joy\n1,1\n", "w\n", 1, 0);
  EXPECT_EQ(done.state, JobState::Done);
  EXPECT_EQ(*done.completed_at, *clock.now);
  EXPECT_EQ(*done.retention_deadline, *clock.now + 24h * 7);
  EXPECT_EQ(store.read_result(j.job_id), "id,joy\n1,1\n");
  EXPECT_THROW(store.mark_failed(j.job_id, "late"), Error);
  store.remove(j.job_id);
  EXPECT_FALSE(store.find(j.job_id));
  EXPECT_THROW(store.get(j.job_id), Error);
  EXPECT_FALSE(std::filesystem::exists(dir.path() / "jobs" / j.job_id));
}

TEST(JobStore, MetaJsonRoundTrip) {
  Job j;
  j.job_id = new_job_id();
  j.state = JobState::Failed;
  j.created_at = TimePoint(std::chrono::milliseconds(1'700'000'000'123));
  j.completed_at = j.created_at + 5s;
  j.retention_deadline = *j.completed_at + 24h;
  j.error_detail = "boom";
  j.config_json = R"({"a":1})";
  j.row_count = 3;
  const auto back = Job::from_json(j.to_json());
  EXPECT_EQ(back.job_id, j.job_id);
  EXPECT_EQ(back.state, j.state);
  EXPECT_EQ(back.created_at, j.created_at);
  EXPECT_EQ(back.completed_at, j.completed_at);
  EXPECT_EQ(back.retention_deadline, j.retention_deadline);
  EXPECT_EQ(back.error_detail, "boom");
  EXPECT_EQ(back.config_json, j.config_json);
  EXPECT_EQ(back.row_count, 3u);
}

TEST(Retention, PurgeAfterDeadlineOnly) {
  TempDir dir;
  FakeClock clock;
  JobStore store(dir.path(), 24h * 7, clock.fn());
  const auto j = finished(store);
  EXPECT_TRUE(store.purge_expired(*clock.now + 1h).empty());
  EXPECT_TRUE(store.find(j.job_id));
  const auto purged = store.purge_expired(*clock.now + 24h * 8);
  EXPECT_EQ(purged, std::vector<std::string>{j.job_id});
  EXPECT_FALSE(store.find(j.job_id));
  EXPECT_FALSE(std::filesystem::exists(dir.path() / "jobs" / j.job_id));
  EXPECT_TRUE(store.purge_expired(*clock.now + 24h * 8).empty());
}

TEST(Retention, RandomisedClockProperty) {
  TempDir dir;
  FakeClock clock;
  const auto retention = 24h * 7;
  JobStore store(dir.path(), retention, clock.fn());
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> minutes(0, 60 * 24 * 3);
  std::uniform_int_distribution<int> kind(0, 3);
  std::map<std::string, std::optional<TimePoint>> deadlines;
  for (int i = 0; i < 40; ++i) {
    clock.advance(std::chrono::minutes(minutes(rng)));
    const auto j = store.create("id,text\n1,a\n", "{}");
    const int k = kind(rng);
    if (k >= 1) store.mark_running(j.job_id);
    if (k == 2) store.mark_done(j.job_id, "r", "w", 1, 0);
    if (k == 3) store.mark_failed(j.job_id, "x");
    deadlines[j.job_id] = store.get(j.job_id).retention_deadline;
  }
  for (int step = 0; step < 30; ++step) {
    const TimePoint probe = *clock.now + std::chrono::minutes(minutes(rng) * 2) - 24h * 4;
    store.purge_expired(probe);
    for (const auto& [id, deadline] : deadlines) {
      const bool present = store.find(id).has_value();
      if (!deadline) {
        EXPECT_TRUE(present) << "unfinished job purged";
      } else if (*deadline <= probe) {
        EXPECT_FALSE(present) << "expired job kept";
      }
    }
  }
  for (const auto& [id, deadline] : deadlines) {
    if (deadline) EXPECT_GE(*deadline - store.retention(), TimePoint{} + 0s);
  }
}

TEST(Retention, FromEnvironment) {
  ::setenv("LX_RETENTION_DAYS", "3", 1);
  EXPECT_EQ(retention_from_env(), 72h);
  ::unsetenv("LX_RETENTION_DAYS");
  EXPECT_EQ(retention_from_env(), 168h);
}

TEST(JobStore, RestartRecovery) {
  TempDir dir;
  FakeClock clock;
  std::string pending, running, done;
  {
    JobStore store(dir.path(), 24h, clock.fn());
    pending = store.create("a", "{}").job_id;
    running = store.create("b", "{}").job_id;
    store.mark_running(running);
    done = finished(store).job_id;
  }
  JobStore again(dir.path(), 24h, clock.fn());
  EXPECT_EQ(again.list().size(), 3u);
  EXPECT_EQ(again.get(pending).state, JobState::Pending);
  const auto r = again.get(running);
  EXPECT_EQ(r.state, JobState::Failed);
  EXPECT_FALSE(r.error_detail.empty());
  EXPECT_EQ(again.get(done).state, JobState::Done);
  EXPECT_EQ(again.read_result(done), "id,joy\n1,0\n");
  EXPECT_EQ(again.read_input(pending), "a");
}
