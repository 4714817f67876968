#include <gtest/gtest.h>

#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "lx/csv.hpp"
#include "lx/service.hpp"
#include "test_support.hpp"

using namespace lx;
using namespace std::chrono_literals;
using nlohmann::json;
using lx::testing::TempDir;

namespace {

const std::string kUpload =
    "ID_num,TEXT\n"
    "1,I was irritated and sad\n"
    "2,So happy\n";

service::ServiceConfig base_config(const TempDir& dir) {
  service::ServiceConfig c;
  c.data_dir = dir.path();
  c.workers = 1;
  return c;
}

httplib::MultipartFormDataItems job_form(const std::string& csv, const std::string& config) {
  return {{"file", csv, "upload.csv", "text/csv"}, {"config", config, "", "application/json"}};
}

json poll_until_finished(httplib::Client& cli, const std::string& id) {
  for (int i = 0; i < 200; ++i) {
    auto res = cli.Get("/jobs/" + id);
    if (res && res->status == 200) {
      auto j = json::parse(res->body);
      if (j["state"] == "Done" || j["state"] == "Failed") return j;
    }
    std::this_thread::sleep_for(20ms);
  }
  return {};
}

}  // namespace

TEST(Service, SubmitPollDownloadDelete) {
  TempDir dir;
  service::Service svc(base_config(dir));
  const int port = svc.bind("127.0.0.1", 0);
  svc.start();
  httplib::Client cli("127.0.0.1", port);

  auto health = cli.Get("/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);

  auto submitted = cli.Post("/jobs", job_form(kUpload, R"({"id_column":"ID_num","text_column":"TEXT",
      "perceptions":["anger","sadness","joy"]})"));
  ASSERT_TRUE(submitted);
  ASSERT_EQ(submitted->status, 202) << submitted->body;
  const std::string id = json::parse(submitted->body)["job_id"];
  EXPECT_EQ(id.size(), 32u);

  const auto status = poll_until_finished(cli, id);
  ASSERT_FALSE(status.is_null());
  EXPECT_EQ(status["state"], "Done");
  EXPECT_EQ(status["row_count"], 2);
  EXPECT_TRUE(status["retention_deadline"].get<std::string>().ends_with("Z"));

  auto result = cli.Get("/jobs/" + id + "/result");
  ASSERT_TRUE(result);
  EXPECT_EQ(result->status, 200);
  EXPECT_EQ(result->get_header_value("Content-Type").rfind("text/csv", 0), 0u);
  const auto table = csv::parse(result->body);
  EXPECT_EQ(table.header, (std::vector<std::string>{"ID_num", "anger", "sadness", "joy", "word_count"}));
  ASSERT_EQ(table.rows.size(), 2u);
  EXPECT_EQ(table.rows[0], (std::vector<std::string>{"1", "1", "1", "0", "5"}));

  auto warnings = cli.Get("/jobs/" + id + "/warnings");
  ASSERT_TRUE(warnings);
  EXPECT_EQ(warnings->status, 200);

  auto del = cli.Delete("/jobs/" + id);
  ASSERT_TRUE(del);
  EXPECT_EQ(del->status, 204);
  auto gone = cli.Get("/jobs/" + id);
  ASSERT_TRUE(gone);
  EXPECT_EQ(gone->status, 404);
  svc.stop();
}

TEST(Service, RejectsBadRequests) {
  TempDir dir;
  auto cfg = base_config(dir);
  cfg.limits.max_bytes = 64;
  service::Service svc(cfg);
  const int port = svc.bind("127.0.0.1", 0);
  svc.start();
  httplib::Client cli("127.0.0.1", port);

  auto unknown = cli.Get("/jobs/0123456789abcdef0123456789abcdef");
  ASSERT_TRUE(unknown);
  EXPECT_EQ(unknown->status, 404);

  auto bad_perception = cli.Post("/jobs", job_form(kUpload, R"({"text_column":"TEXT","perceptions":["telepathy"]})"));
  ASSERT_TRUE(bad_perception);
  EXPECT_EQ(bad_perception->status, 400);

  auto missing_col = cli.Post("/jobs", job_form("a,b\n1,2\n", R"({"text_column":"TEXT","perceptions":["joy"]})"));
  ASSERT_TRUE(missing_col);
  EXPECT_EQ(missing_col->status, 400);

  auto too_big = cli.Post("/jobs", job_form("TEXT\n" + std::string(200, 'x') + "\n",
                                            R"({"text_column":"TEXT","perceptions":["joy"]})"));
  ASSERT_TRUE(too_big);
  EXPECT_EQ(too_big->status, 413);

  auto not_multipart = cli.Post("/jobs", "{}", "application/json");
  ASSERT_TRUE(not_multipart);
  EXPECT_EQ(not_multipart->status, 400);
  svc.stop();
}

TEST(Service, PreviewAndPerceptions) {
  TempDir dir;
  service::Service svc(base_config(dir));
  const int port = svc.bind("127.0.0.1", 0);
  svc.start();
  httplib::Client cli("127.0.0.1", port);

  auto per = cli.Get("/perceptions");
  ASSERT_TRUE(per);
  const auto list = json::parse(per->body);
  EXPECT_EQ(list.size(), 20u);

  httplib::MultipartFormDataItems form{{"file", kUpload, "u.csv", "text/csv"}, {"text_column", "TEXT", "", ""},
                                       {"n", "1", "", ""}};
  auto prev = cli.Post("/preview", form);
  ASSERT_TRUE(prev);
  ASSERT_EQ(prev->status, 200) << prev->body;
  const auto j = json::parse(prev->body);
  EXPECT_EQ(j["header"], json::array({"ID_num", "TEXT"}));
  EXPECT_EQ(j["values"], json::array({"I was irritated and sad"}));
  svc.stop();
}

TEST(Service, BearerAuth) {
  TempDir dir;
  auto cfg = base_config(dir);
  cfg.auth_token = "letmein";
  service::Service svc(cfg);
  const int port = svc.bind("127.0.0.1", 0);
  svc.start();
  httplib::Client cli("127.0.0.1", port);
  auto denied = cli.Get("/perceptions");
  ASSERT_TRUE(denied);
  EXPECT_EQ(denied->status, 401);
  cli.set_bearer_token_auth("letmein");
  auto ok = cli.Get("/perceptions");
  ASSERT_TRUE(ok);
  EXPECT_EQ(ok->status, 200);
  svc.stop();
}

TEST(Service, DirectSubmitAndWait) {
  TempDir dir;
  service::Service svc(base_config(dir));
  pipeline::AnalysisConfig cfg;
  cfg.id_column = "ID_num";
  cfg.text_column = "TEXT";
  cfg.selected_perceptions = {"joy"};
  const auto id = svc.submit(kUpload, cfg);
  const auto job = svc.wait(id, 10s);
  EXPECT_EQ(job.state, jobs::JobState::Done);
  EXPECT_NE(svc.store().read_result(id).find("2,1,2"), std::string::npos);
}

TEST(Service, FormatUtc) {
  EXPECT_EQ(service::format_utc(jobs::TimePoint(std::chrono::seconds(0))), "1970-01-01T00:00:00Z");
  EXPECT_EQ(service::format_utc(jobs::TimePoint(std::chrono::seconds(1'700'000'000))), "2023-11-14T22:13:20Z");
}
