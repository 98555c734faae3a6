#include <regex>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include "dsiqa/service.hpp"
#include "dsiqa/text.hpp"
#include "support/dataset_fixture.hpp"

using namespace dsiqa;
using fixture::TempDir;
using json = nlohmann::json;

namespace {

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    fixture::build_small_dataset(dir_.path(), 3);
    manifest_ = read_manifest(dir_ / "data" / "manifest.json");
  }

  std::unique_ptr<StudyService> make(std::uint64_t seed = 5) {
    return std::make_unique<StudyService>(manifest_, dir_ / "votes.jsonl", seed);
  }

  static json body(const ApiResponse& r) { return json::parse(r.body); }

  static std::string session(StudyService& s, const std::string& observer) {
    const auto r = s.create_session(json{{"observer_id", observer}}.dump());
    EXPECT_EQ(r.status, 200);
    return body(r)["session_id"];
  }

  static ApiResponse vote(StudyService& s, const std::string& id, std::int64_t index, const char* winner) {
    return s.submit_vote(id, json{{"pair_index", index}, {"winner", winner}}.dump());
  }

  std::size_t log_lines() const {
    const auto text = fixture::read_bytes(dir_ / "votes.jsonl");
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  }

  TempDir dir_{"svc"};
  DatasetManifest manifest_;
};

}  // namespace

TEST_F(ServiceTest, CreateSessionAndResume) {
  auto svc = make();
  const auto r = svc->create_session(R"({"observer_id":"alice"})");
  ASSERT_EQ(r.status, 200);
  const auto j = body(r);
  EXPECT_EQ(j["total_pairs"], 18);
  EXPECT_EQ(j["cursor"], 0);
  const std::string id = j["session_id"];
  ASSERT_EQ(vote(*svc, id, 0, "left").status, 200);
  const auto again = body(svc->create_session(R"({"observer_id":"alice"})"));
  EXPECT_EQ(again["session_id"], id);
  EXPECT_EQ(again["cursor"], 1);
  EXPECT_NE(session(*svc, "bob"), id);
}

TEST_F(ServiceTest, CreateSessionValidation) {
  auto svc = make();
  EXPECT_EQ(svc->create_session(R"({"observer_id":""})").status, 400);
  EXPECT_EQ(svc->create_session(R"({"observer_id":"   "})").status, 400);
  EXPECT_EQ(svc->create_session(R"({})").status, 400);
  EXPECT_EQ(svc->create_session("not json").status, 400);
}

TEST_F(ServiceTest, NextPairLifecycle) {
  auto svc = make();
  const auto id = session(*svc, "alice");
  EXPECT_EQ(svc->next_pair("nope").status, 404);
  auto first = body(svc->next_pair(id));
  EXPECT_EQ(first["pair_index"], 0);
  // Reading does not advance.
  EXPECT_EQ(body(svc->next_pair(id))["pair_index"], 0);
  for (int i = 0; i < 18; ++i) {
    const auto n = body(svc->next_pair(id));
    ASSERT_EQ(n["pair_index"], i);
    const auto r = vote(*svc, id, i, i % 2 ? "left" : "right");
    ASSERT_EQ(r.status, 200) << r.body;
    EXPECT_EQ(body(r)["progress"]["answered"], i + 1);
  }
  const auto done = body(svc->next_pair(id));
  EXPECT_EQ(done["done"], true);
  EXPECT_EQ(log_lines(), 18u);
}

TEST_F(ServiceTest, VoteOrderingAndConflicts) {
  auto svc = make();
  const auto id = session(*svc, "alice");
  EXPECT_EQ(vote(*svc, "nope", 0, "left").status, 404);
  EXPECT_EQ(vote(*svc, id, 1, "left").status, 409);
  EXPECT_EQ(vote(*svc, id, 99, "left").status, 409);
  EXPECT_EQ(vote(*svc, id, 0, "middle").status, 400);
  EXPECT_EQ(vote(*svc, id, -1, "left").status, 400);
  EXPECT_EQ(svc->submit_vote(id, "{").status, 400);
  const auto ok = vote(*svc, id, 0, "left");
  ASSERT_EQ(ok.status, 200);
  EXPECT_EQ(body(ok)["accepted"], true);
  const auto dup = vote(*svc, id, 0, "left");
  EXPECT_EQ(dup.status, 200);
  EXPECT_EQ(body(dup)["duplicate"], true);
  EXPECT_EQ(body(dup)["progress"]["answered"], 1);
  EXPECT_EQ(vote(*svc, id, 0, "right").status, 409);
  EXPECT_EQ(vote(*svc, id, 2, "right").status, 409);
  EXPECT_EQ(log_lines(), 1u);
}

TEST_F(ServiceTest, ImagesAreServedVerbatimBehindOpaqueTokens) {
  auto svc = make();
  const auto id = session(*svc, "alice");
  const auto n = body(svc->next_pair(id));
  const std::string prefix = "/api/images/";
  for (const char* key : {"left_image_url", "right_image_url", "reference_image_url"}) {
    const std::string url = n[key];
    ASSERT_EQ(url.rfind(prefix, 0), 0u);
    const auto img = svc->image(url.substr(prefix.size()));
    EXPECT_EQ(img.status, 200);
    EXPECT_EQ(img.content_type, "image/png");
    EXPECT_EQ(img.body.substr(1, 3), "PNG");
  }
  // The reference token resolves to the reference file's exact bytes.
  const std::string ref_url = n["reference_image_url"];
  const auto pair = schedule_pairs(manifest_, "alice", 5)[0];
  const auto ref_bytes = fixture::read_bytes(manifest_.resolve(manifest_.find(pair.reference_id)->ref_path));
  EXPECT_EQ(svc->image(ref_url.substr(prefix.size())).body, ref_bytes);
  EXPECT_EQ(svc->image("deadbeef").status, 404);
}

TEST_F(ServiceTest, ResponsesNeverRevealLambdasOrPaths) {
  auto svc = make();
  const auto id = session(*svc, "alice");
  std::vector<std::string> bodies;
  for (int i = 0; i < 18; ++i) {
    bodies.push_back(svc->next_pair(id).body);
    bodies.push_back(vote(*svc, id, i, "left").body);
  }
  bodies.push_back(svc->next_pair(id).body);
  bodies.push_back(svc->progress().body);
  bodies.push_back(svc->create_session(R"({"observer_id":"alice"})").body);
  const std::vector<std::string> forbidden{"1.6", "2.0", "2.4", "2.8", "lambda", "ref0", ".png", "noisy", "reference/"};
  for (const auto& b : bodies) {
    for (const auto& f : forbidden) EXPECT_EQ(b.find(f), std::string::npos) << f << " in " << b;
  }
}

TEST_F(ServiceTest, ProgressSummary) {
  auto svc = make();
  EXPECT_EQ(svc->progress().body, "[]");
  const auto a = session(*svc, "alice");
  session(*svc, "bob");
  vote(*svc, a, 0, "left");
  const auto p = body(svc->progress());
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0]["observer_id"], "alice");
  EXPECT_EQ(p[0]["answered"], 1);
  EXPECT_EQ(p[0]["total"], 18);
  EXPECT_EQ(p[1]["answered"], 0);
  EXPECT_EQ(p[1]["done"], false);
}

TEST_F(ServiceTest, RestartReplaysVoteLog) {
  std::string id;
  {
    auto svc = make();
    id = session(*svc, "alice");
    for (int i = 0; i < 7; ++i) ASSERT_EQ(vote(*svc, id, i, i % 3 ? "left" : "right").status, 200);
    const auto b = session(*svc, "bob");
    for (int i = 0; i < 3; ++i) vote(*svc, b, i, "right");
  }
  auto svc = make();
  // Cursors are back before anyone reconnects.
  const auto p = body(svc->progress());
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0]["answered"], 7);
  EXPECT_EQ(p[1]["answered"], 3);
  EXPECT_EQ(body(svc->next_pair(id))["pair_index"], 7);
  const auto again = body(svc->create_session(R"({"observer_id":"alice"})"));
  EXPECT_EQ(again["session_id"], id);
  EXPECT_EQ(again["cursor"], 7);
  // Pair 6 was answered "right" and pair 0 "right" before the restart.
  EXPECT_EQ(vote(*svc, id, 6, "right").status, 200);
  EXPECT_EQ(vote(*svc, id, 0, "left").status, 409);
  EXPECT_EQ(log_lines(), 10u);
}

TEST_F(ServiceTest, DifferentSeedsGiveIndependentSessions) {
  {
    auto svc = make(1);
    const auto id = session(*svc, "alice");
    vote(*svc, id, 0, "left");
  }
  auto other = make(2);
  EXPECT_EQ(other->progress().body, "[]");
  EXPECT_EQ(body(other->create_session(R"({"observer_id":"alice"})"))["cursor"], 0);
}

TEST_F(ServiceTest, ConcurrentObserversDoNotInterleave) {
  auto svc = make();
  std::vector<std::thread> threads;
  std::atomic<int> failures{0};
  for (int o = 0; o < 4; ++o) {
    threads.emplace_back([&, o] {
      const auto id = session(*svc, "obs" + std::to_string(o));
      for (int i = 0; i < 18; ++i) {
        if (vote(*svc, id, i, (i + o) % 2 ? "left" : "right").status != 200) ++failures;
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(failures, 0);
  EXPECT_EQ(log_lines(), 72u);
  for (const auto& v : read_vote_log(dir_ / "votes.jsonl")) {
    EXPECT_EQ(v.session_id, body(svc->create_session(json{{"observer_id", v.observer_id}}.dump()))["session_id"]);
  }
}

TEST_F(ServiceTest, HttpRoundTrip) {
  auto svc = std::make_shared<StudyService>(manifest_, dir_ / "votes.jsonl", 5);
  fixture::write_bytes(dir_ / "index.html", "<html>study</html>");
  HttpServer server(svc, dir_.path());
  const int port = server.start("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  httplib::Client cli("127.0.0.1", port);

  auto res = cli.Post("/api/sessions", R"({"observer_id":"carol"})", "application/json");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  const std::string id = json::parse(res->body)["session_id"];
  EXPECT_EQ(json::parse(res->body)["total_pairs"], 18);

  res = cli.Post("/api/sessions", R"({"observer_id":""})", "application/json");
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(cli.Get("/api/sessions/unknown/next")->status, 404);

  res = cli.Get("/api/sessions/" + id + "/next");
  ASSERT_EQ(res->status, 200);
  const auto next = json::parse(res->body);
  EXPECT_EQ(next["pair_index"], 0);
  auto img = cli.Get(next["left_image_url"].get<std::string>());
  ASSERT_EQ(img->status, 200);
  EXPECT_EQ(img->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(cli.Get("/api/images/nothing")->status, 404);

  res = cli.Post("/api/sessions/" + id + "/votes", R"({"pair_index":1,"winner":"left"})", "application/json");
  EXPECT_EQ(res->status, 409);
  res = cli.Post("/api/sessions/" + id + "/votes", R"({"pair_index":0,"winner":"left"})", "application/json");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["progress"]["answered"], 1);
  res = cli.Post("/api/sessions/" + id + "/votes", R"({"pair_index":0,"winner":"right"})", "application/json");
  EXPECT_EQ(res->status, 409);

  res = cli.Get("/api/progress");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)[0]["answered"], 1);

  res = cli.Get("/index.html");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->body, "<html>study</html>");
  server.stop();
}

TEST_F(ServiceTest, HttpPlaceholderWithoutStaticDir) {
  auto svc = std::make_shared<StudyService>(manifest_, std::nullopt, 5);
  HttpServer server(svc, std::nullopt);
  const int port = server.start("127.0.0.1", 0);
  httplib::Client cli("127.0.0.1", port);
  auto res = cli.Get("/");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->body.find("2.8"), std::string::npos);
  EXPECT_EQ(cli.Get("/api/progress")->body, "[]");
  server.stop();
}
