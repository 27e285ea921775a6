#include <gtest/gtest.h>

#include <httplib.h>

#include <chrono>
#include <filesystem>
#include <thread>

#include "support/expect_error.hpp"
#include "uniboost/service.hpp"

namespace uniboost {
namespace {

namespace fs = std::filesystem;

Plan ad_plan(double weight = 1.0, double bias = 0.0) {
  Plan p;
  p.plan_id = "ad";
  p.selector.content_type = ContentType::ad();
  p.weight = weight;
  p.bias = bias;
  return p;
}

ServiceConfig idle_config(Timestamp window_length = 500) {
  ServiceConfig c;
  c.plans = PlanRegistry({ad_plan()});
  c.alignment.mu_score = 0.5;
  c.alignment.mu_anchor = 0.5;
  c.alignment.sample_count = 1000;
  c.window_length = window_length;
  return c;
}

// A: organic 0.6, B: ad 0.5, C: cold_start 0.4; k = 2.
Json abc_request(const std::string& id = "req") {
  return Json{{"request_id", id},
              {"k", 2},
              {"candidates",
               {{{"id", "A"}, {"content_type", "organic"}, {"raw_score", 0.6}},
                {{"id", "B"}, {"content_type", "ad"}, {"raw_score", 0.5}},
                {{"id", "C"}, {"content_type", "cold_start"}, {"raw_score", 0.4}}}}};
}

BlendRequest ac_request() {
  // Ad "B" sits just below the cut with zero weight.
  return Json{{"request_id", "w"},
              {"k", 1},
              {"candidates",
               {{{"id", "A"}, {"content_type", "organic"}, {"raw_score", 0.6}},
                {{"id", "B"}, {"content_type", "ad"}, {"raw_score", 0.5}}}}}
      .get<BlendRequest>();
}

class HttpService : public ::testing::Test {
 protected:
  void start(ServiceConfig config) {
    service_ = std::make_unique<Service>(std::move(config));
    port_ = service_->start_http("127.0.0.1", 0);
    ASSERT_GT(port_, 0);
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(10, 0);
  }
  void TearDown() override {
    client_.reset();
    if (service_) service_->stop();
  }

  httplib::Result post(const std::string& path, const Json& body) {
    return client_->Post(path.c_str(), body.dump(), "application/json");
  }
  httplib::Result put(const std::string& path, const Json& body) {
    return client_->Put(path.c_str(), body.dump(), "application/json");
  }

  std::unique_ptr<Service> service_;
  std::unique_ptr<httplib::Client> client_;
  int port_ = 0;
};

TEST_F(HttpService, BlendReturnsDecomposition) {
  start(idle_config());
  auto res = post("/blend", abc_request());
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  const Json body = Json::parse(res->body);
  const auto decision = body.get<BlendDecision>();
  ASSERT_EQ(decision.ranked.size(), 3u);
  EXPECT_EQ(decision.exposed_k, 2u);
  EXPECT_EQ(decision.ranked[0].candidate_id, "B");
  EXPECT_DOUBLE_EQ(decision.ranked[0].final_score, 1.0);
  EXPECT_EQ(decision.registry_version, 0u);
  EXPECT_EQ(service_->log_size(), 3u);
}

TEST_F(HttpService, BlendIsDeterministic) {
  start(idle_config());
  auto a = post("/blend", abc_request("same"));
  auto b = post("/blend", abc_request("same"));
  ASSERT_TRUE(a && b);
  EXPECT_EQ(Json::parse(a->body)["ranked"], Json::parse(b->body)["ranked"]);
}

TEST_F(HttpService, BlendRejectsBadRequests) {
  start(idle_config());
  Json empty = abc_request();
  empty["candidates"] = Json::array();
  auto res = post("/blend", empty);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(Json::parse(res->body)["error"], "InvalidRequest");

  res = client_->Post("/blend", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);

  Json negative = abc_request();
  negative["candidates"][0]["raw_score"] = -1.0;
  res = post("/blend", negative);
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(Json::parse(res->body)["error"], "NegativeRawScore");
  EXPECT_EQ(service_->log_size(), 0u);
}

TEST_F(HttpService, PlanEditsAreVersioned) {
  start(idle_config());
  auto res = put("/plans/ad", Json{{"selector", {{"content_type", "ad"}}},
                                   {"weight", 2.0},
                                   {"expected_version", 0}});
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(Json::parse(res->body)["version"], 1);

  res = client_->Get("/plans/ad");
  ASSERT_TRUE(res);
  EXPECT_EQ(Json::parse(res->body)["weight"], 2.0);

  res = put("/plans/ad", Json{{"weight", 3.0}, {"expected_version", 0}});
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 409);
  EXPECT_EQ(Json::parse(res->body)["error"], "VersionConflict");

  res = client_->Delete("/plans/ad?expected_version=1");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  res = client_->Get("/plans/ad");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);

  res = client_->Get("/plans?version=1");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(Json::parse(res->body)["plans"][0]["weight"], 2.0);
  res = client_->Get("/plans?version=99");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
}

TEST_F(HttpService, InvalidPlanRejected) {
  start(idle_config());
  auto res = put("/plans/bad", Json{{"mode", "pid_delivered"}});
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  res = put("/plans/x", Json{{"plan_id", "y"}});
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(service_->snapshot().registry->version(), 0u);
}

TEST_F(HttpService, BlendUsesEditedWeight) {
  start(idle_config());
  ASSERT_EQ(put("/plans/ad", Json{{"selector", {{"content_type", "ad"}}}, {"weight", 0.0}})
                ->status,
            200);
  const auto decision = Json::parse(post("/blend", abc_request())->body).get<BlendDecision>();
  EXPECT_EQ(decision.registry_version, 1u);
  EXPECT_EQ(decision.ranked[0].candidate_id, "A");
}

TEST_F(HttpService, ReportsRequireClosedWindow) {
  start(idle_config(2));
  ASSERT_EQ(post("/blend", abc_request("r0"))->status, 200);
  auto res = client_->Get("/reports/plans?window=0");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 425);
  EXPECT_EQ(Json::parse(res->body)["error"], "WindowOpen");

  ASSERT_EQ(post("/blend", abc_request("r1"))->status, 200);
  ASSERT_EQ(post("/blend", abc_request("r2"))->status, 200);
  res = client_->Get("/reports/plans?window=0");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  const Json body = Json::parse(res->body);
  ASSERT_EQ(body["reports"].size(), 1u);
  const Json& r = body["reports"][0];
  EXPECT_EQ(r["plan_id"], "ad");
  EXPECT_DOUBLE_EQ(r["exposure_share"].get<double>(), 0.5);
  EXPECT_EQ(r["vv_lift"], 0);

  res = client_->Get("/reports/plans");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
}

TEST_F(HttpService, WhatIfIsPure) {
  start(idle_config());
  ASSERT_EQ(put("/plans/ad", Json{{"selector", {{"content_type", "ad"}}}, {"weight", 0.0}})
                ->status,
            200);
  const std::size_t before = service_->log_size();

  auto res = post("/whatif", Json{{"request", ac_request()}, {"overrides", Json::array()}});
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  Json body = Json::parse(res->body);
  EXPECT_EQ(body["current"], body["overridden"]);

  res = post("/whatif", Json{{"request", ac_request()},
                             {"overrides", {{{"plan_id", "ad"}, {"bias", 0.2}}}}});
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  body = Json::parse(res->body);
  EXPECT_EQ(body["current"]["ranked"][0]["candidate_id"], "A");
  EXPECT_EQ(body["overridden"]["ranked"][0]["candidate_id"], "B");

  res = post("/whatif", Json{{"request", ac_request()},
                             {"overrides", {{{"plan_id", "nope"}, {"bias", 0.2}}}}});
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  EXPECT_EQ(service_->log_size(), before);
  EXPECT_EQ(service_->snapshot().registry->version(), 1u);
}

TEST_F(HttpService, StatusAndAlignment) {
  start(idle_config());
  auto res = client_->Get("/status");
  ASSERT_TRUE(res);
  Json body = Json::parse(res->body);
  EXPECT_EQ(body["mode"], "idle");
  EXPECT_EQ(body["registry_version"], 0);
  res = client_->Get("/alignment");
  ASSERT_TRUE(res);
  EXPECT_EQ(Json::parse(res->body)["mu_score"], 0.5);
}

TEST(ServiceConfigTest, DegenerateAlignmentRefused) {
  ServiceConfig c = idle_config();
  c.alignment.mu_score = 0.0;
  EXPECT_UB_ERROR((Service{c}), ErrorCode::kDegenerateParams);
}

TEST(ServiceConfigTest, FromJson) {
  const auto c = service_config_from_json(
      Json{{"mode", "idle"}, {"plans", Json::array({ad_plan()})}, {"window_length", 10}});
  EXPECT_EQ(c.window_length, 10);
  EXPECT_EQ(c.plans.plans().size(), 1u);
  EXPECT_UB_ERROR((service_config_from_json(Json{{"mode", "live_sim"}})),
                  ErrorCode::kInvalidConfig);
  EXPECT_UB_ERROR((service_config_from_json(Json{{"mode", "bogus"}})),
                  ErrorCode::kInvalidConfig);
}

SimConfig small_live_sim() {
  SimConfig s = default_sim_config(11);
  s.n_requests = 400;
  Plan p = ad_plan(0.0);
  p.mode = PlanMode::kPidDelivered;
  p.target_share = 0.1;
  s.plans = PlanRegistry({p});
  return s;
}

TEST_F(HttpService, LiveSimStreamsTicks) {
  ServiceConfig c = idle_config(50);
  c.mode = RunMode::kLiveSim;
  c.sim = small_live_sim();
  c.plans = c.sim->plans;
  c.step_interval_us = 0;
  start(c);
  service_->start_live();

  std::string received;
  auto res = client_->Get("/metrics/stream", [&](const char* data, std::size_t n) {
    received.append(data, n);
    return received.find("\n\n", received.find("data: ")) == std::string::npos;
  });
  const auto data_at = received.find("data: ");
  ASSERT_NE(data_at, std::string::npos) << received;
  const auto end = received.find('\n', data_at);
  const Json tick = Json::parse(received.substr(data_at + 6, end - data_at - 6));
  EXPECT_TRUE(tick.contains("plan_shares"));
  EXPECT_TRUE(tick.contains("drift_final"));
  EXPECT_NE(received.find("event: tick"), std::string::npos);
}

TEST(ServiceRecovery, RegistryAndControllerSurviveRestart) {
  const fs::path dir = fs::temp_directory_path() / "uniboost-recovery-test";
  fs::remove_all(dir);
  ServiceConfig c = idle_config(50);
  c.mode = RunMode::kLiveSim;
  c.sim = small_live_sim();
  c.plans = c.sim->plans;
  c.step_interval_us = 0;
  c.data_dir = dir;

  std::uint64_t version = 0;
  double bias = 0.0;
  {
    Service s(c);
    s.start_live();
    for (int i = 0; i < 200 && s.mode() == RunMode::kLiveSim; ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    s.stop();
    const auto snap = s.snapshot();
    version = snap.registry->version();
    bias = snap.registry->at("ad").bias;
  }
  ASSERT_GT(version, 0u);
  ASSERT_TRUE(fs::exists(dir / "controllers.json"));
  ASSERT_TRUE(fs::exists(dir / "events"));

  Service restarted(c);
  EXPECT_EQ(restarted.snapshot().registry->version(), version);
  EXPECT_EQ(restarted.snapshot().registry->at("ad").bias, bias);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace uniboost
