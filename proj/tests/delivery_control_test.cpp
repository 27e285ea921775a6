#include <cmath>
#include <gtest/gtest.h>

#include "support/expect_error.hpp"
#include "uniboost/delivery_control.hpp"

namespace uniboost {
namespace {

ExposureEvent exposure(std::string request, std::string cand, ContentType type,
                       Timestamp t, bool exposed = true) {
  ExposureEvent e;
  e.request_id = std::move(request);
  e.candidate_id = std::move(cand);
  e.content_type = type;
  e.timestamp = t;
  e.exposed = exposed;
  e.decomposition.candidate_id = e.candidate_id;
  return e;
}

Plan ad_plan() {
  Plan p;
  p.plan_id = "ad";
  p.selector.content_type = ContentType::ad();
  p.mode = PlanMode::kPidDelivered;
  p.target_share = 0.1;
  return p;
}

TEST(MeasureShare, CountsMembersAmongExposed) {
  std::vector<ExposureEvent> events;
  for (int i = 0; i < 10; ++i) {
    events.push_back(exposure("r", "c" + std::to_string(i),
                              i < 3 ? ContentType::ad() : ContentType::organic(), 5));
  }
  events.push_back(exposure("r", "u", ContentType::ad(), 5, false));
  events.push_back(exposure("r", "late", ContentType::ad(), 50));
  const auto m = measure_exposure_share(events, ad_plan(), {0, 10});
  EXPECT_EQ(m.exposed_total, 10);
  EXPECT_EQ(m.exposed_plan, 3);
  EXPECT_DOUBLE_EQ(*m.share, 0.3);
}

TEST(MeasureShare, EmptyAndFull) {
  EXPECT_UB_ERROR((measure_exposure_share({}, ad_plan(), {0, 10})), ErrorCode::kEmptyWindow);
  std::vector<ExposureEvent> events = {exposure("r", "a", ContentType::ad(), 1)};
  EXPECT_EQ(*measure_exposure_share(events, ad_plan(), {0, 10}).share, 1.0);
}

TEST(PidStep, ProportionalOnly) {
  PidState s;
  s.kp = 1.0;
  s.ki = 0.0;
  const auto step = pid_step(s, 0.07, 0.10, 1.0);
  EXPECT_NEAR(step.bias, 0.03, 1e-15);
}

TEST(PidStep, ZeroErrorFreshState) {
  const auto step = pid_step(PidState{}, 0.1, 0.1, 1.0);
  EXPECT_EQ(step.bias, 0.0);
}

TEST(PidStep, SaturationFreezesIntegral) {
  PidState s;
  s.kp = 1000.0;
  s.output_max = 0.5;
  s.integral = 0.25;
  const auto step = pid_step(s, 0.0, 0.1, 1.0);
  EXPECT_EQ(step.bias, 0.5);
  EXPECT_EQ(step.state.integral, 0.25);
}

TEST(PidStep, IntegralBoundedByWindupLimit) {
  PidState s;
  s.kp = 0.0;
  s.ki = 1e-3;  // stays unsaturated so integration continues
  s.windup_limit = 0.5;
  for (int i = 0; i < 100; ++i) s = pid_step(s, 0.0, 0.1, 1.0).state;
  EXPECT_EQ(s.integral, 0.5);
}

TEST(PidStep, NegativeOutputOnlyWhenConfigured) {
  PidState s;
  const auto clamped = pid_step(s, 0.5, 0.1, 1.0);
  EXPECT_EQ(clamped.bias, 0.0);
  s.output_min = -1.0;
  EXPECT_LT(pid_step(s, 0.5, 0.1, 1.0).bias, 0.0);
}

TEST(PidStep, DerivativeUsesLastError) {
  PidState s;
  s.kp = 0.0;
  s.ki = 0.0;
  s.kd = 1.0;
  s.output_min = -10.0;
  s.last_error = 0.05;
  EXPECT_NEAR(pid_step(s, 0.0, 0.1, 2.0).bias, (0.1 - 0.05) / 2.0, 1e-15);
  EXPECT_UB_ERROR((pid_step(s, 0.0, 0.1, 0.0)), ErrorCode::kInvalidConfig);
}

TEST(ApplyOutputs, ReplacesBiasOfPidPlans) {
  Plan cold;
  cold.plan_id = "cold";
  cold.weight = 0.5;
  const PlanRegistry reg({ad_plan(), cold}, 4);
  const auto next = apply_controller_outputs(reg, {{"ad", 0.05}});
  EXPECT_EQ(next.at("ad").bias, 0.05);
  EXPECT_EQ(next.version(), 5u);
  EXPECT_UB_ERROR((apply_controller_outputs(reg, {{"cold", 0.05}})), ErrorCode::kWrongMode);
  EXPECT_UB_ERROR((apply_controller_outputs(reg, {{"nope", 0.05}})), ErrorCode::kUnknownPlan);
  const auto same = apply_controller_outputs(reg, {});
  EXPECT_EQ(same.plans(), reg.plans());
  EXPECT_EQ(same.version(), 5u);
}

TEST(DeliveryController, SkipsEmptyWindowsAndKeepsState) {
  DeliveryController c;
  const PlanRegistry reg({ad_plan()});
  auto r0 = c.tick({}, reg, {0, 10});
  EXPECT_TRUE(r0.outputs.empty());
  std::vector<ExposureEvent> events = {exposure("r", "a", ContentType::organic(), 1)};
  auto r1 = c.tick(events, reg, {0, 10});
  ASSERT_EQ(r1.outputs.count("ad"), 1u);
  // Default gains, error 0.1: 0.5 * 0.1 + 0.1 * 0.1.
  EXPECT_NEAR(r1.outputs.at("ad"), 0.06, 1e-15);
  ASSERT_EQ(r1.trace.size(), 1u);
  EXPECT_EQ(r1.trace[0].tick, 1);
  EXPECT_EQ(c.ticks(), 2);
  EXPECT_EQ(c.states().at("ad").integral, 0.1);
}

TEST(DeliveryController, ClosedLoopOnToyPlant) {
  // Share responds linearly to bias: share = 0.02 + 0.5 * bias.
  DeliveryController c;
  PlanRegistry reg({ad_plan()});
  double share = 0.02;
  for (int t = 0; t < 200; ++t) {
    std::vector<ExposureEvent> events;
    const int members = static_cast<int>(std::lround(share * 1000));
    for (int i = 0; i < 1000; ++i) {
      events.push_back(exposure("r" + std::to_string(i), "c",
                                i < members ? ContentType::ad() : ContentType::organic(), 0));
    }
    auto r = c.tick(events, reg, {0, 1});
    reg = apply_controller_outputs(reg, r.outputs);
    share = 0.02 + 0.5 * reg.at("ad").bias;
  }
  EXPECT_NEAR(share, 0.1, 0.002);
}

}  // namespace
}  // namespace uniboost
