#include "uniboost/scenarios.hpp"

namespace uniboost {
namespace {

Plan content_plan(std::string id, ContentType type, double weight) {
  Plan p;
  p.plan_id = std::move(id);
  p.selector.content_type = type;
  p.weight = weight;
  return p;
}

Plan delivery_plan(double target) {
  Plan p;
  p.plan_id = "ad_delivery";
  p.selector.content_type = ContentType::ad();
  p.mode = PlanMode::kPidDelivered;
  p.target_share = target;
  return p;
}

}  // namespace

SimConfig delivery_scenario(std::uint64_t seed, std::int64_t ticks) {
  SimConfig c = default_sim_config(seed);
  c.n_requests = ticks * c.control_tick;
  c.plans = PlanRegistry({delivery_plan(0.10)});
  c.retain = {false, false, false};
  return c;
}

InflationPair inflation_scenario(std::uint64_t seed, std::int64_t n_requests) {
  InflationPair pair;
  pair.uniboost = default_sim_config(seed);
  pair.uniboost.n_requests = n_requests;
  pair.uniboost.retain = {false, false, false};
  pair.uniboost.plans = PlanRegistry(
      {delivery_plan(0.10), content_plan("cold_start", ContentType::cold_start(), 1.0)});

  pair.legacy = pair.uniboost;
  pair.legacy.pipeline = Pipeline::kLegacy;
  pair.legacy.plans =
      PlanRegistry({content_plan("organic_base", ContentType::organic(), 1.0),
                    content_plan("cold_start", ContentType::cold_start(), 3.0),
                    content_plan("ad_weight", ContentType::ad(), 0.0)});
  return pair;
}

InflationOutcome run_inflation(std::uint64_t seed, std::int64_t n_requests) {
  const InflationPair pair = inflation_scenario(seed, n_requests);
  InflationOutcome out;
  out.uniboost = run(pair.uniboost);
  const double target = out.uniboost.summary.type_shares.at("ad");
  out.tuning = tune_legacy_weight(pair.legacy, "ad_weight", target);
  out.legacy = run(out.tuning.config);
  return out;
}

SimConfig wasteful_plan_scenario(std::uint64_t seed, std::int64_t n_requests) {
  SimConfig c = default_sim_config(seed);
  c.n_requests = n_requests;
  c.tag_rules = {{kWastefulPlanId, 0.10, ContentType::organic(), 0.3},
                 {"promo", 0.15, std::nullopt, 1.0}};
  c.retain = {true, true, true};

  Plan push;
  push.plan_id = kWastefulPlanId;
  push.selector.tags = {kWastefulPlanId};
  push.bias = 0.25;
  Plan promo;
  promo.plan_id = "promo";
  promo.selector.tags = {"promo"};
  promo.weight = 0.5;
  c.plans = PlanRegistry(
      {push, promo, content_plan("cold_start", ContentType::cold_start(), 1.0)});
  return c;
}

SimConfig anchor_sweep_scenario(std::uint64_t seed, std::int64_t exposures) {
  SimConfig c = default_sim_config(seed);
  c.n_requests = (exposures + static_cast<std::int64_t>(c.k) - 1) /
                 static_cast<std::int64_t>(c.k);
  c.retain = {true, false, false};
  return c;
}

}  // namespace uniboost
