#pragma once

// Canned simulator setups used by the CLI examples and the acceptance suite.

#include <cstdint>
#include <string>

#include "uniboost/traffic_sim.hpp"

namespace uniboost {

/// One pid_delivered plan "ad_delivery" on ads with target share 0.10,
/// 500 ticks of 500 requests. Only exposed events are retained.
SimConfig delivery_scenario(std::uint64_t seed, std::int64_t ticks = 500);

/// Uniboost arm: ad delivery (pid, target 0.10) plus a cold-start boost
/// (w = 1). Legacy arm: the historical stack of an organic base weight,
/// a heavier cold-start weight and a static ad weight "ad_weight" that is
/// tuned to match the uniboost ad share. Both arms see identical traffic.
struct InflationPair {
  SimConfig uniboost;
  SimConfig legacy;
};
InflationPair inflation_scenario(std::uint64_t seed,
                                 std::int64_t n_requests = 20000);

struct InflationOutcome {
  SimRun uniboost;
  SimRun legacy;
  LegacyTuning tuning;
};
/// Runs the uniboost arm, tunes the legacy ad weight to its ad share and
/// runs the tuned legacy arm.
InflationOutcome run_inflation(std::uint64_t seed,
                               std::int64_t n_requests = 20000);

/// Three static plans. "low_value_push" adds a flat bias to a tagged slice of
/// organic content whose raw scores are depressed; "cold_start" and "promo"
/// are ordinary multiplicative boosts. Decisions and events are retained.
inline constexpr const char* kWastefulPlanId = "low_value_push";
SimConfig wasteful_plan_scenario(std::uint64_t seed,
                                 std::int64_t n_requests = 5000);

/// No plans; enough requests for `exposures` exposed events with outcomes.
SimConfig anchor_sweep_scenario(std::uint64_t seed,
                                std::int64_t exposures = 100000);

}  // namespace uniboost
