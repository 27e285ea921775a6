#pragma once

// Offline attribution. Per-plan lift and cost come from replaying logged
// decisions with a single plan's boosts removed; anchor-metric candidates
// are compared through equal-frequency calibration curves.

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "uniboost/core_model.hpp"
#include "uniboost/tracking.hpp"

namespace uniboost {

struct ReplayResult {
  std::int64_t vv_lift = 0;
  double cost = 0.0;
};

/// For every decision: drop `plan_id` from each decomposition, recompose the
/// finals in plan_id order, re-sort with ranks_before and re-truncate at the
/// logged exposed_k.
///   vv_lift = member exposures (actual) - member exposures (counterfactual)
///   cost    = sum of aligned value exposed only counterfactually
///             - sum of aligned value of members exposed only actually,
///             floored at 0 over the whole set of decisions.
/// Throws UnknownPlan when plan_id is not in `known_plans`, and
/// MissingDecomposition for decisions that only carry a coupled legacy
/// boost.
ReplayResult counterfactual_replay(std::span<const BlendDecision> decisions,
                                   const std::string& plan_id,
                                   const std::set<std::string>& known_plans);

/// Rebuilds one BlendDecision per request_id from a full event log (exposed
/// and unexposed events), in order of first appearance. Throws
/// MissingDecomposition when a request has no exposed events.
std::vector<BlendDecision> decisions_from_events(
    std::span<const ExposureEvent> events);

/// Every plan id that appears in a decomposition.
std::set<std::string> plans_in(std::span<const BlendDecision> decisions);

/// vv_lift / cost, absent when cost == 0.
std::optional<double> roi(std::int64_t vv_lift, double cost);

struct PlanReport {
  std::string plan_id;
  TimeRange window;
  double cost = 0.0;
  std::int64_t vv_lift = 0;
  double boost_spend = 0.0;
  double exposure_share = 0.0;
  std::optional<double> roi_vv;
};

/// One report per enabled plan of the registry, restricted to events whose
/// timestamp falls in `window` and to the decisions of those requests.
std::vector<PlanReport> plan_reports(std::span<const ExposureEvent> events,
                                     std::span<const BlendDecision> decisions,
                                     const PlanRegistry& registry,
                                     TimeRange window);

/// Ascending by ROI; a report without ROI (zero cost) ranks as infinitely
/// profitable. Ties by plan_id.
std::vector<PlanReport> rank_by_roi(std::vector<PlanReport> reports);

struct CalibrationBin {
  double score_lo = 0.0;
  double score_hi = 0.0;
  double mean_score = 0.0;
  double mean_outcome = 0.0;
  std::int64_t n = 0;
};

/// Per-bin calibration of one outcome metric against the aligned score.
/// The aligned score is first rescaled onto the metric's own scale
/// (scale = mean outcome / mean aligned over the analyzed events), so every
/// metric is judged as if it were the anchor. calibration_errors holds
/// |mean_outcome - scale * mean_score| per bin; stability is the population
/// standard deviation of those errors divided by the metric's mean, which
/// makes metrics with different units comparable. A metric that never fires
/// has infinite stability.
struct CalibrationCurve {
  std::string metric;
  std::vector<CalibrationBin> bins;
  double scale = 1.0;
  std::vector<double> calibration_errors;
  double stability = 0.0;
};

inline constexpr std::size_t kDefaultCalibrationBins = 20;

/// Equal-frequency bins over the aligned score of exposed events carrying
/// outcomes. Throws InsufficientData with fewer such events than bins, and
/// InvalidConfig for an unknown metric.
CalibrationCurve calibration_curve(std::span<const ExposureEvent> events,
                                   const std::string& metric,
                                   std::size_t n_bins = kDefaultCalibrationBins);

/// Ascending by stability, ties by metric name.
std::vector<CalibrationCurve> rank_anchor_candidates(
    std::vector<CalibrationCurve> curves);

}  // namespace uniboost
