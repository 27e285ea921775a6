#include "uniboost/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "uniboost/blender.hpp"
#include "uniboost/delivery_control.hpp"
#include "uniboost/error.hpp"

namespace uniboost {
namespace {

struct DecisionDelta {
  std::int64_t lift = 0;
  double displaced = 0.0;
};

DecisionDelta replay_one(const BlendDecision& decision,
                         const std::string& plan_id) {
  const auto& ranked = decision.ranked;
  const std::size_t n = ranked.size();
  const std::size_t k = std::min(decision.exposed_k, n);

  // Rank by counterfactual final without copying the decompositions.
  std::vector<double> cf_final(n);
  std::vector<bool> member(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& d = ranked[i];
    if (d.plan_boosts.contains(std::string(kLegacyPlanId))) {
      throw Error(ErrorCode::kMissingDecomposition,
                  "decision '" + decision.request_id +
                      "' only carries a coupled legacy boost");
    }
    auto it = d.plan_boosts.find(plan_id);
    member[i] = it != d.plan_boosts.end();
    if (member[i]) {
      auto others = d.plan_boosts;
      others.erase(plan_id);
      cf_final[i] = compose_final(d.aligned, others);
    } else {
      cf_final[i] = d.final_score;
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (cf_final[a] != cf_final[b]) return cf_final[a] > cf_final[b];
    return ranked[a].candidate_id < ranked[b].candidate_id;
  });

  std::vector<bool> cf_exposed(n, false);
  for (std::size_t r = 0; r < k; ++r) cf_exposed[order[r]] = true;

  DecisionDelta delta;
  for (std::size_t i = 0; i < n; ++i) {
    const bool actual = i < k;
    if (member[i]) delta.lift += (actual ? 1 : 0) - (cf_exposed[i] ? 1 : 0);
    if (cf_exposed[i] && !actual) delta.displaced += ranked[i].aligned;
    if (actual && !cf_exposed[i] && member[i]) {
      delta.displaced -= ranked[i].aligned;
    }
  }
  return delta;
}

double mean_of(std::span<const double> xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) /
         static_cast<double>(xs.size());
}

}  // namespace

ReplayResult counterfactual_replay(std::span<const BlendDecision> decisions,
                                   const std::string& plan_id,
                                   const std::set<std::string>& known_plans) {
  if (!known_plans.contains(plan_id)) {
    throw Error(ErrorCode::kUnknownPlan, "no plan '" + plan_id + "'");
  }
  ReplayResult result;
  double displaced = 0.0;
  for (const auto& decision : decisions) {
    const auto delta = replay_one(decision, plan_id);
    result.vv_lift += delta.lift;
    displaced += delta.displaced;
  }
  result.cost = std::max(displaced, 0.0);
  return result;
}

std::vector<BlendDecision> decisions_from_events(
    std::span<const ExposureEvent> events) {
  std::vector<BlendDecision> decisions;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& e : events) {
    auto [it, inserted] = index.try_emplace(e.request_id, decisions.size());
    if (inserted) {
      decisions.emplace_back();
      decisions.back().request_id = e.request_id;
    }
    auto& decision = decisions[it->second];
    decision.ranked.push_back(e.decomposition);
    if (e.exposed) ++decision.exposed_k;
  }
  for (auto& d : decisions) {
    if (d.exposed_k == 0) {
      throw Error(ErrorCode::kMissingDecomposition,
                  "request '" + d.request_id + "' has no exposed events");
    }
    std::sort(d.ranked.begin(), d.ranked.end(), ranks_before);
  }
  return decisions;
}

std::set<std::string> plans_in(std::span<const BlendDecision> decisions) {
  std::set<std::string> ids;
  for (const auto& decision : decisions) {
    for (const auto& d : decision.ranked) {
      for (const auto& [plan_id, boost] : d.plan_boosts) ids.insert(plan_id);
    }
  }
  return ids;
}

std::optional<double> roi(std::int64_t vv_lift, double cost) {
  if (!(cost > 0.0)) return std::nullopt;
  return static_cast<double>(vv_lift) / cost;
}

std::vector<PlanReport> plan_reports(std::span<const ExposureEvent> events,
                                     std::span<const BlendDecision> decisions,
                                     const PlanRegistry& registry,
                                     TimeRange window) {
  std::vector<ExposureEvent> in_window;
  std::unordered_set<std::string> requests;
  for (const auto& e : events) {
    if (!window.contains(e.timestamp)) continue;
    in_window.push_back(e);
    requests.insert(e.request_id);
  }
  std::vector<BlendDecision> window_decisions;
  for (const auto& d : decisions) {
    if (requests.contains(d.request_id)) window_decisions.push_back(d);
  }

  std::set<std::string> known;
  for (const auto& p : registry.plans()) known.insert(p.plan_id);

  std::vector<PlanReport> reports;
  for (const auto& plan : registry.plans()) {
    if (!plan.enabled) continue;
    PlanReport r;
    r.plan_id = plan.plan_id;
    r.window = window;
    for (const auto& e : in_window) {
      if (!e.exposed) continue;
      auto it = e.decomposition.plan_boosts.find(plan.plan_id);
      if (it != e.decomposition.plan_boosts.end()) r.boost_spend += it->second;
    }
    try {
      r.exposure_share = *measure_exposure_share(in_window, plan, window).share;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyWindow) throw;
      r.exposure_share = 0.0;
    }
    const auto replay =
        counterfactual_replay(window_decisions, plan.plan_id, known);
    r.vv_lift = replay.vv_lift;
    r.cost = replay.cost;
    r.roi_vv = roi(r.vv_lift, r.cost);
    reports.push_back(std::move(r));
  }
  return reports;
}

std::vector<PlanReport> rank_by_roi(std::vector<PlanReport> reports) {
  auto key = [](const PlanReport& r) {
    return r.roi_vv.value_or(std::numeric_limits<double>::infinity());
  };
  std::stable_sort(reports.begin(), reports.end(),
                   [&](const PlanReport& a, const PlanReport& b) {
                     if (key(a) != key(b)) return key(a) < key(b);
                     return a.plan_id < b.plan_id;
                   });
  return reports;
}

CalibrationCurve calibration_curve(std::span<const ExposureEvent> events,
                                   const std::string& metric,
                                   std::size_t n_bins) {
  if (n_bins == 0) {
    throw Error(ErrorCode::kInvalidConfig, "calibration needs at least 1 bin");
  }
  std::vector<std::pair<double, double>> points;  // (aligned, outcome)
  for (const auto& e : events) {
    if (!e.exposed || !e.outcomes) continue;
    const auto value = outcome_value(*e.outcomes, metric);
    if (!value) {
      throw Error(ErrorCode::kInvalidConfig, "unknown metric '" + metric + "'");
    }
    points.emplace_back(e.decomposition.aligned, *value);
  }
  if (points.size() < n_bins) {
    throw Error(ErrorCode::kInsufficientData,
                std::to_string(points.size()) + " exposed events for " +
                    std::to_string(n_bins) + " bins");
  }
  std::stable_sort(points.begin(), points.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  CalibrationCurve curve;
  curve.metric = metric;
  double score_sum = 0.0;
  double outcome_sum = 0.0;
  for (const auto& [s, o] : points) {
    score_sum += s;
    outcome_sum += o;
  }
  const double n_total = static_cast<double>(points.size());
  const double mean_outcome = outcome_sum / n_total;
  const double mean_score = score_sum / n_total;
  curve.scale = mean_score > 0.0 ? mean_outcome / mean_score : 0.0;

  for (std::size_t b = 0; b < n_bins; ++b) {
    const std::size_t lo = b * points.size() / n_bins;
    const std::size_t hi = (b + 1) * points.size() / n_bins;
    CalibrationBin bin;
    bin.n = static_cast<std::int64_t>(hi - lo);
    bin.score_lo = points[lo].first;
    bin.score_hi = points[hi - 1].first;
    double s = 0.0;
    double o = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      s += points[i].first;
      o += points[i].second;
    }
    bin.mean_score = s / static_cast<double>(bin.n);
    bin.mean_outcome = o / static_cast<double>(bin.n);
    curve.calibration_errors.push_back(
        std::abs(bin.mean_outcome - curve.scale * bin.mean_score));
    curve.bins.push_back(bin);
  }

  if (!(mean_outcome > 0.0)) {
    curve.stability = std::numeric_limits<double>::infinity();
  } else {
    const double m = mean_of(curve.calibration_errors);
    double var = 0.0;
    for (double e : curve.calibration_errors) var += (e - m) * (e - m);
    var /= static_cast<double>(curve.calibration_errors.size());
    curve.stability = std::sqrt(var) / mean_outcome;
  }
  return curve;
}

std::vector<CalibrationCurve> rank_anchor_candidates(
    std::vector<CalibrationCurve> curves) {
  std::stable_sort(curves.begin(), curves.end(),
                   [](const CalibrationCurve& a, const CalibrationCurve& b) {
                     if (a.stability != b.stability) {
                       return a.stability < b.stability;
                     }
                     return a.metric < b.metric;
                   });
  return curves;
}

}  // namespace uniboost
