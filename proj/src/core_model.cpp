#include "uniboost/core_model.hpp"

#include <algorithm>
#include <cmath>

#include "uniboost/error.hpp"

namespace uniboost {

std::string to_string(const ContentType& type) {
  switch (type.kind) {
    case ContentKind::kOrganic: return "organic";
    case ContentKind::kAd: return "ad";
    case ContentKind::kColdStart: return "cold_start";
    case ContentKind::kOther: return "other:" + type.tag;
  }
  return "organic";
}

ContentType parse_content_type(std::string_view text) {
  if (text == "organic") return ContentType::organic();
  if (text == "ad") return ContentType::ad();
  if (text == "cold_start") return ContentType::cold_start();
  constexpr std::string_view kOtherPrefix = "other:";
  if (text.starts_with(kOtherPrefix) && text.size() > kOtherPrefix.size()) {
    return ContentType::other(std::string(text.substr(kOtherPrefix.size())));
  }
  throw Error(ErrorCode::kInvalidConfig,
              "unknown content type '" + std::string(text) + "'");
}

const Candidate& validate_candidate(const Candidate& candidate) {
  if (candidate.id.empty()) {
    throw Error(ErrorCode::kEmptyId, "candidate id is empty");
  }
  // NaN fails this comparison too.
  if (!(candidate.raw_score >= 0.0) || std::isinf(candidate.raw_score)) {
    throw Error(ErrorCode::kNegativeRawScore,
                "candidate '" + candidate.id + "' has raw_score " +
                    std::to_string(candidate.raw_score));
  }
  return candidate;
}

bool selector_matches(const Selector& selector, const ContentType& type,
                      const std::set<std::string>& tags) {
  if (selector.content_type && *selector.content_type != type) return false;
  return std::all_of(selector.tags.begin(), selector.tags.end(),
                     [&](const std::string& t) { return tags.contains(t); });
}

std::string_view to_string(PlanMode mode) {
  switch (mode) {
    case PlanMode::kStatic: return "static";
    case PlanMode::kPidDelivered: return "pid_delivered";
    case PlanMode::kHybrid: return "hybrid";
  }
  return "static";
}

PlanMode parse_plan_mode(std::string_view text) {
  if (text == "static") return PlanMode::kStatic;
  if (text == "pid_delivered") return PlanMode::kPidDelivered;
  if (text == "hybrid") return PlanMode::kHybrid;
  throw Error(ErrorCode::kInvalidPlan,
              "unknown plan mode '" + std::string(text) + "'");
}

void validate_plan(const Plan& plan) {
  if (plan.plan_id.empty()) {
    throw Error(ErrorCode::kInvalidPlan, "plan_id is empty");
  }
  if (!std::isfinite(plan.weight) || !std::isfinite(plan.bias)) {
    throw Error(ErrorCode::kInvalidPlan,
                "plan '" + plan.plan_id + "' has non-finite weight or bias");
  }
  if (plan.target_share &&
      !(*plan.target_share >= 0.0 && *plan.target_share <= 1.0)) {
    throw Error(ErrorCode::kInvalidPlan,
                "plan '" + plan.plan_id + "' target_share outside [0, 1]");
  }
  if (plan.mode == PlanMode::kPidDelivered) {
    if (!plan.target_share) {
      throw Error(ErrorCode::kInvalidPlan,
                  "pid_delivered plan '" + plan.plan_id + "' needs target_share");
    }
    if (plan.weight != 0.0) {
      throw Error(ErrorCode::kInvalidPlan,
                  "pid_delivered plan '" + plan.plan_id + "' must have weight 0");
    }
  }
}

bool plan_applies(const Plan& plan, const Candidate& candidate) {
  return selector_matches(plan.selector, candidate.content_type,
                          candidate.tags);
}

PlanRegistry::PlanRegistry(std::vector<Plan> plans, std::uint64_t version)
    : plans_(std::move(plans)), version_(version) {
  for (const auto& p : plans_) validate_plan(p);
  std::sort(plans_.begin(), plans_.end(),
            [](const Plan& a, const Plan& b) { return a.plan_id < b.plan_id; });
  auto dup = std::adjacent_find(
      plans_.begin(), plans_.end(),
      [](const Plan& a, const Plan& b) { return a.plan_id == b.plan_id; });
  if (dup != plans_.end()) {
    throw Error(ErrorCode::kDuplicatePlan, "duplicate plan_id '" +
                                               dup->plan_id + "'");
  }
}

const Plan* PlanRegistry::find(std::string_view plan_id) const {
  auto it = std::lower_bound(
      plans_.begin(), plans_.end(), plan_id,
      [](const Plan& p, std::string_view id) { return p.plan_id < id; });
  if (it == plans_.end() || it->plan_id != plan_id) return nullptr;
  return &*it;
}

const Plan& PlanRegistry::at(std::string_view plan_id) const {
  const Plan* p = find(plan_id);
  if (p == nullptr) {
    throw Error(ErrorCode::kUnknownPlan,
                "no plan '" + std::string(plan_id) + "'");
  }
  return *p;
}

PlanRegistry PlanRegistry::with_plan(Plan plan) const {
  validate_plan(plan);
  std::vector<Plan> next = plans_;
  auto it = std::find_if(next.begin(), next.end(), [&](const Plan& p) {
    return p.plan_id == plan.plan_id;
  });
  if (it != next.end()) {
    *it = std::move(plan);
  } else {
    next.push_back(std::move(plan));
  }
  return PlanRegistry(std::move(next), version_ + 1);
}

PlanRegistry PlanRegistry::without_plan(std::string_view plan_id) const {
  at(plan_id);
  std::vector<Plan> next;
  next.reserve(plans_.size());
  for (const auto& p : plans_) {
    if (p.plan_id != plan_id) next.push_back(p);
  }
  return PlanRegistry(std::move(next), version_ + 1);
}

PlanRegistry PlanRegistry::bumped() const {
  PlanRegistry next = *this;
  ++next.version_;
  return next;
}

double compose_final(double aligned,
                     const std::map<std::string, double>& plan_boosts) {
  double total = aligned;
  for (const auto& [plan_id, boost] : plan_boosts) total += boost;
  return total;
}

bool reconstructs(const ScoreDecomposition& d) {
  return compose_final(d.aligned, d.plan_boosts) == d.final_score;
}

bool ranks_before(const ScoreDecomposition& a, const ScoreDecomposition& b) {
  if (a.final_score != b.final_score) return a.final_score > b.final_score;
  return a.candidate_id < b.candidate_id;
}

}  // namespace uniboost
