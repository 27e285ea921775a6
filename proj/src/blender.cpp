#include "uniboost/blender.hpp"

#include <algorithm>
#include <unordered_set>

#include "uniboost/alignment.hpp"
#include "uniboost/error.hpp"

namespace uniboost {

void validate_request(const BlendRequest& request) {
  if (request.candidates.empty()) {
    throw Error(ErrorCode::kInvalidRequest,
                "request '" + request.request_id + "' has no candidates");
  }
  if (request.k == 0) {
    throw Error(ErrorCode::kInvalidRequest, "k must be at least 1");
  }
  std::unordered_set<std::string_view> seen;
  seen.reserve(request.candidates.size());
  for (const auto& c : request.candidates) {
    validate_candidate(c);
    if (!seen.insert(c.id).second) {
      throw Error(ErrorCode::kDuplicateId, "candidate id '" + c.id +
                                               "' repeated in request");
    }
  }
}

double compute_boost(const Plan& plan, const Candidate& candidate,
                     double aligned) {
  if (!plan_applies(plan, candidate)) return 0.0;
  return plan.weight * aligned + plan.bias;
}

void rank_and_truncate(std::vector<ScoreDecomposition>& items, std::size_t k,
                       std::size_t& exposed_k) {
  std::sort(items.begin(), items.end(), ranks_before);
  exposed_k = std::min(k, items.size());
}

BlendDecision blend(const BlendRequest& request, const PlanRegistry& registry,
                    const AlignmentParams& params) {
  validate_request(request);
  BlendDecision decision;
  decision.request_id = request.request_id;
  decision.registry_version = registry.version();
  decision.alignment_snapshot = params;
  decision.ranked.reserve(request.candidates.size());

  for (const auto& candidate : request.candidates) {
    ScoreDecomposition d;
    d.candidate_id = candidate.id;
    d.raw = candidate.raw_score;
    d.aligned = align_score(candidate.raw_score, params);
    // registry.plans() is already in plan_id order.
    for (const auto& plan : registry.plans()) {
      if (!plan.enabled || !plan_applies(plan, candidate)) continue;
      d.plan_boosts.emplace(plan.plan_id,
                            compute_boost(plan, candidate, d.aligned));
    }
    d.final_score = compose_final(d.aligned, d.plan_boosts);
    decision.ranked.push_back(std::move(d));
  }
  rank_and_truncate(decision.ranked, request.k, decision.exposed_k);
  return decision;
}

BlendDecision legacy_blend(const BlendRequest& request,
                           const PlanRegistry& registry,
                           const AlignmentParams& params) {
  validate_request(request);
  BlendDecision decision;
  decision.request_id = request.request_id;
  decision.registry_version = registry.version();
  decision.alignment_snapshot = params;
  decision.ranked.reserve(request.candidates.size());

  for (const auto& candidate : request.candidates) {
    double factor = 1.0;
    double raw_bias = 0.0;
    bool matched = false;
    for (const auto& plan : registry.plans()) {
      if (!plan.enabled || !plan_applies(plan, candidate)) continue;
      matched = true;
      factor *= 1.0 + plan.weight;
      raw_bias += plan.bias;
    }
    ScoreDecomposition d;
    d.candidate_id = candidate.id;
    d.raw = candidate.raw_score;
    d.aligned = align_score(candidate.raw_score, params);
    if (matched) {
      const double coupled =
          align_score(candidate.raw_score * factor + raw_bias, params);
      d.plan_boosts.emplace(std::string(kLegacyPlanId), coupled - d.aligned);
    }
    // Final is rebuilt from the logged parts so the decomposition stays
    // additive; it may differ from `coupled` in the last bit.
    d.final_score = compose_final(d.aligned, d.plan_boosts);
    decision.ranked.push_back(std::move(d));
  }
  rank_and_truncate(decision.ranked, request.k, decision.exposed_k);
  return decision;
}

const ScoreDecomposition& decompose(const BlendDecision& decision,
                                    std::string_view candidate_id) {
  auto it = std::find_if(
      decision.ranked.begin(), decision.ranked.end(),
      [&](const ScoreDecomposition& d) { return d.candidate_id == candidate_id; });
  if (it == decision.ranked.end()) {
    throw Error(ErrorCode::kUnknownCandidate,
                "candidate '" + std::string(candidate_id) +
                    "' not in decision '" + decision.request_id + "'");
  }
  return *it;
}

}  // namespace uniboost
