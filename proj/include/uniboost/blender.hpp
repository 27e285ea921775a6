#pragma once

// Online serving path: align -> per-plan boost -> linear aggregation -> sort
// -> truncate. legacy_blend is the coupled multiplicative baseline used as
// the experimental control.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "uniboost/core_model.hpp"

namespace uniboost {

/// Pseudo plan id under which legacy_blend logs its single coupled boost.
inline constexpr std::string_view kLegacyPlanId = "__legacy__";

struct BlendRequest {
  std::string request_id;
  std::vector<Candidate> candidates;
  std::size_t k = 1;
};

/// Throws InvalidRequest (no candidates, k == 0), DuplicateId, or the
/// candidate validation errors.
void validate_request(const BlendRequest& request);

/// w * aligned + b for members, 0 otherwise. For pid_delivered plans the
/// bias carries the controller output and the weight is 0.
double compute_boost(const Plan& plan, const Candidate& candidate,
                     double aligned);

BlendDecision blend(const BlendRequest& request, const PlanRegistry& registry,
                    const AlignmentParams& params);

/// Coupled baseline: raw * prod(1 + w_p) + sum(b_p) over matching enabled
/// plans, aligned after weighting. The difference to the aligned raw score
/// is recorded under kLegacyPlanId.
BlendDecision legacy_blend(const BlendRequest& request,
                           const PlanRegistry& registry,
                           const AlignmentParams& params);

/// Throws UnknownCandidate.
const ScoreDecomposition& decompose(const BlendDecision& decision,
                                    std::string_view candidate_id);

/// Sorts with ranks_before and sets exposed_k = min(k, size).
void rank_and_truncate(std::vector<ScoreDecomposition>& items, std::size_t k,
                       std::size_t& exposed_k);

}  // namespace uniboost
