#include "uniboost/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "uniboost/error.hpp"

namespace uniboost {
namespace {

double apply_anchor_bounds(double mu_anchor, double anchor_floor) {
  return std::clamp(mu_anchor, anchor_floor, 1.0);
}

}  // namespace

void validate_alignment(const AlignmentParams& params, double score_floor) {
  if (!(params.mu_score >= score_floor) || !std::isfinite(params.mu_score)) {
    throw Error(ErrorCode::kDegenerateParams,
                "mu_score " + std::to_string(params.mu_score) +
                    " below floor");
  }
  if (!(params.mu_anchor > 0.0 && params.mu_anchor <= 1.0)) {
    throw Error(ErrorCode::kDegenerateParams,
                "mu_anchor " + std::to_string(params.mu_anchor) +
                    " outside (0, 1]");
  }
  if (!(params.half_life > 0.0)) {
    throw Error(ErrorCode::kDegenerateParams, "half_life must be positive");
  }
}

double align_score(double raw, const AlignmentParams& params,
                   double score_floor) {
  if (!(params.mu_score >= score_floor)) {
    throw Error(ErrorCode::kDegenerateParams,
                "mu_score " + std::to_string(params.mu_score) +
                    " below floor");
  }
  if (!(params.mu_anchor > 0.0 && params.mu_anchor <= 1.0)) {
    throw Error(ErrorCode::kDegenerateParams,
                "mu_anchor " + std::to_string(params.mu_anchor) +
                    " outside (0, 1]");
  }
  // Dividing first makes raw == mu_score map exactly onto mu_anchor.
  return raw / params.mu_score * params.mu_anchor;
}

AlignmentParams bootstrap_alignment(std::span<const AnchorSample> samples,
                                    double half_life,
                                    const AlignmentOptions& options,
                                    Timestamp now) {
  if (samples.size() < options.min_bootstrap || samples.empty()) {
    throw Error(ErrorCode::kInsufficientSamples,
                std::to_string(samples.size()) + " samples, need " +
                    std::to_string(options.min_bootstrap));
  }
  double score_sum = 0.0;
  double anchor_sum = 0.0;
  bool any_positive = false;
  for (const auto& s : samples) {
    if (!(s.raw_score >= 0.0)) {
      throw Error(ErrorCode::kNegativeRawScore, "anchor sample raw_score < 0");
    }
    any_positive = any_positive || s.raw_score > 0.0;
    score_sum += s.raw_score;
    anchor_sum += s.anchor_outcome;
  }
  if (!any_positive) {
    throw Error(ErrorCode::kAllZeroScores, "every bootstrap raw_score is 0");
  }
  const double n = static_cast<double>(samples.size());
  AlignmentParams params;
  params.mu_score = std::max(score_sum / n, options.score_floor);
  params.mu_anchor = apply_anchor_bounds(anchor_sum / n, options.anchor_floor);
  params.sample_count = static_cast<std::int64_t>(samples.size());
  params.updated_at = now;
  params.half_life = half_life;
  validate_alignment(params, options.score_floor);
  return params;
}

double ema_decay(double half_life) {
  return 1.0 - std::exp2(-1.0 / half_life);
}

AlignmentParams update_alignment(const AlignmentParams& params,
                                 std::span<const AnchorSample> batch,
                                 const AlignmentOptions& options,
                                 Timestamp now) {
  if (batch.empty()) return params;
  const double alpha = ema_decay(params.half_life);
  AlignmentParams next = params;
  for (const auto& s : batch) {
    // Floors apply per event so that splitting a batch never changes the
    // result.
    next.mu_score = std::max(
        next.mu_score + alpha * (s.raw_score - next.mu_score),
        options.score_floor);
    next.mu_anchor = apply_anchor_bounds(
        next.mu_anchor + alpha * (s.anchor_outcome - next.mu_anchor),
        options.anchor_floor);
  }
  next.sample_count += static_cast<std::int64_t>(batch.size());
  next.updated_at = std::max(next.updated_at, now);
  return next;
}

}  // namespace uniboost
