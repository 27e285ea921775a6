#pragma once

// Value alignment: raw blending scores are rescaled by mu_anchor / mu_score
// so they read as expected anchor-metric values.

#include <cstddef>
#include <span>

#include "uniboost/core_model.hpp"

namespace uniboost {

inline constexpr double kScoreFloor = 1e-9;
inline constexpr double kAnchorFloor = 1e-6;
inline constexpr double kDefaultHalfLife = 100000.0;

struct AlignmentOptions {
  std::size_t min_bootstrap = 1000;
  double score_floor = kScoreFloor;
  double anchor_floor = kAnchorFloor;
};

struct AnchorSample {
  double raw_score = 0.0;
  double anchor_outcome = 0.0;
};

/// Throws DegenerateParams unless mu_score >= score_floor and
/// 0 < mu_anchor <= 1.
void validate_alignment(const AlignmentParams& params,
                        double score_floor = kScoreFloor);

/// raw / mu_score * mu_anchor. Strictly increasing in raw for valid params.
double align_score(double raw, const AlignmentParams& params,
                   double score_floor = kScoreFloor);

/// Arithmetic means over the samples. Throws InsufficientSamples when fewer
/// than options.min_bootstrap samples are given, AllZeroScores when no raw
/// score is positive.
AlignmentParams bootstrap_alignment(std::span<const AnchorSample> samples,
                                    double half_life,
                                    const AlignmentOptions& options = {},
                                    Timestamp now = 0);

/// Per-event decay 1 - 2^(-1/half_life).
double ema_decay(double half_life);

/// Folds the batch into the means one event at a time, in order. An empty
/// batch returns the params unchanged.
AlignmentParams update_alignment(const AlignmentParams& params,
                                 std::span<const AnchorSample> batch,
                                 const AlignmentOptions& options = {},
                                 Timestamp now = 0);

}  // namespace uniboost
