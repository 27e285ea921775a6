#pragma once

// Deterministic synthetic traffic. A run is a pure function of its SimConfig:
// every request and every outcome draw comes from its own seeded stream, so
// two runs that differ only in plan configuration see the same candidates.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "uniboost/alignment.hpp"
#include "uniboost/blender.hpp"
#include "uniboost/core_model.hpp"
#include "uniboost/delivery_control.hpp"
#include "uniboost/tracking.hpp"

namespace uniboost {

using Rng = std::mt19937_64;

/// Independent stream for (seed, stream, index).
Rng stream_rng(std::uint64_t seed, std::uint64_t stream, std::int64_t index);

struct LogNormalParams {
  double mu = 0.0;  // log-space location
  double sigma = 1.0;
};

/// Attaches `tag` with `probability` to candidates of `content_type` (any
/// type when absent) and multiplies their raw score by `raw_scale`.
struct TagRule {
  std::string tag;
  double probability = 0.0;
  std::optional<ContentType> content_type;
  double raw_scale = 1.0;
};

struct Logistic {
  double intercept = 0.0;
  double slope = 0.0;
};

/// Ground truth for posterior outcomes. An item's true value is
/// raw * value_scale; the simulator never looks at the serving-time aligned
/// score, so near-line re-estimation cannot feed back into the truth.
struct OutcomeModel {
  double value_scale = 1.0;
  double calibration_exponent = 1.0;  // 1 = identity calibration
  double ad_gap = 0.1;                // subtracted from ad completion
  double completed_duration_mean = 20.0;
  double skipped_duration_mean = 2.0;
  Logistic click{-2.5, 3.0};
  Logistic interaction{-4.5, 0.5};
  Logistic slide{-1.0, -2.0};
  double buy_rate = 1e-3;
};

enum class Pipeline { kUniboost, kLegacy };

std::string_view to_string(Pipeline pipeline);
Pipeline parse_pipeline(std::string_view text);

struct SimAlignment {
  double half_life = kDefaultHalfLife;
  /// Skip the warm-up bootstrap and start from these params.
  std::optional<AlignmentParams> initial;
  /// Warm-up requests used for the bootstrap; 0 picks enough for
  /// min_bootstrap exposures.
  std::int64_t bootstrap_requests = 0;
  std::size_t min_bootstrap = 1000;
  bool near_line_updates = true;
};

struct SimRetention {
  bool events = true;         // keep event_log in the SimRun
  bool log_unexposed = true;  // also log candidates that were not exposed
  bool decisions = true;      // keep decisions in the SimRun
};

struct SimConfig {
  std::uint64_t seed = 1;
  std::int64_t n_requests = 1000;
  std::size_t candidates_per_request = 20;
  std::size_t k = 5;
  std::map<ContentType, double> content_mix;
  std::map<ContentType, LogNormalParams> score_model;
  std::vector<TagRule> tag_rules;
  OutcomeModel outcome_model;
  PlanRegistry plans;
  Pipeline pipeline = Pipeline::kUniboost;
  std::int64_t control_tick = 500;
  PidConfig controller;
  std::map<std::string, PidConfig> plan_controllers;
  SimAlignment alignment;
  SimRetention retain;
};

/// Throws InvalidConfig.
void validate_config(const SimConfig& config);

/// Organic 0.8 / ad 0.15 / cold_start 0.05, 20 candidates, k = 5, no plans.
SimConfig default_sim_config(std::uint64_t seed = 1);

/// Candidates drawn per content_mix with log-normal raw scores.
BlendRequest generate_request(const SimConfig& config, Rng& rng, Timestamp t);
/// Same, on the request stream derived from (seed, t).
BlendRequest generate_request(const SimConfig& config, Timestamp t);

/// Probability of effective completion for an item of this raw score.
double completion_probability(double raw, const ContentType& type,
                              const OutcomeModel& model);

/// Draws outcomes for exposed items; `types[i]` belongs to `items[i]`.
/// Every item consumes the same number of draws.
std::vector<Outcomes> sample_outcomes(std::span<const ScoreDecomposition> items,
                                      std::span<const ContentType> types,
                                      const OutcomeModel& model, Rng& rng);

/// click + 2 * interaction + 0.5 * effective_completion.
double valued_score(const Outcomes& outcomes);

inline constexpr double kValuedPlaySeconds = 3.0;

struct SimSummary {
  std::int64_t requests = 0;
  std::int64_t vv = 0;
  std::int64_t valued_vv = 0;  // play_duration > 3 s
  double duration = 0.0;
  double valued_score = 0.0;
  std::map<std::string, double> type_shares;  // by content type name
  std::map<std::string, double> plan_shares;  // member share of exposures
  double boost_ratio = 0.0;  // mean over exposures of sum|boost| / |final|
  AlignmentParams final_alignment;
};

/// Per-window status, emitted after every control tick.
struct TickReport {
  std::int64_t tick = 0;
  TimeRange window;
  std::map<std::string, double> plan_shares;
  std::map<std::string, double> plan_biases;
  std::map<std::string, double> type_shares;
  double drift_aligned = 0.0;  // PSI against the first window
  double drift_final = 0.0;
  double boost_ratio = 0.0;
  std::uint64_t registry_version = 0;
};

struct SimRun {
  SimConfig config;
  std::vector<ExposureEvent> event_log;
  std::vector<BlendDecision> decisions;
  std::vector<ControllerTraceEntry> controller_trace;
  std::vector<TickReport> ticks;
  SimSummary summary;
  std::vector<double> request_valued_score;
  PlanRegistry final_registry;
};

struct SimHooks {
  std::function<void(const ExposureEvent&)> on_event;
  std::function<void(const BlendDecision&)> on_decision;
  std::function<void(const TickReport&)> on_tick;
};

/// Step-wise driver behind run(). The service's live mode drives one of
/// these and swaps in operator-edited registries between steps.
class Simulation {
 public:
  explicit Simulation(SimConfig config, SimHooks hooks = {});

  bool done() const { return next_ >= config_.n_requests; }
  Timestamp now() const { return next_; }
  void step();

  const PlanRegistry& registry() const { return registry_; }
  void replace_registry(PlanRegistry registry);
  const AlignmentParams& alignment() const { return params_; }
  const DeliveryController& controller() const { return controller_; }
  const SimConfig& config() const { return config_; }
  /// Outputs of the most recent control tick.
  const std::map<std::string, double>& last_outputs() const {
    return last_outputs_;
  }
  std::int64_t ticks() const { return controller_.ticks(); }
  /// Resumes PID state saved from an earlier run.
  void restore_controller(std::map<std::string, PidState> states,
                          std::int64_t ticks) {
    controller_.restore(std::move(states));
    controller_.set_ticks(ticks);
  }

  SimRun finish() &&;

 private:
  void bootstrap();
  void control_tick();

  SimConfig config_;
  SimHooks hooks_;
  PlanRegistry registry_;
  AlignmentParams params_;
  DeliveryController controller_;
  std::optional<Tracker> tracker_;  // built once the bootstrap fixes the layout
  Timestamp next_ = 0;

  std::vector<ExposureEvent> window_exposures_;
  std::vector<AnchorSample> window_samples_;
  double window_ratio_sum_ = 0.0;
  std::map<std::string, std::int64_t> window_type_counts_;
  std::optional<StageHistogram> reference_aligned_;
  std::optional<StageHistogram> reference_final_;
  std::map<std::string, double> last_outputs_;

  SimRun run_;
  double ratio_sum_ = 0.0;
  std::map<std::string, std::int64_t> type_counts_;
  std::map<std::string, std::int64_t> plan_counts_;
};

SimRun run(const SimConfig& config, const SimHooks& hooks = {});

struct AbReport {
  SimSummary a;
  SimSummary b;
  /// (b - a) / |a|; absent when a is 0 and b is not.
  std::map<std::string, std::optional<double>> relative_deltas;
  /// 1 - b.boost_ratio / a.boost_ratio, absent when a has no boosts.
  std::optional<double> boost_ratio_reduction;
  /// Request-paired difference of valued_score (b - a).
  double paired_valued_score_mean = 0.0;
  double paired_valued_score_stderr = 0.0;
};

/// Throws ConfigMismatch unless seed, n_requests and k agree.
AbReport ab_compare(const SimConfig& config_a, const SimConfig& config_b);
AbReport ab_compare(const SimRun& run_a, const SimRun& run_b);

struct LegacyTuning {
  SimConfig config;
  double weight = 0.0;
  double share = 0.0;
  int evaluations = 0;
};

/// Bisects the weight of `plan_id` in a legacy-pipeline config until that
/// plan's exposure share is within `tolerance` of `target_share`.
LegacyTuning tune_legacy_weight(SimConfig legacy, const std::string& plan_id,
                                double target_share, double tolerance = 0.005);

}  // namespace uniboost
