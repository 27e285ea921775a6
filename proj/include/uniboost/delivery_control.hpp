#pragma once

// Guaranteed delivery: a positional discrete PID turns the gap between a
// plan's measured exposure share and its target into the plan's bias.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uniboost/core_model.hpp"
#include "uniboost/tracking.hpp"

namespace uniboost {

struct PidConfig {
  double kp = 0.5;
  double ki = 0.1;
  double kd = 0.0;
  double output_min = 0.0;
  double output_max = 1.0;
  double windup_limit = 10.0;  // |integral| bound
  std::int64_t tick = 500;     // requests per control tick

  friend bool operator==(const PidConfig&, const PidConfig&) = default;
};

struct PidState {
  double kp = 0.5;
  double ki = 0.1;
  double kd = 0.0;
  double integral = 0.0;
  std::optional<double> last_error;
  double output_min = 0.0;
  double output_max = 1.0;
  double last_output = 0.0;
  double windup_limit = 10.0;

  static PidState from_config(const PidConfig& config);

  friend bool operator==(const PidState&, const PidState&) = default;
};

struct PidStep {
  PidState state;
  double bias = 0.0;
};

/// e = target - measured; integral advances by e * dt (clamped to the windup
/// limit) unless the output is saturated and e pushes further into the
/// saturation. bias = clamp(kp e + ki I + kd de/dt).
PidStep pid_step(const PidState& state, double measured, double target,
                 double dt);

struct ExposureMeasurement {
  std::string plan_id;
  Timestamp window_start = 0;
  Timestamp window_end = 0;
  std::int64_t exposed_plan = 0;
  std::int64_t exposed_total = 0;
  std::optional<double> share;
};

/// Exposed events inside the window; the numerator counts those whose
/// logged content type and tags match the plan selector. Throws EmptyWindow
/// when nothing was exposed.
ExposureMeasurement measure_exposure_share(std::span<const ExposureEvent> events,
                                           const Plan& plan, TimeRange window);

/// Replaces the bias of each named pid_delivered plan. Throws UnknownPlan or
/// WrongMode. The returned registry always has version + 1.
PlanRegistry apply_controller_outputs(const PlanRegistry& registry,
                                      const std::map<std::string, double>& outputs);

struct ControllerTraceEntry {
  std::int64_t tick = 0;
  std::string plan_id;
  double measured = 0.0;
  double target = 0.0;
  double bias = 0.0;
};

/// Owns one PID per pid_delivered plan. Not thread-safe; one control loop
/// drives it.
class DeliveryController {
 public:
  DeliveryController() = default;
  DeliveryController(PidConfig default_config,
                     std::map<std::string, PidConfig> per_plan = {});

  struct TickResult {
    std::map<std::string, double> outputs;
    std::vector<ControllerTraceEntry> trace;
  };

  /// One control tick over the window's events. Plans with an empty window
  /// are skipped and keep their state.
  TickResult tick(std::span<const ExposureEvent> window_events,
                  const PlanRegistry& registry, TimeRange window);

  const std::map<std::string, PidState>& states() const { return states_; }
  void restore(std::map<std::string, PidState> states) {
    states_ = std::move(states);
  }
  std::int64_t ticks() const { return ticks_; }
  void set_ticks(std::int64_t ticks) { ticks_ = ticks; }
  const PidConfig& config_for(const std::string& plan_id) const;

 private:
  PidConfig default_config_;
  std::map<std::string, PidConfig> per_plan_;
  std::map<std::string, PidState> states_;
  std::int64_t ticks_ = 0;
};

}  // namespace uniboost
