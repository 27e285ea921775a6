#include "uniboost/delivery_control.hpp"

#include <algorithm>

#include "uniboost/error.hpp"

namespace uniboost {

PidState PidState::from_config(const PidConfig& c) {
  PidState s;
  s.kp = c.kp;
  s.ki = c.ki;
  s.kd = c.kd;
  s.output_min = c.output_min;
  s.output_max = c.output_max;
  s.windup_limit = c.windup_limit;
  s.last_output = std::clamp(0.0, c.output_min, c.output_max);
  return s;
}

PidStep pid_step(const PidState& state, double measured, double target,
                 double dt) {
  if (!(dt > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "pid_step needs dt > 0");
  }
  const double error = target - measured;
  const double derivative =
      state.last_error ? (error - *state.last_error) / dt : 0.0;
  const double advanced = std::clamp(state.integral + error * dt,
                                     -state.windup_limit, state.windup_limit);
  const double unclamped =
      state.kp * error + state.ki * advanced + state.kd * derivative;

  double integral = advanced;
  // Conditional integration: hold the integral while saturated in the
  // direction the error pushes.
  if ((unclamped > state.output_max && error > 0.0) ||
      (unclamped < state.output_min && error < 0.0)) {
    integral = state.integral;
  }
  const double output =
      state.kp * error + state.ki * integral + state.kd * derivative;
  const double bias = std::clamp(output, state.output_min, state.output_max);

  PidStep step;
  step.state = state;
  step.state.integral = integral;
  step.state.last_error = error;
  step.state.last_output = bias;
  step.bias = bias;
  return step;
}

ExposureMeasurement measure_exposure_share(std::span<const ExposureEvent> events,
                                           const Plan& plan, TimeRange window) {
  ExposureMeasurement m;
  m.plan_id = plan.plan_id;
  m.window_start = window.begin;
  m.window_end = window.end;
  for (const auto& e : events) {
    if (!e.exposed || !window.contains(e.timestamp)) continue;
    ++m.exposed_total;
    if (selector_matches(plan.selector, e.content_type, e.tags)) {
      ++m.exposed_plan;
    }
  }
  if (m.exposed_total == 0) {
    throw Error(ErrorCode::kEmptyWindow,
                "no exposures in window for plan '" + plan.plan_id + "'");
  }
  m.share = static_cast<double>(m.exposed_plan) /
            static_cast<double>(m.exposed_total);
  return m;
}

PlanRegistry apply_controller_outputs(
    const PlanRegistry& registry, const std::map<std::string, double>& outputs) {
  std::vector<Plan> plans = registry.plans();
  for (const auto& [plan_id, bias] : outputs) {
    auto it = std::find_if(plans.begin(), plans.end(),
                           [&](const Plan& p) { return p.plan_id == plan_id; });
    if (it == plans.end()) {
      throw Error(ErrorCode::kUnknownPlan, "no plan '" + plan_id + "'");
    }
    if (it->mode != PlanMode::kPidDelivered) {
      throw Error(ErrorCode::kWrongMode,
                  "plan '" + plan_id + "' is not pid_delivered");
    }
    it->bias = bias;
  }
  return PlanRegistry(std::move(plans), registry.version() + 1);
}

DeliveryController::DeliveryController(PidConfig default_config,
                                       std::map<std::string, PidConfig> per_plan)
    : default_config_(default_config), per_plan_(std::move(per_plan)) {}

const PidConfig& DeliveryController::config_for(const std::string& plan_id) const {
  auto it = per_plan_.find(plan_id);
  return it == per_plan_.end() ? default_config_ : it->second;
}

DeliveryController::TickResult DeliveryController::tick(
    std::span<const ExposureEvent> window_events, const PlanRegistry& registry,
    TimeRange window) {
  TickResult result;
  for (const auto& plan : registry.plans()) {
    if (plan.mode != PlanMode::kPidDelivered || !plan.enabled) continue;
    ExposureMeasurement m;
    try {
      m = measure_exposure_share(window_events, plan, window);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kEmptyWindow) continue;
      throw;
    }
    auto it = states_.find(plan.plan_id);
    if (it == states_.end()) {
      it = states_
               .emplace(plan.plan_id,
                        PidState::from_config(config_for(plan.plan_id)))
               .first;
    }
    const PidStep step = pid_step(it->second, *m.share, *plan.target_share, 1.0);
    it->second = step.state;
    result.outputs[plan.plan_id] = step.bias;
    result.trace.push_back(
        {ticks_, plan.plan_id, *m.share, *plan.target_share, step.bias});
  }
  ++ticks_;
  return result;
}

}  // namespace uniboost
