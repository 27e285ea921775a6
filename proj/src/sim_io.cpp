#include "uniboost/sim_io.hpp"

#include <cmath>

#include "uniboost/error.hpp"

namespace uniboost {
namespace {

Json optional_real(const std::optional<double>& v) {
  return v ? real_or_null(*v) : Json(nullptr);
}

Json logistic_json(const Logistic& l) {
  return Json{{"intercept", l.intercept}, {"slope", l.slope}};
}

Logistic logistic_from(const Json& j, const Logistic& fallback) {
  Logistic l;
  l.intercept = j.value("intercept", fallback.intercept);
  l.slope = j.value("slope", fallback.slope);
  return l;
}

}  // namespace

void to_json(Json& j, const PidConfig& v) {
  j = Json{{"kp", v.kp},
           {"ki", v.ki},
           {"kd", v.kd},
           {"output_min", v.output_min},
           {"output_max", v.output_max},
           {"windup_limit", v.windup_limit},
           {"tick", v.tick}};
}
void from_json(const Json& j, PidConfig& v) {
  const PidConfig d;
  v.kp = j.value("kp", d.kp);
  v.ki = j.value("ki", d.ki);
  v.kd = j.value("kd", d.kd);
  v.output_min = j.value("output_min", d.output_min);
  v.output_max = j.value("output_max", d.output_max);
  v.windup_limit = j.value("windup_limit", d.windup_limit);
  v.tick = j.value("tick", d.tick);
}

void to_json(Json& j, const TagRule& v) {
  j = Json{{"tag", v.tag},
           {"probability", v.probability},
           {"raw_scale", v.raw_scale}};
  j["content_type"] = v.content_type ? Json(*v.content_type) : Json(nullptr);
}
void from_json(const Json& j, TagRule& v) {
  v.tag = j.at("tag").get<std::string>();
  v.probability = j.at("probability").get<double>();
  v.raw_scale = j.value("raw_scale", 1.0);
  v.content_type.reset();
  if (j.contains("content_type") && !j["content_type"].is_null()) {
    v.content_type = j["content_type"].get<ContentType>();
  }
}

void to_json(Json& j, const OutcomeModel& v) {
  j = Json{{"value_scale", v.value_scale},
           {"calibration_exponent", v.calibration_exponent},
           {"ad_gap", v.ad_gap},
           {"completed_duration_mean", v.completed_duration_mean},
           {"skipped_duration_mean", v.skipped_duration_mean},
           {"click", logistic_json(v.click)},
           {"interaction", logistic_json(v.interaction)},
           {"slide", logistic_json(v.slide)},
           {"buy_rate", v.buy_rate}};
}
void from_json(const Json& j, OutcomeModel& v) {
  const OutcomeModel d;
  v.value_scale = j.value("value_scale", d.value_scale);
  v.calibration_exponent = j.value("calibration_exponent", d.calibration_exponent);
  v.ad_gap = j.value("ad_gap", d.ad_gap);
  v.completed_duration_mean =
      j.value("completed_duration_mean", d.completed_duration_mean);
  v.skipped_duration_mean = j.value("skipped_duration_mean", d.skipped_duration_mean);
  v.click = logistic_from(j.value("click", Json::object()), d.click);
  v.interaction = logistic_from(j.value("interaction", Json::object()), d.interaction);
  v.slide = logistic_from(j.value("slide", Json::object()), d.slide);
  v.buy_rate = j.value("buy_rate", d.buy_rate);
}

void to_json(Json& j, const SimConfig& v) {
  Json mix = Json::object();
  for (const auto& [type, p] : v.content_mix) mix[to_string(type)] = p;
  Json scores = Json::object();
  for (const auto& [type, ln] : v.score_model) {
    scores[to_string(type)] = Json{{"median", std::exp(ln.mu)}, {"sigma", ln.sigma}};
  }
  Json alignment{{"half_life", v.alignment.half_life},
                 {"bootstrap_requests", v.alignment.bootstrap_requests},
                 {"min_bootstrap", v.alignment.min_bootstrap},
                 {"near_line_updates", v.alignment.near_line_updates}};
  alignment["initial"] =
      v.alignment.initial ? Json(*v.alignment.initial) : Json(nullptr);
  j = Json{{"seed", v.seed},
           {"n_requests", v.n_requests},
           {"candidates_per_request", v.candidates_per_request},
           {"k", v.k},
           {"content_mix", mix},
           {"score_model", scores},
           {"tag_rules", v.tag_rules},
           {"outcome_model", v.outcome_model},
           {"plans", v.plans.plans()},
           {"pipeline", std::string(to_string(v.pipeline))},
           {"control_tick", v.control_tick},
           {"controller", v.controller},
           {"plan_controllers", v.plan_controllers},
           {"alignment", alignment},
           {"retain",
            {{"events", v.retain.events},
             {"log_unexposed", v.retain.log_unexposed},
             {"decisions", v.retain.decisions}}}};
}

void from_json(const Json& j, SimConfig& v) {
  v = default_sim_config(j.value("seed", std::uint64_t{1}));
  v.n_requests = j.value("n_requests", v.n_requests);
  v.candidates_per_request = j.value("candidates_per_request", v.candidates_per_request);
  v.k = j.value("k", v.k);
  if (j.contains("content_mix")) {
    v.content_mix.clear();
    for (const auto& [name, p] : j["content_mix"].items()) {
      v.content_mix[parse_content_type(name)] = p.get<double>();
    }
  }
  if (j.contains("score_model")) {
    for (const auto& [name, s] : j["score_model"].items()) {
      LogNormalParams ln;
      if (s.contains("median")) {
        ln.mu = std::log(s["median"].get<double>());
      } else {
        ln.mu = s.value("mu", 0.0);
      }
      ln.sigma = s.value("sigma", 1.0);
      v.score_model[parse_content_type(name)] = ln;
    }
  }
  v.tag_rules = j.value("tag_rules", v.tag_rules);
  if (j.contains("outcome_model")) {
    v.outcome_model = j["outcome_model"].get<OutcomeModel>();
  }
  if (j.contains("plans")) {
    const auto& p = j["plans"];
    v.plans = p.is_array() ? PlanRegistry(p.get<std::vector<Plan>>())
                           : p.get<PlanRegistry>();
  }
  v.pipeline = parse_pipeline(j.value("pipeline", std::string("uniboost")));
  v.control_tick = j.value("control_tick", v.control_tick);
  if (j.contains("controller")) v.controller = j["controller"].get<PidConfig>();
  v.plan_controllers = j.value("plan_controllers", v.plan_controllers);
  if (j.contains("alignment")) {
    const auto& a = j["alignment"];
    v.alignment.half_life = a.value("half_life", v.alignment.half_life);
    v.alignment.bootstrap_requests =
        a.value("bootstrap_requests", v.alignment.bootstrap_requests);
    v.alignment.min_bootstrap = a.value("min_bootstrap", v.alignment.min_bootstrap);
    v.alignment.near_line_updates =
        a.value("near_line_updates", v.alignment.near_line_updates);
    if (a.contains("initial") && !a["initial"].is_null()) {
      v.alignment.initial = a["initial"].get<AlignmentParams>();
    }
  }
  if (j.contains("retain")) {
    const auto& r = j["retain"];
    v.retain.events = r.value("events", v.retain.events);
    v.retain.log_unexposed = r.value("log_unexposed", v.retain.log_unexposed);
    v.retain.decisions = r.value("decisions", v.retain.decisions);
  }
}

void to_json(Json& j, const SimSummary& v) {
  j = Json{{"requests", v.requests},
           {"vv", v.vv},
           {"valued_vv", v.valued_vv},
           {"duration", v.duration},
           {"valued_score", v.valued_score},
           {"type_shares", v.type_shares},
           {"plan_shares", v.plan_shares},
           {"boost_ratio", v.boost_ratio},
           {"final_alignment", v.final_alignment}};
}

void to_json(Json& j, const TickReport& v) {
  j = Json{{"tick", v.tick},
           {"window", v.window},
           {"plan_shares", v.plan_shares},
           {"plan_biases", v.plan_biases},
           {"type_shares", v.type_shares},
           {"drift_aligned", v.drift_aligned},
           {"drift_final", v.drift_final},
           {"boost_ratio", v.boost_ratio},
           {"registry_version", v.registry_version}};
}

void to_json(Json& j, const ControllerTraceEntry& v) {
  j = Json{{"tick", v.tick},
           {"plan_id", v.plan_id},
           {"measured", v.measured},
           {"target", v.target},
           {"bias", v.bias}};
}

void to_json(Json& j, const AbReport& v) {
  Json deltas = Json::object();
  for (const auto& [key, d] : v.relative_deltas) deltas[key] = optional_real(d);
  j = Json{{"a", v.a},
           {"b", v.b},
           {"relative_deltas", deltas},
           {"boost_ratio_reduction", optional_real(v.boost_ratio_reduction)},
           {"paired_valued_score_mean", v.paired_valued_score_mean},
           {"paired_valued_score_stderr", v.paired_valued_score_stderr}};
}

SimConfig sim_config_from_json(const Json& doc) {
  SimConfig config;
  try {
    config = doc.get<SimConfig>();
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidConfig, e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, e.what());
  }
  validate_config(config);
  return config;
}

SimConfig load_sim_config(const std::filesystem::path& path) {
  Json doc;
  try {
    doc = read_json_file(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kInvalidConfig, e.what());
  }
  return sim_config_from_json(doc);
}

}  // namespace uniboost
