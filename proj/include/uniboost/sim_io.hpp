#pragma once

// JSON for simulator configs and reports. Config documents may omit any
// field; omitted fields take the values of default_sim_config(seed).

#include "uniboost/serialization.hpp"
#include "uniboost/traffic_sim.hpp"

namespace uniboost {

void to_json(Json& j, const PidConfig& v);
void from_json(const Json& j, PidConfig& v);
void to_json(Json& j, const TagRule& v);
void from_json(const Json& j, TagRule& v);
void to_json(Json& j, const OutcomeModel& v);
void from_json(const Json& j, OutcomeModel& v);
void to_json(Json& j, const SimConfig& v);
void from_json(const Json& j, SimConfig& v);
void to_json(Json& j, const SimSummary& v);
void to_json(Json& j, const TickReport& v);
void to_json(Json& j, const ControllerTraceEntry& v);
void to_json(Json& j, const AbReport& v);

/// Parses and validates a config document. Throws InvalidConfig.
SimConfig sim_config_from_json(const Json& doc);
SimConfig load_sim_config(const std::filesystem::path& path);

}  // namespace uniboost
