#pragma once

// JSON object model for every domain type. Field names are snake_case and
// match the struct members, except ScoreDecomposition::final_score which is
// written as "final".

#include <json.hpp>

#include "uniboost/alignment.hpp"
#include "uniboost/blender.hpp"
#include "uniboost/core_model.hpp"
#include "uniboost/tracking.hpp"

namespace uniboost {

using Json = nlohmann::json;

/// Stamped into every JSON artifact written by the CLI and the service.
inline constexpr const char* kSchemaVersion = "uniboost/1";

void to_json(Json& j, const ContentType& v);
void from_json(const Json& j, ContentType& v);
void to_json(Json& j, const Candidate& v);
void from_json(const Json& j, Candidate& v);
void to_json(Json& j, const Selector& v);
void from_json(const Json& j, Selector& v);
void to_json(Json& j, const Plan& v);
void from_json(const Json& j, Plan& v);
void to_json(Json& j, const PlanRegistry& v);
void from_json(const Json& j, PlanRegistry& v);
void to_json(Json& j, const AlignmentParams& v);
void from_json(const Json& j, AlignmentParams& v);
void to_json(Json& j, const ScoreDecomposition& v);
void from_json(const Json& j, ScoreDecomposition& v);
void to_json(Json& j, const BlendDecision& v);
void from_json(const Json& j, BlendDecision& v);
void to_json(Json& j, const BlendRequest& v);
void from_json(const Json& j, BlendRequest& v);
void to_json(Json& j, const Outcomes& v);
void from_json(const Json& j, Outcomes& v);
void to_json(Json& j, const ExposureEvent& v);
void from_json(const Json& j, ExposureEvent& v);
void to_json(Json& j, const StageHistogram& v);
void from_json(const Json& j, StageHistogram& v);
void to_json(Json& j, const TimeRange& v);
void from_json(const Json& j, TimeRange& v);

/// Non-finite reals are written as null and read back as +inf.
Json real_or_null(double value);
double real_from(const Json& j);

/// Parses a JSONL stream of ExposureEvents. Throws MalformedLog with the
/// offending line number.
std::vector<ExposureEvent> read_events_jsonl(std::istream& in);
std::vector<ExposureEvent> read_events_file(const std::filesystem::path& path);
std::vector<BlendDecision> read_decisions_file(
    const std::filesystem::path& path);

/// Reads a whole JSON document; MalformedLog on parse failure.
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& doc);

}  // namespace uniboost
