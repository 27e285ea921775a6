#include "uniboost/serialization.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "uniboost/error.hpp"

namespace uniboost {

Json real_or_null(double value) {
  if (!std::isfinite(value)) return nullptr;
  return value;
}

double real_from(const Json& j) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  return j.get<double>();
}

void to_json(Json& j, const ContentType& v) { j = to_string(v); }
void from_json(const Json& j, ContentType& v) {
  v = parse_content_type(j.get<std::string>());
}

void to_json(Json& j, const Candidate& v) {
  j = Json{{"id", v.id},
           {"content_type", v.content_type},
           {"raw_score", v.raw_score},
           {"tags", v.tags}};
}
void from_json(const Json& j, Candidate& v) {
  v.id = j.at("id").get<std::string>();
  v.content_type = j.value("content_type", Json("organic")).get<ContentType>();
  v.raw_score = j.at("raw_score").get<double>();
  v.tags = j.value("tags", std::set<std::string>{});
}

void to_json(Json& j, const Selector& v) {
  j = Json::object();
  if (v.content_type) j["content_type"] = *v.content_type;
  j["tags"] = v.tags;
}
void from_json(const Json& j, Selector& v) {
  v.content_type.reset();
  if (j.contains("content_type") && !j["content_type"].is_null()) {
    v.content_type = j["content_type"].get<ContentType>();
  }
  v.tags = j.value("tags", std::set<std::string>{});
}

void to_json(Json& j, const Plan& v) {
  j = Json{{"plan_id", v.plan_id},
           {"selector", v.selector},
           {"weight", v.weight},
           {"bias", v.bias},
           {"mode", std::string(to_string(v.mode))},
           {"enabled", v.enabled}};
  j["target_share"] = v.target_share ? Json(*v.target_share) : Json(nullptr);
}
void from_json(const Json& j, Plan& v) {
  v.plan_id = j.at("plan_id").get<std::string>();
  v.selector = j.value("selector", Json::object()).get<Selector>();
  v.weight = j.value("weight", 0.0);
  v.bias = j.value("bias", 0.0);
  v.mode = parse_plan_mode(j.value("mode", std::string("static")));
  v.target_share.reset();
  if (j.contains("target_share") && !j["target_share"].is_null()) {
    v.target_share = j["target_share"].get<double>();
  }
  v.enabled = j.value("enabled", true);
}

void to_json(Json& j, const PlanRegistry& v) {
  j = Json{{"version", v.version()}, {"plans", v.plans()}};
}
void from_json(const Json& j, PlanRegistry& v) {
  v = PlanRegistry(j.value("plans", std::vector<Plan>{}),
                   j.value("version", std::uint64_t{0}));
}

void to_json(Json& j, const AlignmentParams& v) {
  j = Json{{"mu_score", v.mu_score},
           {"mu_anchor", v.mu_anchor},
           {"sample_count", v.sample_count},
           {"updated_at", v.updated_at},
           {"half_life", v.half_life}};
}
void from_json(const Json& j, AlignmentParams& v) {
  v.mu_score = j.at("mu_score").get<double>();
  v.mu_anchor = j.at("mu_anchor").get<double>();
  v.sample_count = j.value("sample_count", std::int64_t{0});
  v.updated_at = j.value("updated_at", Timestamp{0});
  v.half_life = j.value("half_life", 100000.0);
}

void to_json(Json& j, const ScoreDecomposition& v) {
  j = Json{{"candidate_id", v.candidate_id},
           {"raw", v.raw},
           {"aligned", v.aligned},
           {"plan_boosts", v.plan_boosts},
           {"final", v.final_score}};
}
void from_json(const Json& j, ScoreDecomposition& v) {
  v.candidate_id = j.at("candidate_id").get<std::string>();
  v.raw = j.at("raw").get<double>();
  v.aligned = j.at("aligned").get<double>();
  v.plan_boosts =
      j.value("plan_boosts", std::map<std::string, double>{});
  v.final_score = j.at("final").get<double>();
}

void to_json(Json& j, const BlendDecision& v) {
  j = Json{{"request_id", v.request_id},
           {"ranked", v.ranked},
           {"exposed_k", v.exposed_k},
           {"registry_version", v.registry_version},
           {"alignment_snapshot", v.alignment_snapshot}};
}
void from_json(const Json& j, BlendDecision& v) {
  v.request_id = j.at("request_id").get<std::string>();
  v.ranked = j.at("ranked").get<std::vector<ScoreDecomposition>>();
  v.exposed_k = j.at("exposed_k").get<std::size_t>();
  v.registry_version = j.value("registry_version", std::uint64_t{0});
  v.alignment_snapshot = j.at("alignment_snapshot").get<AlignmentParams>();
}

void to_json(Json& j, const BlendRequest& v) {
  j = Json{{"request_id", v.request_id},
           {"candidates", v.candidates},
           {"k", v.k}};
}
void from_json(const Json& j, BlendRequest& v) {
  v.request_id = j.at("request_id").get<std::string>();
  v.candidates = j.at("candidates").get<std::vector<Candidate>>();
  const auto k = j.at("k").get<std::int64_t>();
  if (k < 1) throw Error(ErrorCode::kInvalidRequest, "k must be at least 1");
  v.k = static_cast<std::size_t>(k);
}

void to_json(Json& j, const Outcomes& v) {
  j = Json{{"effective_completion", v.effective_completion},
           {"play_duration", v.play_duration},
           {"click", v.click},
           {"buy", v.buy},
           {"interaction", v.interaction},
           {"slide", v.slide}};
}
void from_json(const Json& j, Outcomes& v) {
  v.effective_completion = j.value("effective_completion", 0.0);
  v.play_duration = j.value("play_duration", 0.0);
  v.click = j.value("click", 0.0);
  v.buy = j.value("buy", 0.0);
  v.interaction = j.value("interaction", 0.0);
  v.slide = j.value("slide", 0.0);
}

void to_json(Json& j, const ExposureEvent& v) {
  j = Json{{"request_id", v.request_id},
           {"timestamp", v.timestamp},
           {"candidate_id", v.candidate_id},
           {"content_type", v.content_type},
           {"tags", v.tags},
           {"decomposition", v.decomposition},
           {"exposed", v.exposed}};
  j["position"] = v.position ? Json(*v.position) : Json(nullptr);
  j["outcomes"] = v.outcomes ? Json(*v.outcomes) : Json(nullptr);
}
void from_json(const Json& j, ExposureEvent& v) {
  v.request_id = j.at("request_id").get<std::string>();
  v.timestamp = j.at("timestamp").get<Timestamp>();
  v.candidate_id = j.at("candidate_id").get<std::string>();
  v.content_type = j.at("content_type").get<ContentType>();
  v.tags = j.value("tags", std::set<std::string>{});
  if (!j.contains("decomposition") || j["decomposition"].is_null()) {
    throw Error(ErrorCode::kMissingDecomposition,
                "event for '" + v.candidate_id + "' has no decomposition");
  }
  v.decomposition = j["decomposition"].get<ScoreDecomposition>();
  v.exposed = j.at("exposed").get<bool>();
  v.position.reset();
  if (j.contains("position") && !j["position"].is_null()) {
    v.position = j["position"].get<int>();
  }
  v.outcomes.reset();
  if (j.contains("outcomes") && !j["outcomes"].is_null()) {
    v.outcomes = j["outcomes"].get<Outcomes>();
  }
}

void to_json(Json& j, const TimeRange& v) {
  j = Json{{"begin", v.begin}, {"end", v.end}};
}
void from_json(const Json& j, TimeRange& v) {
  v.begin = j.at("begin").get<Timestamp>();
  v.end = j.at("end").get<Timestamp>();
}

void to_json(Json& j, const StageHistogram& v) {
  j = Json{{"stage", to_string(v.stage)},
           {"bin_edges", v.bin_edges},
           {"counts", v.counts},
           {"total", v.total},
           {"window", v.window}};
}
void from_json(const Json& j, StageHistogram& v) {
  v.stage = parse_stage(j.at("stage").get<std::string>());
  v.bin_edges = j.at("bin_edges").get<std::vector<double>>();
  v.counts = j.at("counts").get<std::vector<std::int64_t>>();
  v.total = j.at("total").get<std::int64_t>();
  v.window = j.at("window").get<TimeRange>();
}

std::vector<ExposureEvent> read_events_jsonl(std::istream& in) {
  std::vector<ExposureEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      events.push_back(Json::parse(line).get<ExposureEvent>());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kMissingDecomposition) throw;
      throw Error(ErrorCode::kMalformedLog,
                  "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kMalformedLog,
                  "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return events;
}

std::vector<ExposureEvent> read_events_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kMalformedLog, "cannot open " + path.string());
  }
  return read_events_jsonl(in);
}

std::vector<BlendDecision> read_decisions_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kMalformedLog, "cannot open " + path.string());
  }
  std::vector<BlendDecision> decisions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      decisions.push_back(Json::parse(line).get<BlendDecision>());
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kMalformedLog,
                  path.string() + " line " + std::to_string(line_no) + ": " +
                      e.what());
    }
  }
  return decisions;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kMalformedLog, "cannot open " + path.string());
  }
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kMalformedLog, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& doc) {
  // Write-then-rename so readers never see a half-written document.
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << doc.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace uniboost
