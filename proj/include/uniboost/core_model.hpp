#pragma once

// Domain types shared by the serving path, the near-line tracker, offline
// attribution and the simulator. Everything here is a plain value; mutation
// happens by constructing a new value (see PlanRegistry::with_plan).

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace uniboost {

/// Logical time. The simulator and the service both use the request
/// sequence number, so windows are counted in requests.
using Timestamp = std::int64_t;

/// Half-open interval [begin, end).
struct TimeRange {
  Timestamp begin = 0;
  Timestamp end = 0;

  bool contains(Timestamp t) const { return t >= begin && t < end; }
  friend bool operator==(const TimeRange&, const TimeRange&) = default;
};

enum class ContentKind { kOrganic, kAd, kColdStart, kOther };

struct ContentType {
  ContentKind kind = ContentKind::kOrganic;
  std::string tag;  // set only for kOther

  static ContentType organic() { return {ContentKind::kOrganic, {}}; }
  static ContentType ad() { return {ContentKind::kAd, {}}; }
  static ContentType cold_start() { return {ContentKind::kColdStart, {}}; }
  static ContentType other(std::string tag) {
    return {ContentKind::kOther, std::move(tag)};
  }

  friend bool operator==(const ContentType&, const ContentType&) = default;
  friend auto operator<=>(const ContentType&, const ContentType&) = default;
};

/// "organic", "ad", "cold_start" or "other:<tag>".
std::string to_string(const ContentType& type);
ContentType parse_content_type(std::string_view text);

struct Candidate {
  std::string id;
  ContentType content_type;
  double raw_score = 0.0;
  std::set<std::string> tags;
};

/// Throws NegativeRawScore or EmptyId; returns the candidate otherwise.
const Candidate& validate_candidate(const Candidate& candidate);

/// Conjunction of an optional content-type equality and required tags.
/// An empty selector matches every candidate.
struct Selector {
  std::optional<ContentType> content_type;
  std::set<std::string> tags;

  friend bool operator==(const Selector&, const Selector&) = default;
};

bool selector_matches(const Selector& selector, const ContentType& type,
                      const std::set<std::string>& tags);

enum class PlanMode { kStatic, kPidDelivered, kHybrid };

std::string_view to_string(PlanMode mode);
PlanMode parse_plan_mode(std::string_view text);

struct Plan {
  std::string plan_id;
  Selector selector;
  double weight = 0.0;
  double bias = 0.0;
  PlanMode mode = PlanMode::kStatic;
  std::optional<double> target_share;
  bool enabled = true;

  friend bool operator==(const Plan&, const Plan&) = default;
};

/// Throws InvalidPlan when a pid_delivered plan lacks a target or carries a
/// nonzero weight, or a target lies outside [0, 1].
void validate_plan(const Plan& plan);

/// Indicator of plan membership. Does not look at `enabled`.
bool plan_applies(const Plan& plan, const Candidate& candidate);

/// Immutable set of plans kept in lexicographic plan_id order. Every
/// mutation returns a new registry with version + 1.
class PlanRegistry {
 public:
  PlanRegistry() = default;
  explicit PlanRegistry(std::vector<Plan> plans, std::uint64_t version = 0);

  const std::vector<Plan>& plans() const { return plans_; }
  std::uint64_t version() const { return version_; }
  bool empty() const { return plans_.empty(); }

  const Plan* find(std::string_view plan_id) const;
  /// Throws UnknownPlan.
  const Plan& at(std::string_view plan_id) const;

  /// Inserts or replaces by plan_id.
  PlanRegistry with_plan(Plan plan) const;
  /// Throws UnknownPlan.
  PlanRegistry without_plan(std::string_view plan_id) const;
  PlanRegistry bumped() const;

  friend bool operator==(const PlanRegistry&, const PlanRegistry&) = default;

 private:
  std::vector<Plan> plans_;
  std::uint64_t version_ = 0;
};

/// Global alignment parameters (mu_score, mu_anchor) plus estimator state.
struct AlignmentParams {
  double mu_score = 1.0;
  double mu_anchor = 1.0;
  std::int64_t sample_count = 0;
  Timestamp updated_at = 0;
  double half_life = 100000.0;

  friend bool operator==(const AlignmentParams&,
                         const AlignmentParams&) = default;
};

struct ScoreDecomposition {
  std::string candidate_id;
  double raw = 0.0;
  double aligned = 0.0;
  std::map<std::string, double> plan_boosts;  // lexicographic by plan_id
  double final_score = 0.0;

  friend bool operator==(const ScoreDecomposition&,
                         const ScoreDecomposition&) = default;
};

/// aligned + boosts, accumulated left to right in plan_id order. This is the
/// only summation order used anywhere, so reconstruction is bit-exact.
double compose_final(double aligned,
                     const std::map<std::string, double>& plan_boosts);

/// Recomputes compose_final and compares bit-for-bit.
bool reconstructs(const ScoreDecomposition& d);

/// Ranking comparator: final descending, candidate_id ascending.
bool ranks_before(const ScoreDecomposition& a, const ScoreDecomposition& b);

struct BlendDecision {
  std::string request_id;
  std::vector<ScoreDecomposition> ranked;
  std::size_t exposed_k = 0;
  std::uint64_t registry_version = 0;
  AlignmentParams alignment_snapshot;

  friend bool operator==(const BlendDecision&, const BlendDecision&) = default;
};

}  // namespace uniboost
