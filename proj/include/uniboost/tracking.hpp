#pragma once

// Near-line distribution tracking: an append-only exposure log folded into
// per-window stage histograms, plus PSI drift scoring between histograms.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uniboost/core_model.hpp"

namespace uniboost {

/// Posterior outcomes of one exposure.
struct Outcomes {
  double effective_completion = 0.0;  // {0, 1}
  double play_duration = 0.0;         // seconds
  double click = 0.0;                 // {0, 1}
  double buy = 0.0;                   // {0, 1}
  double interaction = 0.0;           // {0, 1}
  double slide = 0.0;                 // {0, 1}

  friend bool operator==(const Outcomes&, const Outcomes&) = default;
};

inline constexpr std::array<std::string_view, 6> kOutcomeMetrics = {
    "effective_completion", "play_duration", "click",
    "buy",                  "interaction",   "slide"};

/// Value of a named metric, or nullopt for an unknown name.
std::optional<double> outcome_value(const Outcomes& outcomes,
                                    std::string_view metric);

struct ExposureEvent {
  std::string request_id;
  Timestamp timestamp = 0;
  std::string candidate_id;
  ContentType content_type;
  std::set<std::string> tags;
  ScoreDecomposition decomposition;
  bool exposed = false;
  std::optional<int> position;  // 0-based rank, exposed items only
  std::optional<Outcomes> outcomes;

  friend bool operator==(const ExposureEvent&, const ExposureEvent&) = default;
};

/// Throws InvalidEvent when outcomes are present on an unexposed item, the
/// decomposition is not additive, or ids are missing/inconsistent.
void validate_event(const ExposureEvent& event);

enum class StageKind { kRaw, kAligned, kBoost, kFinal };

struct Stage {
  StageKind kind = StageKind::kFinal;
  std::string plan_id;  // kBoost only

  static Stage raw() { return {StageKind::kRaw, {}}; }
  static Stage aligned() { return {StageKind::kAligned, {}}; }
  static Stage final_score() { return {StageKind::kFinal, {}}; }
  static Stage boost(std::string plan_id) {
    return {StageKind::kBoost, std::move(plan_id)};
  }

  friend bool operator==(const Stage&, const Stage&) = default;
  friend auto operator<=>(const Stage&, const Stage&) = default;
};

/// "raw", "aligned", "final" or "boost:<plan_id>".
std::string to_string(const Stage& stage);
Stage parse_stage(std::string_view text);

struct StageHistogram {
  Stage stage;
  std::vector<double> bin_edges;
  std::vector<std::int64_t> counts;
  std::int64_t total = 0;
  TimeRange window;

  friend bool operator==(const StageHistogram&,
                         const StageHistogram&) = default;
};

/// Bin edges for the two score scales.
struct HistogramLayout {
  std::vector<double> raw_edges;
  std::vector<double> value_edges;  // aligned, boost and final stages
};

inline constexpr std::size_t kDefaultBins = 50;

std::vector<double> uniform_edges(double lo, double hi, std::size_t bins);

/// [0, raw_p99] for raw; [0, 2 * mu_anchor] for anchor-unit stages.
HistogramLayout make_layout(double raw_p99, double mu_anchor,
                            std::size_t bins = kDefaultBins);

/// Index of the bin holding `value`; values outside the edges land in the
/// first or last bin so that every event is counted.
std::size_t bin_index(std::span<const double> edges, double value);

/// Population stability index sum((q - p) * ln(q / p)) over bin proportions
/// floored at 1e-6. Throws BinMismatch or EmptyHistogram.
double drift_score(const StageHistogram& reference,
                   const StageHistogram& current);

using WindowId = std::int64_t;

struct TrackerOptions {
  Timestamp window_length = 500;
  HistogramLayout layout = make_layout(1.0, 0.5);
  /// Keep every event in memory. Replay and report paths need this; long
  /// simulations switch it off and keep histograms only.
  bool retain_log = true;
  /// When set, each event is also appended to
  /// <log_dir>/window-<id>.events.jsonl and flushed.
  std::optional<std::filesystem::path> log_dir;
};

struct RecordAck {
  bool appended = false;  // false for a suppressed duplicate
  WindowId window = 0;
};

/// Multi-producer event sink. All public members are thread-safe.
class Tracker {
 public:
  explicit Tracker(TrackerOptions options = {});

  RecordAck record(const ExposureEvent& event);

  /// Declares a plan so that boost histograms for it exist even when no
  /// member has been seen yet.
  void declare_plan(const std::string& plan_id);

  /// Cached histogram of one window. Throws UnknownPlan for an undeclared,
  /// never-seen boost stage.
  StageHistogram histogram(const Stage& stage, WindowId window) const;

  /// Same histogram rebuilt from the retained log. Requires retain_log.
  StageHistogram rebuild_histogram(const Stage& stage, WindowId window) const;

  std::vector<ExposureEvent> events(TimeRange range) const;
  std::vector<ExposureEvent> events() const;
  std::size_t log_size() const;

  WindowId window_of(Timestamp t) const;
  TimeRange window_range(WindowId window) const;
  /// Highest window that has received an event, or -1.
  WindowId latest_window() const;
  /// A window is closed once a later window has received an event or it
  /// has been closed explicitly.
  bool is_closed(WindowId window) const;
  void close_through(WindowId window);

  const TrackerOptions& options() const { return options_; }

 private:
  struct WindowState {
    std::map<Stage, std::vector<std::int64_t>> counts;
    std::set<std::pair<std::string, std::string>> keys;
  };

  const std::vector<double>& edges_for(const Stage& stage) const;
  void fold(WindowState& state, const ExposureEvent& event);
  StageHistogram empty_histogram(const Stage& stage, WindowId window) const;
  void check_stage(const Stage& stage) const;

  TrackerOptions options_;
  mutable std::mutex mu_;
  std::vector<ExposureEvent> log_;
  std::size_t appended_ = 0;
  std::map<WindowId, WindowState> windows_;
  std::set<std::string> known_plans_;
  WindowId latest_ = -1;
  WindowId closed_through_ = -1;
  std::map<WindowId, std::ofstream> segments_;
};

}  // namespace uniboost
