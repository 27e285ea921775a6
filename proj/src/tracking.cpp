#include "uniboost/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "uniboost/error.hpp"
#include "uniboost/serialization.hpp"

namespace uniboost {

std::optional<double> outcome_value(const Outcomes& o, std::string_view metric) {
  if (metric == "effective_completion") return o.effective_completion;
  if (metric == "play_duration") return o.play_duration;
  if (metric == "click") return o.click;
  if (metric == "buy") return o.buy;
  if (metric == "interaction") return o.interaction;
  if (metric == "slide") return o.slide;
  return std::nullopt;
}

void validate_event(const ExposureEvent& event) {
  if (event.request_id.empty() || event.candidate_id.empty()) {
    throw Error(ErrorCode::kInvalidEvent, "event ids must be non-empty");
  }
  if (event.outcomes && !event.exposed) {
    throw Error(ErrorCode::kInvalidEvent,
                "outcomes on unexposed candidate '" + event.candidate_id + "'");
  }
  if (event.decomposition.candidate_id != event.candidate_id) {
    throw Error(ErrorCode::kInvalidEvent,
                "decomposition belongs to '" +
                    event.decomposition.candidate_id + "', event to '" +
                    event.candidate_id + "'");
  }
  if (!reconstructs(event.decomposition)) {
    throw Error(ErrorCode::kInvalidEvent,
                "decomposition of '" + event.candidate_id +
                    "' is not additive");
  }
}

std::string to_string(const Stage& stage) {
  switch (stage.kind) {
    case StageKind::kRaw: return "raw";
    case StageKind::kAligned: return "aligned";
    case StageKind::kFinal: return "final";
    case StageKind::kBoost: return "boost:" + stage.plan_id;
  }
  return "final";
}

Stage parse_stage(std::string_view text) {
  if (text == "raw") return Stage::raw();
  if (text == "aligned") return Stage::aligned();
  if (text == "final") return Stage::final_score();
  if (text.starts_with("boost:") && text.size() > 6) {
    return Stage::boost(std::string(text.substr(6)));
  }
  throw Error(ErrorCode::kInvalidConfig,
              "unknown stage '" + std::string(text) + "'");
}

std::vector<double> uniform_edges(double lo, double hi, std::size_t bins) {
  if (bins == 0 || !(hi > lo)) {
    throw Error(ErrorCode::kInvalidConfig, "histogram range is empty");
  }
  std::vector<double> edges(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) {
    edges[i] = lo + width * static_cast<double>(i);
  }
  edges.back() = hi;
  return edges;
}

HistogramLayout make_layout(double raw_p99, double mu_anchor,
                            std::size_t bins) {
  return {uniform_edges(0.0, raw_p99 > 0.0 ? raw_p99 : 1.0, bins),
          uniform_edges(0.0, 2.0 * mu_anchor, bins)};
}

std::size_t bin_index(std::span<const double> edges, double value) {
  const std::size_t bins = edges.size() - 1;
  auto it = std::upper_bound(edges.begin(), edges.end(), value);
  if (it == edges.begin()) return 0;
  const auto idx = static_cast<std::size_t>(it - edges.begin()) - 1;
  return std::min(idx, bins - 1);
}

double drift_score(const StageHistogram& reference,
                   const StageHistogram& current) {
  if (reference.bin_edges != current.bin_edges ||
      reference.counts.size() != current.counts.size()) {
    throw Error(ErrorCode::kBinMismatch, "histograms use different bins");
  }
  if (reference.total <= 0 || current.total <= 0) {
    throw Error(ErrorCode::kEmptyHistogram, "PSI needs non-empty histograms");
  }
  constexpr double kFloor = 1e-6;
  const double p_total = static_cast<double>(reference.total);
  const double q_total = static_cast<double>(current.total);
  double psi = 0.0;
  for (std::size_t b = 0; b < reference.counts.size(); ++b) {
    const double p =
        std::max(static_cast<double>(reference.counts[b]) / p_total, kFloor);
    const double q =
        std::max(static_cast<double>(current.counts[b]) / q_total, kFloor);
    psi += (q - p) * std::log(q / p);
  }
  return psi;
}

Tracker::Tracker(TrackerOptions options) : options_(std::move(options)) {
  if (options_.window_length <= 0) {
    throw Error(ErrorCode::kInvalidConfig, "window_length must be positive");
  }
  if (options_.log_dir) std::filesystem::create_directories(*options_.log_dir);
}

WindowId Tracker::window_of(Timestamp t) const {
  // Floor division so negative timestamps fall in negative windows.
  const Timestamp len = options_.window_length;
  return t >= 0 ? t / len : -((-t + len - 1) / len);
}

TimeRange Tracker::window_range(WindowId window) const {
  return {window * options_.window_length,
          (window + 1) * options_.window_length};
}

const std::vector<double>& Tracker::edges_for(const Stage& stage) const {
  return stage.kind == StageKind::kRaw ? options_.layout.raw_edges
                                       : options_.layout.value_edges;
}

void Tracker::fold(WindowState& state, const ExposureEvent& event) {
  auto bump = [&](const Stage& stage, double value) {
    const auto& edges = edges_for(stage);
    auto& counts = state.counts[stage];
    if (counts.empty()) counts.assign(edges.size() - 1, 0);
    ++counts[bin_index(edges, value)];
  };
  const auto& d = event.decomposition;
  bump(Stage::raw(), d.raw);
  bump(Stage::aligned(), d.aligned);
  bump(Stage::final_score(), d.final_score);
  for (const auto& [plan_id, boost] : d.plan_boosts) {
    bump(Stage::boost(plan_id), boost);
  }
}

RecordAck Tracker::record(const ExposureEvent& event) {
  validate_event(event);
  std::lock_guard lock(mu_);
  const WindowId w = window_of(event.timestamp);
  auto& state = windows_[w];
  if (!state.keys.emplace(event.request_id, event.candidate_id).second) {
    return {false, w};
  }
  fold(state, event);
  for (const auto& [plan_id, boost] : event.decomposition.plan_boosts) {
    known_plans_.insert(plan_id);
  }
  if (options_.retain_log) log_.push_back(event);
  ++appended_;
  if (options_.log_dir) {
    auto& out = segments_[w];
    if (!out.is_open()) {
      char name[64];
      std::snprintf(name, sizeof(name), "window-%06lld.events.jsonl",
                    static_cast<long long>(w));
      out.open(*options_.log_dir / name, std::ios::app);
    }
    out << Json(event).dump() << '\n';
    out.flush();
  }
  if (w > latest_) {
    latest_ = w;
    // Duplicate suppression only looks at the current and previous window.
    for (auto& [id, s] : windows_) {
      if (id < latest_ - 1) s.keys.clear();
    }
    // Segments of closed windows are final.
    for (auto it = segments_.begin(); it != segments_.end();) {
      it = it->first < latest_ - 1 ? segments_.erase(it) : std::next(it);
    }
  }
  return {true, w};
}

void Tracker::declare_plan(const std::string& plan_id) {
  std::lock_guard lock(mu_);
  known_plans_.insert(plan_id);
}

void Tracker::check_stage(const Stage& stage) const {
  if (stage.kind == StageKind::kBoost && !known_plans_.contains(stage.plan_id)) {
    throw Error(ErrorCode::kUnknownPlan,
                "no boost histogram for plan '" + stage.plan_id + "'");
  }
}

StageHistogram Tracker::empty_histogram(const Stage& stage,
                                        WindowId window) const {
  StageHistogram h;
  h.stage = stage;
  h.bin_edges = edges_for(stage);
  h.counts.assign(h.bin_edges.size() - 1, 0);
  h.total = 0;
  h.window = window_range(window);
  return h;
}

StageHistogram Tracker::histogram(const Stage& stage, WindowId window) const {
  std::lock_guard lock(mu_);
  check_stage(stage);
  StageHistogram h = empty_histogram(stage, window);
  auto w = windows_.find(window);
  if (w == windows_.end()) return h;
  auto c = w->second.counts.find(stage);
  if (c == w->second.counts.end()) return h;
  h.counts = c->second;
  for (auto n : h.counts) h.total += n;
  return h;
}

StageHistogram Tracker::rebuild_histogram(const Stage& stage,
                                          WindowId window) const {
  std::lock_guard lock(mu_);
  check_stage(stage);
  if (!options_.retain_log) {
    throw Error(ErrorCode::kInvalidConfig, "tracker does not retain its log");
  }
  StageHistogram h = empty_histogram(stage, window);
  const auto range = h.window;
  for (const auto& e : log_) {
    if (!range.contains(e.timestamp)) continue;
    const auto& d = e.decomposition;
    std::optional<double> value;
    switch (stage.kind) {
      case StageKind::kRaw: value = d.raw; break;
      case StageKind::kAligned: value = d.aligned; break;
      case StageKind::kFinal: value = d.final_score; break;
      case StageKind::kBoost: {
        auto it = d.plan_boosts.find(stage.plan_id);
        if (it != d.plan_boosts.end()) value = it->second;
        break;
      }
    }
    if (!value) continue;
    ++h.counts[bin_index(h.bin_edges, *value)];
    ++h.total;
  }
  return h;
}

std::vector<ExposureEvent> Tracker::events(TimeRange range) const {
  std::lock_guard lock(mu_);
  std::vector<ExposureEvent> out;
  for (const auto& e : log_) {
    if (range.contains(e.timestamp)) out.push_back(e);
  }
  return out;
}

std::vector<ExposureEvent> Tracker::events() const {
  std::lock_guard lock(mu_);
  return log_;
}

std::size_t Tracker::log_size() const {
  std::lock_guard lock(mu_);
  return appended_;
}

WindowId Tracker::latest_window() const {
  std::lock_guard lock(mu_);
  return latest_;
}

bool Tracker::is_closed(WindowId window) const {
  std::lock_guard lock(mu_);
  return window < latest_ || window <= closed_through_;
}

void Tracker::close_through(WindowId window) {
  std::lock_guard lock(mu_);
  closed_through_ = std::max(closed_through_, window);
}

}  // namespace uniboost
