#pragma once

// Long-running blending service. Readers take an immutable (registry, alignment)
// snapshot under a short lock and blend without further synchronization;
// writers serialize on a separate mutex and publish whole new documents.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "uniboost/attribution.hpp"
#include "uniboost/blender.hpp"
#include "uniboost/core_model.hpp"
#include "uniboost/serialization.hpp"
#include "uniboost/tracking.hpp"
#include "uniboost/traffic_sim.hpp"

namespace httplib {
class Server;
}

namespace uniboost {

enum class RunMode { kIdle, kLiveSim, kReplay };

std::string_view to_string(RunMode mode);
RunMode parse_run_mode(std::string_view text);

struct ServiceConfig {
  RunMode mode = RunMode::kIdle;
  PlanRegistry plans;
  AlignmentParams alignment;
  Timestamp window_length = 500;
  /// Upper edge of the raw-score histograms.
  double raw_p99 = 1.0;
  /// live_sim: the simulation to drive; its plans seed the registry.
  std::optional<SimConfig> sim;
  /// live_sim: pause between simulated requests.
  std::int64_t step_interval_us = 1000;
  /// replay: event log loaded into the tracker at start.
  std::optional<std::filesystem::path> replay_events;
  std::optional<std::filesystem::path> data_dir;
};

/// Reads the document accepted by `serve --config`. Throws InvalidConfig.
ServiceConfig service_config_from_json(const Json& doc);

struct PlanOverride {
  std::string plan_id;
  std::optional<double> weight;
  std::optional<double> bias;
  std::optional<double> target_share;
  std::optional<bool> enabled;
};

struct WhatIfResult {
  BlendDecision current;
  BlendDecision overridden;
};

/// Ordered fan-out of metrics messages to stream subscribers.
class MetricsFeed {
 public:
  void publish(std::string message);
  /// Blocks until a message newer than `after` exists or the feed closes.
  /// Returns (sequence, message), or nothing once closed.
  std::optional<std::pair<std::uint64_t, std::string>> next(
      std::uint64_t after, std::chrono::milliseconds timeout);
  std::uint64_t last_sequence() const;
  void close();

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::pair<std::uint64_t, std::string>> recent_;
  std::uint64_t sequence_ = 0;
  bool closed_ = false;
};

class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  struct Snapshot {
    std::shared_ptr<const PlanRegistry> registry;
    std::shared_ptr<const AlignmentParams> alignment;
  };
  Snapshot snapshot() const;

  /// Blends under one snapshot and logs the decision. Throws like blend().
  BlendDecision blend(const BlendRequest& request);
  /// Pure: nothing is logged and no state changes. Throws UnknownPlan.
  WhatIfResult whatif(const BlendRequest& request,
                      const std::vector<PlanOverride>& overrides) const;

  /// Mutations throw VersionConflict when `expected_version` is stale.
  PlanRegistry put_plan(Plan plan, std::optional<std::uint64_t> expected_version);
  PlanRegistry delete_plan(const std::string& plan_id,
                           std::optional<std::uint64_t> expected_version);
  PlanRegistry replace_plans(std::vector<Plan> plans,
                             std::optional<std::uint64_t> expected_version);
  /// Any registry version this service has published.
  std::optional<PlanRegistry> registry_at(std::uint64_t version) const;

  /// Throws WindowOpen for a window that can still receive events.
  std::vector<PlanReport> plan_reports(WindowId window) const;

  std::vector<BlendDecision> decisions() const;
  std::size_t log_size() const { return tracker_.log_size(); }
  const Tracker& tracker() const { return tracker_; }
  RunMode mode() const;
  MetricsFeed& feed() { return feed_; }

  /// Starts the live simulation thread (live_sim mode only).
  void start_live();
  /// Serves HTTP on a background thread; port 0 picks a free port.
  int start_http(const std::string& host, int port);
  /// Blocks serving HTTP on the calling thread.
  bool listen(const std::string& host, int port);
  void stop();

 private:
  void publish_registry(PlanRegistry registry);
  void publish_alignment(const AlignmentParams& params);
  void persist_registry(const PlanRegistry& registry) const;
  void log_decision(const BlendRequest& request, const BlendDecision& decision);
  void maybe_publish_window(WindowId window);
  void live_loop();
  void install_routes();

  ServiceConfig config_;
  mutable std::mutex snapshot_mu_;
  Snapshot current_;
  std::mutex writer_mu_;
  std::map<std::uint64_t, std::shared_ptr<const PlanRegistry>> history_;
  mutable std::mutex history_mu_;

  Tracker tracker_;
  mutable std::mutex log_mu_;
  std::vector<BlendDecision> decisions_;
  std::atomic<Timestamp> clock_{0};
  WindowId published_window_ = -1;
  std::optional<StageHistogram> reference_aligned_;
  std::optional<StageHistogram> reference_final_;

  MetricsFeed feed_;
  std::unique_ptr<Simulation> sim_;
  std::thread live_thread_;
  std::atomic<bool> running_{false};
  std::atomic<RunMode> mode_{RunMode::kIdle};

  std::unique_ptr<httplib::Server> http_;
  std::thread http_thread_;
};

}  // namespace uniboost
