#include "uniboost/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "uniboost/alignment.hpp"
#include "uniboost/error.hpp"
#include "uniboost/sim_io.hpp"

namespace uniboost {
namespace {

constexpr std::size_t kFeedBacklog = 64;

Json pid_state_json(const PidState& s) {
  return Json{{"kp", s.kp},
              {"ki", s.ki},
              {"kd", s.kd},
              {"integral", s.integral},
              {"last_error", s.last_error ? Json(*s.last_error) : Json(nullptr)},
              {"output_min", s.output_min},
              {"output_max", s.output_max},
              {"last_output", s.last_output},
              {"windup_limit", s.windup_limit}};
}

PidState pid_state_from(const Json& j) {
  PidState s;
  s.kp = j.at("kp").get<double>();
  s.ki = j.at("ki").get<double>();
  s.kd = j.at("kd").get<double>();
  s.integral = j.at("integral").get<double>();
  if (!j.at("last_error").is_null()) s.last_error = j["last_error"].get<double>();
  s.output_min = j.at("output_min").get<double>();
  s.output_max = j.at("output_max").get<double>();
  s.last_output = j.at("last_output").get<double>();
  s.windup_limit = j.at("windup_limit").get<double>();
  return s;
}

double boost_ratio_of(const ScoreDecomposition& d) {
  if (d.final_score == 0.0) return 0.0;
  double magnitude = 0.0;
  for (const auto& [plan_id, boost] : d.plan_boosts) magnitude += std::abs(boost);
  return magnitude / std::abs(d.final_score);
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownPlan:
      return 404;
    case ErrorCode::kVersionConflict:
      return 409;
    case ErrorCode::kWindowOpen:
      return 425;
    case ErrorCode::kDegenerateParams:
      return 503;
    case ErrorCode::kInsufficientData:
    case ErrorCode::kEmptyWindow:
    case ErrorCode::kMissingDecomposition:
      return 422;
    default:
      return 400;
  }
}

void send_json(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view name,
                const std::string& message) {
  send_json(res, Json{{"error", name}, {"message", message}}, status);
}

/// Runs a handler and maps failures onto status codes.
template <typename F>
void guarded(httplib::Response& res, F&& body) {
  try {
    body();
  } catch (const Error& e) {
    send_error(res, http_status(e.code()), e.name(), e.what());
  } catch (const Json::exception& e) {
    send_error(res, 400, "InvalidRequest", e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "Internal", e.what());
  }
}

Json parse_body(const httplib::Request& req) {
  try {
    return Json::parse(req.body);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidRequest, std::string("malformed JSON: ") + e.what());
  }
}

std::optional<std::uint64_t> expected_version_of(const httplib::Request& req,
                                                 const Json* body) {
  if (req.has_param("expected_version")) {
    return std::stoull(req.get_param_value("expected_version"));
  }
  if (body && body->is_object() && body->contains("expected_version") &&
      !(*body)["expected_version"].is_null()) {
    return (*body)["expected_version"].get<std::uint64_t>();
  }
  return std::nullopt;
}

Json registry_doc(const PlanRegistry& registry) {
  Json doc = registry;
  doc["schema_version"] = kSchemaVersion;
  return doc;
}

TrackerOptions tracker_options(const ServiceConfig& c) {
  TrackerOptions o;
  o.window_length = c.window_length;
  o.layout = make_layout(c.raw_p99, c.alignment.mu_anchor);
  o.retain_log = true;
  if (c.data_dir) o.log_dir = *c.data_dir / "events";
  return o;
}

/// Applies persisted documents from the data directory on top of the
/// configured registry and alignment.
ServiceConfig recover(ServiceConfig c) {
  if (!c.data_dir) return c;
  std::filesystem::create_directories(*c.data_dir);
  const auto registry_path = *c.data_dir / "registry.json";
  if (std::filesystem::exists(registry_path)) {
    c.plans = read_json_file(registry_path).get<PlanRegistry>();
  }
  const auto alignment_path = *c.data_dir / "alignment.json";
  if (std::filesystem::exists(alignment_path)) {
    c.alignment = read_json_file(alignment_path).at("alignment").get<AlignmentParams>();
  }
  return c;
}

}  // namespace

std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::kIdle:
      return "idle";
    case RunMode::kLiveSim:
      return "live_sim";
    case RunMode::kReplay:
      return "replay";
  }
  return "idle";
}

RunMode parse_run_mode(std::string_view text) {
  if (text == "idle") return RunMode::kIdle;
  if (text == "live_sim") return RunMode::kLiveSim;
  if (text == "replay") return RunMode::kReplay;
  throw Error(ErrorCode::kInvalidConfig, "unknown run mode '" + std::string(text) + "'");
}

ServiceConfig service_config_from_json(const Json& doc) {
  ServiceConfig c;
  try {
    c.mode = parse_run_mode(doc.value("mode", std::string("idle")));
    if (doc.contains("plans")) {
      const auto& p = doc["plans"];
      c.plans = p.is_array() ? PlanRegistry(p.get<std::vector<Plan>>())
                             : p.get<PlanRegistry>();
    }
    if (doc.contains("alignment")) c.alignment = doc["alignment"].get<AlignmentParams>();
    c.window_length = doc.value("window_length", c.window_length);
    c.raw_p99 = doc.value("raw_p99", c.raw_p99);
    c.step_interval_us = doc.value("step_interval_us", c.step_interval_us);
    if (doc.contains("sim")) c.sim = sim_config_from_json(doc["sim"]);
    if (doc.contains("replay_events")) {
      c.replay_events = doc["replay_events"].get<std::string>();
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidConfig) throw;
    throw Error(ErrorCode::kInvalidConfig, e.what());
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, e.what());
  }
  if (c.window_length <= 0) {
    throw Error(ErrorCode::kInvalidConfig, "window_length must be positive");
  }
  if (c.mode == RunMode::kLiveSim && !c.sim) {
    throw Error(ErrorCode::kInvalidConfig, "live_sim mode needs a 'sim' section");
  }
  if (c.mode == RunMode::kReplay && !c.replay_events) {
    throw Error(ErrorCode::kInvalidConfig, "replay mode needs 'replay_events'");
  }
  return c;
}

void MetricsFeed::publish(std::string message) {
  {
    std::lock_guard lock(mu_);
    recent_.emplace_back(++sequence_, std::move(message));
    while (recent_.size() > kFeedBacklog) recent_.pop_front();
  }
  cv_.notify_all();
}

std::optional<std::pair<std::uint64_t, std::string>> MetricsFeed::next(
    std::uint64_t after, std::chrono::milliseconds timeout) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, timeout, [&] { return closed_ || sequence_ > after; });
  if (closed_) return std::nullopt;
  for (const auto& entry : recent_) {
    if (entry.first > after) return entry;
  }
  return std::make_pair(after, std::string());
}

std::uint64_t MetricsFeed::last_sequence() const {
  std::lock_guard lock(mu_);
  return sequence_;
}

void MetricsFeed::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

Service::Service(ServiceConfig config)
    : config_(recover(std::move(config))), tracker_(tracker_options(config_)) {
  validate_alignment(config_.alignment);
  current_.registry = std::make_shared<const PlanRegistry>(config_.plans);
  current_.alignment = std::make_shared<const AlignmentParams>(config_.alignment);
  history_[config_.plans.version()] = current_.registry;
  for (const auto& plan : config_.plans.plans()) tracker_.declare_plan(plan.plan_id);
  mode_ = config_.mode;

  if (config_.mode == RunMode::kReplay) {
    const auto events = read_events_file(*config_.replay_events);
    Timestamp last = -1;
    for (const auto& e : events) {
      tracker_.record(e);
      last = std::max(last, e.timestamp);
    }
    clock_ = last + 1;
    tracker_.close_through(tracker_.latest_window());
    auto decisions = decisions_from_events(events);
    decisions_ = std::move(decisions);
  }

  if (config_.mode == RunMode::kLiveSim) {
    SimConfig sim = *config_.sim;
    sim.plans = config_.plans;
    sim.retain = {false, true, false};
    sim.control_tick = config_.window_length;
    if (config_.data_dir && std::filesystem::exists(*config_.data_dir / "alignment.json")) {
      sim.alignment.initial = config_.alignment;
    }
    SimHooks hooks;
    hooks.on_event = [this](const ExposureEvent& e) { tracker_.record(e); };
    hooks.on_decision = [this](const BlendDecision& d) {
      std::lock_guard lock(log_mu_);
      decisions_.push_back(d);
    };
    hooks.on_tick = [this](const TickReport& report) {
      Json msg = report;
      msg["schema_version"] = kSchemaVersion;
      feed_.publish(msg.dump());
      if (config_.data_dir && sim_) {
        Json states = Json::object();
        for (const auto& [id, s] : sim_->controller().states()) {
          states[id] = pid_state_json(s);
        }
        write_json_file(*config_.data_dir / "controllers.json",
                        Json{{"schema_version", kSchemaVersion},
                             {"ticks", sim_->controller().ticks()},
                             {"states", states}});
      }
    };
    sim_ = std::make_unique<Simulation>(std::move(sim), std::move(hooks));
    if (config_.data_dir && std::filesystem::exists(*config_.data_dir / "controllers.json")) {
      const Json doc = read_json_file(*config_.data_dir / "controllers.json");
      std::map<std::string, PidState> states;
      for (const auto& [id, s] : doc.at("states").items()) states[id] = pid_state_from(s);
      sim_->restore_controller(std::move(states), doc.at("ticks").get<std::int64_t>());
    }
    // The bootstrap may have produced fresh alignment; serve what the sim uses.
    current_.alignment = std::make_shared<const AlignmentParams>(sim_->alignment());
  }
  if (config_.data_dir) {
    persist_registry(*current_.registry);
    write_json_file(*config_.data_dir / "alignment.json",
                    Json{{"schema_version", kSchemaVersion},
                         {"alignment", *current_.alignment}});
  }
}

Service::~Service() { stop(); }

Service::Snapshot Service::snapshot() const {
  std::lock_guard lock(snapshot_mu_);
  return current_;
}

RunMode Service::mode() const { return mode_.load(); }

BlendDecision Service::blend(const BlendRequest& request) {
  const Snapshot snap = snapshot();
  BlendDecision decision = uniboost::blend(request, *snap.registry, *snap.alignment);
  log_decision(request, decision);
  return decision;
}

void Service::log_decision(const BlendRequest& request, const BlendDecision& decision) {
  Timestamp t;
  if (mode_.load() == RunMode::kLiveSim) {
    t = clock_.load();
  } else {
    t = clock_.fetch_add(1);
  }
  for (std::size_t i = 0; i < decision.ranked.size(); ++i) {
    const auto& d = decision.ranked[i];
    auto it = std::find_if(request.candidates.begin(), request.candidates.end(),
                           [&](const Candidate& c) { return c.id == d.candidate_id; });
    ExposureEvent e;
    e.request_id = decision.request_id;
    e.timestamp = t;
    e.candidate_id = d.candidate_id;
    e.content_type = it->content_type;
    e.tags = it->tags;
    e.decomposition = d;
    e.exposed = i < decision.exposed_k;
    if (e.exposed) e.position = static_cast<int>(i);
    tracker_.record(e);
  }
  {
    std::lock_guard lock(log_mu_);
    decisions_.push_back(decision);
  }
  if (mode_.load() != RunMode::kLiveSim) maybe_publish_window(tracker_.window_of(t));
}

void Service::maybe_publish_window(WindowId current) {
  std::vector<WindowId> ready;
  {
    std::lock_guard lock(log_mu_);
    while (published_window_ + 1 < current) ready.push_back(++published_window_);
  }
  const Snapshot snap = snapshot();
  for (WindowId w : ready) {
    const TimeRange range = tracker_.window_range(w);
    const auto events = tracker_.events(range);
    TickReport report;
    report.tick = w;
    report.window = range;
    report.registry_version = snap.registry->version();
    std::int64_t exposed = 0;
    double ratio = 0.0;
    std::map<std::string, std::int64_t> types;
    for (const auto& e : events) {
      if (!e.exposed) continue;
      ++exposed;
      ratio += boost_ratio_of(e.decomposition);
      ++types[to_string(e.content_type)];
    }
    if (exposed == 0) continue;
    for (const auto& plan : snap.registry->plans()) {
      report.plan_shares[plan.plan_id] =
          *measure_exposure_share(events, plan, range).share;
      report.plan_biases[plan.plan_id] = plan.bias;
    }
    for (const auto& [type, n] : types) {
      report.type_shares[type] = static_cast<double>(n) / static_cast<double>(exposed);
    }
    report.boost_ratio = ratio / static_cast<double>(exposed);
    const auto aligned = tracker_.histogram(Stage::aligned(), w);
    const auto final_h = tracker_.histogram(Stage::final_score(), w);
    {
      std::lock_guard lock(log_mu_);
      if (!reference_final_) {
        reference_aligned_ = aligned;
        reference_final_ = final_h;
      }
      report.drift_aligned = drift_score(*reference_aligned_, aligned);
      report.drift_final = drift_score(*reference_final_, final_h);
    }
    Json msg = report;
    msg["schema_version"] = kSchemaVersion;
    feed_.publish(msg.dump());
  }
}

WhatIfResult Service::whatif(const BlendRequest& request,
                             const std::vector<PlanOverride>& overrides) const {
  const Snapshot snap = snapshot();
  PlanRegistry alt = *snap.registry;
  for (const auto& o : overrides) {
    Plan plan = alt.at(o.plan_id);
    if (o.weight) plan.weight = *o.weight;
    if (o.bias) plan.bias = *o.bias;
    if (o.target_share) plan.target_share = *o.target_share;
    if (o.enabled) plan.enabled = *o.enabled;
    validate_plan(plan);
    alt = PlanRegistry(alt.with_plan(plan).plans(), snap.registry->version());
  }
  WhatIfResult result;
  result.current = uniboost::blend(request, *snap.registry, *snap.alignment);
  result.overridden = uniboost::blend(request, alt, *snap.alignment);
  return result;
}

void Service::persist_registry(const PlanRegistry& registry) const {
  if (!config_.data_dir) return;
  write_json_file(*config_.data_dir / "registry.json", registry_doc(registry));
}

void Service::publish_registry(PlanRegistry registry) {
  auto shared = std::make_shared<const PlanRegistry>(std::move(registry));
  for (const auto& plan : shared->plans()) tracker_.declare_plan(plan.plan_id);
  {
    std::lock_guard lock(history_mu_);
    history_[shared->version()] = shared;
  }
  {
    std::lock_guard lock(snapshot_mu_);
    current_.registry = shared;
  }
  persist_registry(*shared);
}

void Service::publish_alignment(const AlignmentParams& params) {
  auto shared = std::make_shared<const AlignmentParams>(params);
  {
    std::lock_guard lock(snapshot_mu_);
    current_.alignment = shared;
  }
  if (config_.data_dir) {
    write_json_file(*config_.data_dir / "alignment.json",
                    Json{{"schema_version", kSchemaVersion}, {"alignment", params}});
  }
}

namespace {

void check_version(const PlanRegistry& current, std::optional<std::uint64_t> expected) {
  if (expected && *expected != current.version()) {
    throw Error(ErrorCode::kVersionConflict,
                "expected version " + std::to_string(*expected) + ", current is " +
                    std::to_string(current.version()));
  }
}

}  // namespace

PlanRegistry Service::put_plan(Plan plan, std::optional<std::uint64_t> expected_version) {
  std::lock_guard lock(writer_mu_);
  const auto current = snapshot().registry;
  check_version(*current, expected_version);
  PlanRegistry next = current->with_plan(std::move(plan));
  publish_registry(next);
  return next;
}

PlanRegistry Service::delete_plan(const std::string& plan_id,
                                  std::optional<std::uint64_t> expected_version) {
  std::lock_guard lock(writer_mu_);
  const auto current = snapshot().registry;
  check_version(*current, expected_version);
  PlanRegistry next = current->without_plan(plan_id);
  publish_registry(next);
  return next;
}

PlanRegistry Service::replace_plans(std::vector<Plan> plans,
                                    std::optional<std::uint64_t> expected_version) {
  std::lock_guard lock(writer_mu_);
  const auto current = snapshot().registry;
  check_version(*current, expected_version);
  PlanRegistry next(std::move(plans), current->version() + 1);
  publish_registry(next);
  return next;
}

std::optional<PlanRegistry> Service::registry_at(std::uint64_t version) const {
  std::lock_guard lock(history_mu_);
  auto it = history_.find(version);
  if (it == history_.end()) return std::nullopt;
  return *it->second;
}

std::vector<PlanReport> Service::plan_reports(WindowId window) const {
  if (!tracker_.is_closed(window)) {
    throw Error(ErrorCode::kWindowOpen,
                "window " + std::to_string(window) + " is still open");
  }
  const TimeRange range = tracker_.window_range(window);
  const auto events = tracker_.events(range);
  return uniboost::plan_reports(events, decisions(), *snapshot().registry, range);
}

std::vector<BlendDecision> Service::decisions() const {
  std::lock_guard lock(log_mu_);
  return decisions_;
}

void Service::start_live() {
  if (!sim_ || running_.exchange(true)) return;
  live_thread_ = std::thread([this] { live_loop(); });
}

void Service::live_loop() {
  while (running_.load() && !sim_->done()) {
    {
      std::lock_guard lock(writer_mu_);
      const auto current = snapshot().registry;
      if (!(*current == sim_->registry())) sim_->replace_registry(*current);
      clock_ = sim_->now();
      sim_->step();
      if (!(sim_->registry() == *current)) publish_registry(sim_->registry());
      if (!(sim_->alignment() == *snapshot().alignment)) {
        publish_alignment(sim_->alignment());
      }
    }
    if (config_.step_interval_us > 0) {
      std::this_thread::sleep_for(std::chrono::microseconds(config_.step_interval_us));
    }
  }
  if (sim_->done()) mode_ = RunMode::kIdle;
}

void Service::install_routes() {
  auto& svr = *http_;

  svr.Post("/blend", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto request = parse_body(req).get<BlendRequest>();
      Json body = blend(request);
      body["schema_version"] = kSchemaVersion;
      send_json(res, body);
    });
  });

  svr.Get("/plans", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (req.has_param("version")) {
        const auto version = std::stoull(req.get_param_value("version"));
        const auto registry = registry_at(version);
        if (!registry) {
          throw Error(ErrorCode::kUnknownPlan,
                      "no registry version " + std::to_string(version));
        }
        send_json(res, registry_doc(*registry));
        return;
      }
      send_json(res, registry_doc(*snapshot().registry));
    });
  });

  svr.Put("/plans", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const Json body = parse_body(req);
      auto plans = body.at("plans").get<std::vector<Plan>>();
      send_json(res, registry_doc(replace_plans(std::move(plans),
                                                expected_version_of(req, &body))));
    });
  });

  svr.Get(R"(/plans/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      Json body = snapshot().registry->at(req.matches[1].str());
      body["schema_version"] = kSchemaVersion;
      send_json(res, body);
    });
  });

  svr.Put(R"(/plans/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      Json body = parse_body(req);
      const std::string id = req.matches[1].str();
      if (!body.is_object()) throw Error(ErrorCode::kInvalidPlan, "plan must be an object");
      if (body.contains("plan_id") && body["plan_id"] != id) {
        throw Error(ErrorCode::kInvalidPlan, "plan_id does not match the path");
      }
      const auto expected = expected_version_of(req, &body);
      body.erase("expected_version");
      body["plan_id"] = id;
      send_json(res, registry_doc(put_plan(body.get<Plan>(), expected)));
    });
  });

  svr.Delete(R"(/plans/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      send_json(res, registry_doc(delete_plan(req.matches[1].str(),
                                              expected_version_of(req, nullptr))));
    });
  });

  svr.Get("/alignment", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      Json body = *snapshot().alignment;
      body["schema_version"] = kSchemaVersion;
      send_json(res, body);
    });
  });

  svr.Get("/status", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      send_json(res, Json{{"schema_version", kSchemaVersion},
                          {"mode", std::string(to_string(mode()))},
                          {"registry_version", snapshot().registry->version()},
                          {"log_size", log_size()},
                          {"latest_window", tracker_.latest_window()},
                          {"window_length", config_.window_length}});
    });
  });

  svr.Get("/reports/plans", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!req.has_param("window")) {
        throw Error(ErrorCode::kInvalidRequest, "missing ?window=");
      }
      const WindowId window = std::stoll(req.get_param_value("window"));
      Json reports = Json::array();
      for (const auto& r : plan_reports(window)) {
        reports.push_back(Json{{"plan_id", r.plan_id},
                               {"window", r.window},
                               {"cost", r.cost},
                               {"vv_lift", r.vv_lift},
                               {"boost_spend", r.boost_spend},
                               {"exposure_share", r.exposure_share},
                               {"roi_vv", r.roi_vv ? Json(*r.roi_vv) : Json(nullptr)}});
      }
      send_json(res, Json{{"schema_version", kSchemaVersion},
                          {"window", window},
                          {"reports", reports}});
    });
  });

  svr.Post("/whatif", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const Json body = parse_body(req);
      const auto request = body.at("request").get<BlendRequest>();
      std::vector<PlanOverride> overrides;
      for (const auto& o : body.value("overrides", Json::array())) {
        PlanOverride po;
        po.plan_id = o.at("plan_id").get<std::string>();
        if (o.contains("weight")) po.weight = o["weight"].get<double>();
        if (o.contains("bias")) po.bias = o["bias"].get<double>();
        if (o.contains("target_share")) po.target_share = o["target_share"].get<double>();
        if (o.contains("enabled")) po.enabled = o["enabled"].get<bool>();
        overrides.push_back(std::move(po));
      }
      const auto result = whatif(request, overrides);
      send_json(res, Json{{"schema_version", kSchemaVersion},
                          {"current", result.current},
                          {"overridden", result.overridden}});
    });
  });

  svr.Get("/metrics/stream", [this](const httplib::Request&, httplib::Response& res) {
    res.set_header("Cache-Control", "no-cache");
    // Replay the latest message so a new subscriber sees state immediately.
    const std::uint64_t last = feed_.last_sequence();
    auto cursor = std::make_shared<std::uint64_t>(last > 0 ? last - 1 : 0);
    res.set_chunked_content_provider(
        "text/event-stream", [this, cursor](std::size_t, httplib::DataSink& sink) {
          const auto msg = feed_.next(*cursor, std::chrono::milliseconds(250));
          if (!msg) {
            sink.done();
            return false;
          }
          std::string frame;
          if (msg->second.empty()) {
            frame = ": keepalive\n\n";
          } else {
            *cursor = msg->first;
            frame = "id: " + std::to_string(msg->first) + "\nevent: tick\ndata: " +
                    msg->second + "\n\n";
          }
          return sink.write(frame.data(), frame.size());
        });
  });
}

int Service::start_http(const std::string& host, int port) {
  if (http_) return -1;
  http_ = std::make_unique<httplib::Server>();
  install_routes();
  const int bound = port == 0 ? http_->bind_to_any_port(host)
                              : (http_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) {
    http_.reset();
    return -1;
  }
  http_thread_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
  return bound;
}

bool Service::listen(const std::string& host, int port) {
  if (!http_) {
    http_ = std::make_unique<httplib::Server>();
    install_routes();
  }
  return http_->listen(host, port);
}

void Service::stop() {
  running_ = false;
  feed_.close();
  if (live_thread_.joinable()) live_thread_.join();
  if (http_) http_->stop();
  if (http_thread_.joinable()) http_thread_.join();
}

}  // namespace uniboost
