#include "uniboost/traffic_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>

#include "uniboost/error.hpp"

namespace uniboost {
namespace {

constexpr std::uint64_t kRequestStream = 1;
constexpr std::uint64_t kOutcomeStream = 2;
constexpr std::uint64_t kBootstrapRequestStream = 3;
constexpr std::uint64_t kBootstrapOutcomeStream = 4;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double boost_ratio_of(const ScoreDecomposition& d) {
  if (d.final_score == 0.0) return 0.0;
  double magnitude = 0.0;
  for (const auto& [plan_id, boost] : d.plan_boosts) magnitude += std::abs(boost);
  return magnitude / std::abs(d.final_score);
}

std::map<std::string, double> shares_of(
    const std::map<std::string, std::int64_t>& counts, std::int64_t total) {
  std::map<std::string, double> shares;
  for (const auto& [key, n] : counts) {
    shares[key] = total > 0 ? static_cast<double>(n) /
                                  static_cast<double>(total)
                            : 0.0;
  }
  return shares;
}

}  // namespace

Rng stream_rng(std::uint64_t seed, std::uint64_t stream, std::int64_t index) {
  // splitmix64 finalizer over the three coordinates; seeding from a single
  // word is far cheaper than a seed_seq and still decorrelates the streams.
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  const std::uint64_t key =
      mix(mix(mix(seed) ^ stream) ^ static_cast<std::uint64_t>(index));
  return Rng(key);
}

std::string_view to_string(Pipeline pipeline) {
  return pipeline == Pipeline::kUniboost ? "uniboost" : "legacy";
}

Pipeline parse_pipeline(std::string_view text) {
  if (text == "uniboost") return Pipeline::kUniboost;
  if (text == "legacy") return Pipeline::kLegacy;
  throw Error(ErrorCode::kInvalidConfig,
              "unknown pipeline '" + std::string(text) + "'");
}

void validate_config(const SimConfig& c) {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidConfig, what);
  };
  if (c.n_requests < 0) fail("n_requests must be >= 0");
  if (c.candidates_per_request == 0) fail("candidates_per_request must be >= 1");
  if (c.k == 0) fail("k must be >= 1");
  if (c.control_tick <= 0) fail("control_tick must be >= 1");
  if (c.content_mix.empty()) fail("content_mix is empty");
  double total = 0.0;
  for (const auto& [type, p] : c.content_mix) {
    if (!(p >= 0.0)) fail("negative proportion for " + to_string(type));
    if (!c.score_model.contains(type)) {
      fail("no score model for " + to_string(type));
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) fail("content_mix must sum to 1");
  for (const auto& [type, ln] : c.score_model) {
    if (!(ln.sigma >= 0.0) || !std::isfinite(ln.mu)) {
      fail("bad log-normal for " + to_string(type));
    }
  }
  for (const auto& rule : c.tag_rules) {
    if (rule.tag.empty()) fail("tag rule without tag");
    if (!(rule.probability >= 0.0 && rule.probability <= 1.0)) {
      fail("tag probability outside [0, 1]");
    }
    if (!(rule.raw_scale >= 0.0)) fail("tag raw_scale must be >= 0");
  }
  const auto& m = c.outcome_model;
  if (!(m.value_scale > 0.0) || !(m.calibration_exponent > 0.0)) {
    fail("outcome value_scale and calibration_exponent must be positive");
  }
  if (!(m.completed_duration_mean > 0.0 && m.skipped_duration_mean > 0.0)) {
    fail("duration means must be positive");
  }
  if (!(m.buy_rate >= 0.0 && m.buy_rate <= 1.0)) fail("buy_rate outside [0, 1]");
  if (!(c.alignment.half_life > 0.0)) fail("half_life must be positive");
}

SimConfig default_sim_config(std::uint64_t seed) {
  SimConfig c;
  c.seed = seed;
  c.content_mix = {{ContentType::organic(), 0.80},
                   {ContentType::ad(), 0.15},
                   {ContentType::cold_start(), 0.05}};
  c.score_model = {{ContentType::organic(), {std::log(0.20), 0.6}},
                   {ContentType::ad(), {std::log(0.08), 0.6}},
                   {ContentType::cold_start(), {std::log(0.15), 0.7}}};
  return c;
}

BlendRequest generate_request(const SimConfig& config, Rng& rng, Timestamp t) {
  std::vector<ContentType> types;
  std::vector<double> weights;
  for (const auto& [type, p] : config.content_mix) {
    types.push_back(type);
    weights.push_back(p);
  }
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());

  BlendRequest request;
  request.request_id = "r" + std::to_string(t);
  request.k = config.k;
  request.candidates.reserve(config.candidates_per_request);
  for (std::size_t i = 0; i < config.candidates_per_request; ++i) {
    Candidate c;
    c.id = request.request_id + "-c" + std::to_string(i);
    c.content_type = types[pick(rng)];
    const auto& ln = config.score_model.at(c.content_type);
    c.raw_score = std::lognormal_distribution<double>(ln.mu, ln.sigma)(rng);
    for (const auto& rule : config.tag_rules) {
      if (rule.content_type && *rule.content_type != c.content_type) continue;
      if (std::bernoulli_distribution(rule.probability)(rng)) {
        c.tags.insert(rule.tag);
        c.raw_score *= rule.raw_scale;
      }
    }
    request.candidates.push_back(std::move(c));
  }
  return request;
}

BlendRequest generate_request(const SimConfig& config, Timestamp t) {
  Rng rng = stream_rng(config.seed, kRequestStream, t);
  return generate_request(config, rng, t);
}

double completion_probability(double raw, const ContentType& type,
                              const OutcomeModel& model) {
  const double value = std::max(raw * model.value_scale, 0.0);
  double p = std::clamp(std::pow(value, model.calibration_exponent), 0.0, 1.0);
  if (type.kind == ContentKind::kAd) p = std::max(p - model.ad_gap, 0.0);
  return p;
}

std::vector<Outcomes> sample_outcomes(std::span<const ScoreDecomposition> items,
                                      std::span<const ContentType> types,
                                      const OutcomeModel& model, Rng& rng) {
  if (items.size() != types.size()) {
    throw Error(ErrorCode::kInvalidRequest, "items and types differ in length");
  }
  std::vector<Outcomes> out;
  out.reserve(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    const double value = std::max(items[i].raw * model.value_scale, 0.0);
    const double p = completion_probability(items[i].raw, types[i], model);
    Outcomes o;
    o.effective_completion = std::bernoulli_distribution(p)(rng) ? 1.0 : 0.0;
    const double mean = o.effective_completion > 0.0
                            ? model.completed_duration_mean
                            : model.skipped_duration_mean;
    o.play_duration = std::exponential_distribution<double>(1.0 / mean)(rng);
    auto draw = [&](const Logistic& l) {
      return std::bernoulli_distribution(sigmoid(l.intercept + l.slope * value))(
                 rng)
                 ? 1.0
                 : 0.0;
    };
    o.click = draw(model.click);
    o.interaction = draw(model.interaction);
    o.slide = draw(model.slide);
    o.buy = std::bernoulli_distribution(model.buy_rate)(rng) ? 1.0 : 0.0;
    out.push_back(o);
  }
  return out;
}

double valued_score(const Outcomes& o) {
  return 1.0 * o.click + 2.0 * o.interaction + 0.5 * o.effective_completion;
}

Simulation::Simulation(SimConfig config, SimHooks hooks)
    : config_(std::move(config)),
      hooks_(std::move(hooks)),
      registry_(config_.plans),
      controller_(config_.controller, config_.plan_controllers) {
  validate_config(config_);
  run_.config = config_;
  bootstrap();
  for (const auto& [type, p] : config_.content_mix) type_counts_[to_string(type)] = 0;
  for (const auto& plan : registry_.plans()) plan_counts_[plan.plan_id] = 0;
}

void Simulation::bootstrap() {
  const std::size_t k = std::min(config_.k, config_.candidates_per_request);
  std::int64_t requests = config_.alignment.bootstrap_requests;
  if (requests <= 0) {
    requests = static_cast<std::int64_t>(config_.alignment.min_bootstrap / k) + 1;
  }
  std::vector<AnchorSample> samples;
  std::vector<double> raws;
  for (std::int64_t b = 0; b < requests; ++b) {
    Rng rng = stream_rng(config_.seed, kBootstrapRequestStream, b);
    BlendRequest req = generate_request(config_, rng, -(b + 1));
    std::vector<ScoreDecomposition> ranked;
    std::vector<ContentType> types;
    for (const auto& c : req.candidates) {
      raws.push_back(c.raw_score);
      ScoreDecomposition d;
      d.candidate_id = c.id;
      d.raw = c.raw_score;
      d.final_score = c.raw_score;
      ranked.push_back(std::move(d));
    }
    std::sort(ranked.begin(), ranked.end(), ranks_before);
    ranked.resize(k);
    for (const auto& d : ranked) {
      auto it = std::find_if(req.candidates.begin(), req.candidates.end(),
                             [&](const Candidate& c) { return c.id == d.candidate_id; });
      types.push_back(it->content_type);
    }
    Rng out_rng = stream_rng(config_.seed, kBootstrapOutcomeStream, b);
    const auto outcomes =
        sample_outcomes(ranked, types, config_.outcome_model, out_rng);
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      samples.push_back({ranked[i].raw, outcomes[i].effective_completion});
    }
  }
  if (config_.alignment.initial) {
    params_ = *config_.alignment.initial;
    validate_alignment(params_);
  } else {
    AlignmentOptions opts;
    opts.min_bootstrap = config_.alignment.min_bootstrap;
    params_ = bootstrap_alignment(samples, config_.alignment.half_life, opts, 0);
  }
  const auto p99_at = raws.begin() + static_cast<std::ptrdiff_t>(
                                         0.99 * static_cast<double>(raws.size() - 1));
  std::nth_element(raws.begin(), p99_at, raws.end());

  TrackerOptions opts;
  opts.window_length = config_.control_tick;
  opts.layout = make_layout(*p99_at, params_.mu_anchor);
  opts.retain_log = false;
  tracker_.emplace(std::move(opts));
  for (const auto& plan : registry_.plans()) tracker_->declare_plan(plan.plan_id);
}

void Simulation::replace_registry(PlanRegistry registry) {
  for (const auto& plan : registry.plans()) {
    tracker_->declare_plan(plan.plan_id);
    plan_counts_.try_emplace(plan.plan_id, 0);
  }
  registry_ = std::move(registry);
}

void Simulation::step() {
  const Timestamp t = next_++;
  const BlendRequest request = generate_request(config_, t);
  BlendDecision decision = config_.pipeline == Pipeline::kUniboost
                               ? blend(request, registry_, params_)
                               : legacy_blend(request, registry_, params_);

  std::unordered_map<std::string_view, const Candidate*> by_id;
  by_id.reserve(request.candidates.size());
  for (const auto& c : request.candidates) by_id.emplace(c.id, &c);

  const std::size_t k = decision.exposed_k;
  std::vector<ContentType> types;
  types.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    types.push_back(by_id.at(decision.ranked[i].candidate_id)->content_type);
  }
  Rng out_rng = stream_rng(config_.seed, kOutcomeStream, t);
  const auto outcomes =
      sample_outcomes(std::span(decision.ranked.data(), k), types,
                      config_.outcome_model, out_rng);

  double request_score = 0.0;
  for (std::size_t i = 0; i < decision.ranked.size(); ++i) {
    const bool exposed = i < k;
    if (!exposed && !config_.retain.log_unexposed) continue;
    const auto& d = decision.ranked[i];
    const Candidate& c = *by_id.at(d.candidate_id);

    ExposureEvent e;
    e.request_id = decision.request_id;
    e.timestamp = t;
    e.candidate_id = d.candidate_id;
    e.content_type = c.content_type;
    e.tags = c.tags;
    e.decomposition = d;
    e.exposed = exposed;
    if (exposed) {
      e.position = static_cast<int>(i);
      e.outcomes = outcomes[i];
    }
    tracker_->record(e);

    if (exposed) {
      const Outcomes& o = outcomes[i];
      auto& s = run_.summary;
      ++s.vv;
      if (o.play_duration > kValuedPlaySeconds) ++s.valued_vv;
      s.duration += o.play_duration;
      s.valued_score += valued_score(o);
      request_score += valued_score(o);
      const double ratio = boost_ratio_of(d);
      ratio_sum_ += ratio;
      window_ratio_sum_ += ratio;
      const std::string type_name = to_string(c.content_type);
      ++type_counts_[type_name];
      ++window_type_counts_[type_name];
      for (const auto& plan : registry_.plans()) {
        if (plan_applies(plan, c)) ++plan_counts_[plan.plan_id];
      }
      window_samples_.push_back({d.raw, o.effective_completion});
      window_exposures_.push_back(e);
    }
    if (hooks_.on_event) hooks_.on_event(e);
    if (config_.retain.events) run_.event_log.push_back(std::move(e));
  }
  run_.request_valued_score.push_back(request_score);
  if (hooks_.on_decision) hooks_.on_decision(decision);
  if (config_.retain.decisions) run_.decisions.push_back(std::move(decision));

  if (next_ % config_.control_tick == 0) control_tick();
}

void Simulation::control_tick() {
  const WindowId window_id = tracker_->window_of(next_ - 1);
  const TimeRange window = tracker_->window_range(window_id);

  auto result = controller_.tick(window_exposures_, registry_, window);
  last_outputs_ = result.outputs;
  if (!result.outputs.empty()) {
    registry_ = apply_controller_outputs(registry_, result.outputs);
  }
  run_.controller_trace.insert(run_.controller_trace.end(),
                               result.trace.begin(), result.trace.end());

  if (config_.alignment.near_line_updates) {
    AlignmentOptions opts;
    opts.min_bootstrap = config_.alignment.min_bootstrap;
    params_ = update_alignment(params_, window_samples_, opts, next_);
  }

  TickReport report;
  report.tick = controller_.ticks() - 1;
  report.window = window;
  report.registry_version = registry_.version();
  const auto exposures = static_cast<std::int64_t>(window_exposures_.size());
  for (const auto& plan : registry_.plans()) {
    std::int64_t members = 0;
    for (const auto& e : window_exposures_) {
      if (selector_matches(plan.selector, e.content_type, e.tags)) ++members;
    }
    report.plan_shares[plan.plan_id] =
        exposures > 0 ? static_cast<double>(members) / static_cast<double>(exposures)
                      : 0.0;
    report.plan_biases[plan.plan_id] = plan.bias;
  }
  report.type_shares = shares_of(window_type_counts_, exposures);
  report.boost_ratio =
      exposures > 0 ? window_ratio_sum_ / static_cast<double>(exposures) : 0.0;

  const auto aligned = tracker_->histogram(Stage::aligned(), window_id);
  const auto final_h = tracker_->histogram(Stage::final_score(), window_id);
  if (!reference_aligned_ && aligned.total > 0) {
    reference_aligned_ = aligned;
    reference_final_ = final_h;
  }
  if (reference_aligned_ && aligned.total > 0) {
    report.drift_aligned = drift_score(*reference_aligned_, aligned);
    report.drift_final = drift_score(*reference_final_, final_h);
  }

  if (hooks_.on_tick) hooks_.on_tick(report);
  run_.ticks.push_back(std::move(report));

  window_exposures_.clear();
  window_samples_.clear();
  window_ratio_sum_ = 0.0;
  window_type_counts_.clear();
}

SimRun Simulation::finish() && {
  auto& s = run_.summary;
  s.requests = next_;
  s.type_shares = shares_of(type_counts_, s.vv);
  s.plan_shares = shares_of(plan_counts_, s.vv);
  s.boost_ratio = s.vv > 0 ? ratio_sum_ / static_cast<double>(s.vv) : 0.0;
  s.final_alignment = params_;
  run_.final_registry = registry_;
  return std::move(run_);
}

SimRun run(const SimConfig& config, const SimHooks& hooks) {
  Simulation sim(config, hooks);
  while (!sim.done()) sim.step();
  return std::move(sim).finish();
}

namespace {

std::optional<double> relative_delta(double a, double b) {
  if (a == 0.0) {
    if (b == 0.0) return 0.0;
    return std::nullopt;
  }
  return (b - a) / std::abs(a);
}

}  // namespace

AbReport ab_compare(const SimRun& run_a, const SimRun& run_b) {
  const auto& ca = run_a.config;
  const auto& cb = run_b.config;
  if (ca.seed != cb.seed || ca.n_requests != cb.n_requests || ca.k != cb.k) {
    throw Error(ErrorCode::kConfigMismatch,
                "A/B arms must share seed, n_requests and k");
  }
  AbReport r;
  r.a = run_a.summary;
  r.b = run_b.summary;
  auto& d = r.relative_deltas;
  d["vv"] = relative_delta(static_cast<double>(r.a.vv), static_cast<double>(r.b.vv));
  d["valued_vv"] = relative_delta(static_cast<double>(r.a.valued_vv),
                                  static_cast<double>(r.b.valued_vv));
  d["duration"] = relative_delta(r.a.duration, r.b.duration);
  d["valued_score"] = relative_delta(r.a.valued_score, r.b.valued_score);
  d["boost_ratio"] = relative_delta(r.a.boost_ratio, r.b.boost_ratio);
  std::set<std::string> types;
  for (const auto& [t, share] : r.a.type_shares) types.insert(t);
  for (const auto& [t, share] : r.b.type_shares) types.insert(t);
  for (const auto& t : types) {
    const double sa = r.a.type_shares.contains(t) ? r.a.type_shares.at(t) : 0.0;
    const double sb = r.b.type_shares.contains(t) ? r.b.type_shares.at(t) : 0.0;
    d["share:" + t] = relative_delta(sa, sb);
  }
  if (r.a.boost_ratio > 0.0) {
    r.boost_ratio_reduction = 1.0 - r.b.boost_ratio / r.a.boost_ratio;
  }

  const auto& va = run_a.request_valued_score;
  const auto& vb = run_b.request_valued_score;
  const std::size_t n = std::min(va.size(), vb.size());
  if (n > 0) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += vb[i] - va[i];
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = vb[i] - va[i] - mean;
      ss += x * x;
    }
    r.paired_valued_score_mean = mean;
    r.paired_valued_score_stderr =
        n > 1 ? std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n))
              : 0.0;
  }
  return r;
}

AbReport ab_compare(const SimConfig& config_a, const SimConfig& config_b) {
  if (config_a.seed != config_b.seed || config_a.n_requests != config_b.n_requests ||
      config_a.k != config_b.k) {
    throw Error(ErrorCode::kConfigMismatch,
                "A/B arms must share seed, n_requests and k");
  }
  auto lean = [](SimConfig c) {
    c.retain = {false, false, false};
    return c;
  };
  return ab_compare(run(lean(config_a)), run(lean(config_b)));
}

LegacyTuning tune_legacy_weight(SimConfig legacy, const std::string& plan_id,
                                double target_share, double tolerance) {
  legacy.pipeline = Pipeline::kLegacy;
  legacy.retain = {false, false, false};
  Plan plan = legacy.plans.at(plan_id);

  LegacyTuning best;
  double best_gap = std::numeric_limits<double>::infinity();
  auto evaluate = [&](double weight) {
    plan.weight = weight;
    SimConfig c = legacy;
    c.plans = legacy.plans.with_plan(plan);
    const SimRun r = run(c);
    const double share = r.summary.plan_shares.at(plan_id);
    ++best.evaluations;
    if (std::abs(share - target_share) < best_gap) {
      best_gap = std::abs(share - target_share);
      best.config = c;
      best.weight = weight;
      best.share = share;
    }
    return share;
  };

  double lo = 0.0;
  if (evaluate(lo) >= target_share || best_gap <= tolerance) return best;
  double hi = 1.0;
  while (evaluate(hi) < target_share && best_gap > tolerance) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) return best;
  }
  for (int i = 0; i < 40 && best_gap > tolerance; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (evaluate(mid) < target_share) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return best;
}

}  // namespace uniboost
