// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any fails. Usage: acceptance [artifact-dir]

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "cli.hpp"
#include "support/oracles.hpp"
#include "uniboost/alignment.hpp"
#include "uniboost/attribution.hpp"
#include "uniboost/blender.hpp"
#include "uniboost/scenarios.hpp"
#include "uniboost/serialization.hpp"
#include "uniboost/service.hpp"
#include "uniboost/sim_io.hpp"
#include "uniboost/traffic_sim.hpp"

namespace fs = std::filesystem;
using namespace uniboost;

namespace {

// Pinned thresholds.
constexpr int kOrderBatches = 10000;
constexpr int kMeanSamples = 100000;
constexpr double kMeanRelTol = 1e-9;
constexpr std::int64_t kAdditivityEvents = 100000;
constexpr int kReplayInstances = 10000;
constexpr double kReplayCostTol = 1e-12;
constexpr double kAdditivitySeconds = 120.0;
constexpr int kReductionBatches = 1000;
constexpr int kSeeds = 20;
constexpr int kSeedsRequired = 19;
constexpr double kTargetShare = 0.10;
constexpr double kShareTol = 0.02;
constexpr int kTailTicks = 300;
constexpr double kPidSecondsPerSeed = 60.0;
constexpr double kMinInflationReduction = 0.50;
constexpr double kTypeShareTol = 0.02;
constexpr std::int64_t kAnchorExposures = 100000;
constexpr int kHammerBlends = 10000;
constexpr int kHammerClients = 4;
constexpr int kHammerWriters = 2;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::vector<std::size_t> stable_argsort_desc(const std::vector<double>& xs) {
  std::vector<std::size_t> idx(xs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] > xs[b]; });
  return idx;
}

Outcome order_preservation() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> size(1, 50);
  std::lognormal_distribution<double> raw(-1.0, 1.5);
  std::uniform_real_distribution<double> mu_score(1e-6, 10.0);
  std::uniform_real_distribution<double> mu_anchor(1e-6, 1.0);
  std::bernoulli_distribution tie(0.2);
  int failures = 0;
  for (int b = 0; b < kOrderBatches; ++b) {
    AlignmentParams p;
    p.mu_score = mu_score(rng);
    p.mu_anchor = mu_anchor(rng);
    std::vector<double> raws;
    const int n = size(rng);
    for (int i = 0; i < n; ++i) {
      raws.push_back(!raws.empty() && tie(rng) ? raws.back() : raw(rng));
    }
    std::vector<double> aligned;
    for (double r : raws) aligned.push_back(align_score(r, p));
    if (stable_argsort_desc(raws) != stable_argsort_desc(aligned)) ++failures;
  }
  return {failures == 0, std::to_string(failures) + " of " +
                             std::to_string(kOrderBatches) + " batches reordered"};
}

Outcome mean_restoration() {
  std::mt19937_64 rng(202);
  std::lognormal_distribution<double> raw(-1.2, 0.8);
  std::vector<AnchorSample> samples(kMeanSamples);
  std::vector<double> outcomes;
  for (auto& s : samples) {
    s.raw_score = raw(rng);
    s.anchor_outcome = std::bernoulli_distribution(std::min(1.0, s.raw_score))(rng) ? 1.0 : 0.0;
    outcomes.push_back(s.anchor_outcome);
  }
  const AlignmentParams p = bootstrap_alignment(samples, kDefaultHalfLife);
  std::vector<double> aligned;
  for (const auto& s : samples) aligned.push_back(align_score(s.raw_score, p));
  const long double target = testing::mean_ld(outcomes);
  const long double got = testing::mean_ld(aligned);
  const double rel = static_cast<double>(std::fabs(got - target) / target);
  char buf[128];
  std::snprintf(buf, sizeof buf, "mean aligned %.12f vs anchor mean %.12f, rel err %.3g",
                static_cast<double>(got), static_cast<double>(target), rel);
  return {rel <= kMeanRelTol, buf};
}

Outcome additivity() {
  const auto t0 = Clock::now();
  SimConfig c = wasteful_plan_scenario(7, kAdditivityEvents / 20);
  c.retain = {true, true, true};
  const SimRun r = run(c);
  std::int64_t checked = 0;
  std::int64_t broken = 0;
  for (const auto& d : r.decisions) {
    for (const auto& s : d.ranked) {
      ++checked;
      if (!reconstructs(s)) ++broken;
    }
  }
  for (const auto& e : r.event_log) {
    if (!reconstructs(e.decomposition)) ++broken;
  }

  std::mt19937_64 rng(303);
  std::int64_t mismatches = 0;
  std::int64_t comparisons = 0;
  for (int i = 0; i < kReplayInstances; ++i) {
    const auto inst = testing::random_instance(rng, 6, 3);
    const std::vector<testing::ReplayInstance> insts = {inst};
    const std::vector<BlendDecision> ds = {blend(inst.request, inst.registry, inst.params)};
    std::set<std::string> known;
    for (const auto& p : inst.registry.plans()) known.insert(p.plan_id);
    for (const auto& id : known) {
      const auto got = counterfactual_replay(ds, id, known);
      const auto want = testing::reblend_oracle(insts, id);
      ++comparisons;
      if (got.vv_lift != want.vv_lift || std::fabs(got.cost - want.cost) > kReplayCostTol) {
        ++mismatches;
      }
    }
  }
  const double secs = seconds_since(t0);
  std::ostringstream os;
  os << r.event_log.size() << " events, " << checked << " decompositions, " << broken
     << " not reconstructing; replay " << mismatches << " mismatches over " << comparisons
     << " (instance, plan) pairs; " << secs << " s";
  return {checked >= kAdditivityEvents &&
              static_cast<std::int64_t>(r.event_log.size()) >= kAdditivityEvents &&
              broken == 0 && mismatches == 0 && secs <= kAdditivitySeconds,
          os.str()};
}

std::vector<std::string> order_of(const BlendDecision& d) {
  std::vector<std::string> ids;
  for (const auto& s : d.ranked) ids.push_back(s.candidate_id);
  return ids;
}

// Ranking by an explicit key with the blender's tie rule.
std::vector<std::string> order_by(const BlendRequest& req,
                                  const std::function<double(const Candidate&)>& key) {
  std::vector<std::pair<double, std::string>> keyed;
  for (const auto& c : req.candidates) keyed.emplace_back(key(c), c.id);
  std::sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::string> ids;
  for (const auto& k : keyed) ids.push_back(k.second);
  return ids;
}

Outcome reduction_properties() {
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<int> size(2, 30);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<ContentType> types = {ContentType::organic(), ContentType::ad(),
                                          ContentType::cold_start()};
  AlignmentParams params;
  params.mu_score = 0.4;
  params.mu_anchor = 0.25;
  int pid_fail = 0;
  int boost_fail = 0;
  for (int b = 0; b < 2 * kReductionBatches; ++b) {
    const bool pid = b < kReductionBatches;
    BlendRequest req;
    req.request_id = "b" + std::to_string(b);
    const int n = size(rng);
    req.k = static_cast<std::size_t>(std::max(1, n / 3));
    for (int i = 0; i < n; ++i) {
      Candidate c;
      c.id = "c" + std::to_string(i);
      c.content_type = types[static_cast<std::size_t>(i) % types.size()];
      c.raw_score = unit(rng);
      req.candidates.push_back(c);
    }
    Plan p;
    p.plan_id = "p";
    p.selector.content_type = types[static_cast<std::size_t>(b) % types.size()];
    if (pid) {
      p.mode = PlanMode::kPidDelivered;
      p.target_share = 0.1;
      p.weight = 0.0;
      p.bias = unit(rng) * 0.5;
    } else {
      p.weight = unit(rng) * 3.0;
      p.bias = 0.0;
    }
    const auto got = order_of(blend(req, PlanRegistry({p}), params));
    const auto want = order_by(req, [&](const Candidate& c) {
      const double a = c.raw_score / params.mu_score * params.mu_anchor;
      const double member = c.content_type == *p.selector.content_type ? 1.0 : 0.0;
      return pid ? a + p.bias * member : a * (1.0 + p.weight * member);
    });
    if (got != want) ++(pid ? pid_fail : boost_fail);
  }
  std::ostringstream os;
  os << "pid-mode " << pid_fail << " / boost-mode " << boost_fail << " mismatched of "
     << kReductionBatches << " batches each";
  return {pid_fail == 0 && boost_fail == 0, os.str()};
}

Outcome pid_convergence() {
  int ok = 0;
  double worst_secs = 0.0;
  std::ostringstream shares;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const auto t0 = Clock::now();
    const SimRun r = run(delivery_scenario(static_cast<std::uint64_t>(seed)));
    const double secs = seconds_since(t0);
    worst_secs = std::max(worst_secs, secs);
    const std::size_t n = r.ticks.size();
    double tail = 0.0;
    const std::size_t from = n > kTailTicks ? n - kTailTicks : 0;
    for (std::size_t i = from; i < n; ++i) tail += r.ticks[i].plan_shares.at("ad_delivery");
    tail /= static_cast<double>(n - from);
    const bool good = std::fabs(tail - kTargetShare) <= kShareTol && secs <= kPidSecondsPerSeed;
    ok += good;
    shares << (seed > 1 ? " " : "") << tail;
  }
  std::ostringstream os;
  os << ok << "/" << kSeeds << " seeds within tolerance, slowest " << worst_secs
     << " s; tail shares " << shares.str();
  return {ok >= kSeedsRequired, os.str()};
}

Outcome inflation_reduction() {
  int ok = 0;
  double min_reduction = 1.0;
  double max_gap = 0.0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const auto out = run_inflation(static_cast<std::uint64_t>(seed));
    const auto& u = out.uniboost.summary;
    const auto& l = out.legacy.summary;
    const double reduction = l.boost_ratio > 0.0 ? 1.0 - u.boost_ratio / l.boost_ratio : 0.0;
    std::set<std::string> types;
    for (const auto& [t, s] : u.type_shares) types.insert(t);
    for (const auto& [t, s] : l.type_shares) types.insert(t);
    double gap = 0.0;
    for (const auto& t : types) {
      const double a = u.type_shares.contains(t) ? u.type_shares.at(t) : 0.0;
      const double b = l.type_shares.contains(t) ? l.type_shares.at(t) : 0.0;
      gap = std::max(gap, std::fabs(a - b));
    }
    min_reduction = std::min(min_reduction, reduction);
    max_gap = std::max(max_gap, gap);
    ok += reduction >= kMinInflationReduction && gap <= kTypeShareTol;
  }
  std::ostringstream os;
  os << ok << "/" << kSeeds << " seeds; min boost-ratio reduction " << min_reduction
     << ", max type-share gap " << max_gap;
  return {ok >= kSeedsRequired, os.str()};
}

Outcome ablation() {
  int ok = 0;
  double min_delta = std::numeric_limits<double>::infinity();
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const SimConfig with = wasteful_plan_scenario(static_cast<std::uint64_t>(seed));
    const SimRun r = run(with);
    const TimeRange all{0, with.n_requests};
    const auto ranked =
        rank_by_roi(plan_reports(r.event_log, r.decisions, with.plans, all));
    const bool lowest = !ranked.empty() && ranked.front().plan_id == kWastefulPlanId &&
                        ranked.front().roi_vv.has_value() &&
                        (ranked.size() < 2 || !ranked[1].roi_vv ||
                         *ranked[1].roi_vv > *ranked.front().roi_vv);

    SimConfig without = with;
    without.plans = with.plans.without_plan(kWastefulPlanId);
    without.retain = {false, false, false};
    const SimRun r2 = run(without);
    const double delta = r2.summary.valued_score - r.summary.valued_score;
    min_delta = std::min(min_delta, delta);
    ok += lowest && delta > 0.0;
  }
  std::ostringstream os;
  os << ok << "/" << kSeeds << " seeds rank the wasteful plan strictly lowest with a "
     << "valued_score gain on removal; min gain " << min_delta;
  return {ok >= kSeedsRequired, os.str()};
}

Outcome anchor_selection(const fs::path& artifacts) {
  int ok = 0;
  std::ofstream csv(artifacts / "calibration.csv", std::ios::trunc);
  csv << "seed,metric,rank,stability,bin,n,mean_score,scaled_score,mean_outcome,"
         "calibration_error\n";
  std::map<std::string, int> first_counts;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const SimRun r = run(anchor_sweep_scenario(static_cast<std::uint64_t>(seed),
                                               kAnchorExposures));
    std::vector<CalibrationCurve> curves;
    for (auto m : kOutcomeMetrics) {
      curves.push_back(calibration_curve(r.event_log, std::string(m),
                                         kDefaultCalibrationBins));
    }
    curves = rank_anchor_candidates(std::move(curves));
    std::set<std::string> bottom;
    for (std::size_t i = curves.size() - 3; i < curves.size(); ++i) bottom.insert(curves[i].metric);
    ++first_counts[curves.front().metric];
    ok += curves.front().metric == "effective_completion" &&
          bottom == std::set<std::string>{"buy", "interaction", "slide"};
    for (std::size_t rank = 0; rank < curves.size(); ++rank) {
      const auto& c = curves[rank];
      for (std::size_t b = 0; b < c.bins.size(); ++b) {
        csv << seed << ',' << c.metric << ',' << rank + 1 << ',' << c.stability << ',' << b
            << ',' << c.bins[b].n << ',' << c.bins[b].mean_score << ','
            << c.scale * c.bins[b].mean_score << ',' << c.bins[b].mean_outcome << ','
            << c.calibration_errors[b] << '\n';
      }
    }
  }
  std::ostringstream os;
  os << ok << "/" << kSeeds << " seeds; first place:";
  for (const auto& [m, n] : first_counts) os << ' ' << m << '=' << n;
  os << "; curves in " << (artifacts / "calibration.csv").string();
  return {ok >= kSeedsRequired, os.str()};
}

Outcome service_hammer() {
  ServiceConfig config;
  Plan ad;
  ad.plan_id = "ad";
  ad.selector.content_type = ContentType::ad();
  ad.weight = 0.5;
  Plan cold;
  cold.plan_id = "cold";
  cold.selector.content_type = ContentType::cold_start();
  cold.weight = 1.0;
  config.plans = PlanRegistry({ad, cold});
  config.alignment.mu_score = 0.3;
  config.alignment.mu_anchor = 0.2;
  config.alignment.sample_count = 1000;
  config.window_length = 1000;
  Service service(config);
  const int port = service.start_http("127.0.0.1", 0);
  if (port <= 0) return {false, "could not bind"};

  const SimConfig traffic = default_sim_config(55);
  std::mutex mu;
  std::map<std::string, BlendRequest> sent;
  std::map<std::string, BlendDecision> answered;
  std::atomic<int> next{0};
  std::atomic<int> http_errors{0};
  std::atomic<bool> done{false};
  std::atomic<int> puts{0};
  std::atomic<int> conflicts{0};

  std::vector<std::thread> writers;
  for (int w = 0; w < kHammerWriters; ++w) {
    writers.emplace_back([&, w] {
      httplib::Client client("127.0.0.1", port);
      std::mt19937_64 rng(900 + static_cast<std::uint64_t>(w));
      std::uniform_real_distribution<double> weight(0.0, 3.0);
      while (!done.load()) {
        const auto current = Json::parse(client.Get("/plans")->body);
        Plan p = w == 0 ? ad : cold;
        p.weight = weight(rng);
        Json body = p;
        body["expected_version"] = current["version"];
        auto res = client.Put(("/plans/" + p.plan_id).c_str(), body.dump(), "application/json");
        if (!res) {
          ++http_errors;
        } else if (res->status == 200) {
          ++puts;
        } else if (res->status == 409) {
          ++conflicts;
        } else {
          ++http_errors;
        }
        std::this_thread::sleep_for(std::chrono::microseconds(500));
      }
    });
  }
  std::vector<std::thread> clients;
  for (int c = 0; c < kHammerClients; ++c) {
    clients.emplace_back([&] {
      httplib::Client client("127.0.0.1", port);
      client.set_keep_alive(true);
      for (int i = next++; i < kHammerBlends; i = next++) {
        BlendRequest req = generate_request(traffic, i);
        auto res = client.Post("/blend", Json(req).dump(), "application/json");
        if (!res || res->status != 200) {
          ++http_errors;
          continue;
        }
        auto decision = Json::parse(res->body).get<BlendDecision>();
        std::lock_guard lock(mu);
        sent[req.request_id] = std::move(req);
        answered[decision.request_id] = std::move(decision);
      }
    });
  }
  for (auto& t : clients) t.join();
  done = true;
  for (auto& t : writers) t.join();

  const std::size_t log_before = service.log_size();
  httplib::Client client("127.0.0.1", port);
  const Json whatif_body{{"request", sent.begin()->second},
                         {"overrides", {{{"plan_id", "ad"}, {"bias", 0.3}}}}};
  auto wres = client.Post("/whatif", whatif_body.dump(), "application/json");
  const bool whatif_ok = wres && wres->status == 200 && service.log_size() == log_before;

  std::int64_t mismatches = 0;
  std::set<std::uint64_t> versions;
  const auto logged = service.decisions();
  for (const auto& d : logged) {
    versions.insert(d.registry_version);
    const auto registry = service.registry_at(d.registry_version);
    auto it = sent.find(d.request_id);
    if (!registry || it == sent.end()) {
      ++mismatches;
      continue;
    }
    const BlendDecision again = blend(it->second, *registry, d.alignment_snapshot);
    const auto served = answered.find(d.request_id);
    if (!(again == d) || served == answered.end() || !(served->second == d) ||
        !(d.alignment_snapshot == config.alignment)) {
      ++mismatches;
    }
    for (const auto& s : d.ranked) mismatches += !reconstructs(s);
  }
  service.stop();
  std::ostringstream os;
  os << logged.size() << " decisions across " << versions.size() << " registry versions ("
     << puts << " PUTs, " << conflicts << " 409s), " << mismatches << " mismatches, "
     << http_errors << " HTTP errors; whatif log length " << log_before << " -> "
     << service.log_size();
  return {static_cast<int>(logged.size()) == kHammerBlends && mismatches == 0 &&
              http_errors == 0 && whatif_ok && versions.size() > 1,
          os.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(const fs::path& artifacts) {
  const fs::path dir = artifacts / "determinism";
  fs::create_directories(dir);
  write_json_file(dir / "sim.json", Json(wasteful_plan_scenario(17, 2000)));
  std::ostringstream sink;
  for (const char* arm : {"a", "b"}) {
    const std::string config = (dir / "sim.json").string();
    const std::string out = (dir / arm).string();
    const char* argv[] = {"uniboost", "simulate", "--config", config.c_str(),
                          "--out",    out.c_str()};
    if (run_cli(6, argv, sink, sink) != 0) return {false, "simulate failed: " + sink.str()};
  }
  const std::string a = slurp(dir / "a" / "events.jsonl");
  const std::string b = slurp(dir / "b" / "events.jsonl");
  std::ostringstream os;
  os << "events.jsonl " << a.size() << " bytes, identical=" << (a == b ? "yes" : "no");
  return {!a.empty() && a == b, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path artifacts = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance-artifacts");
  fs::create_directories(artifacts);

  struct Criterion {
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {"order_preservation", order_preservation},
      {"mean_restoration", mean_restoration},
      {"additivity_attribution", additivity},
      {"reduction_properties", reduction_properties},
      {"pid_convergence", pid_convergence},
      {"inflation_reduction", inflation_reduction},
      {"ablation_wasteful_plan", ablation},
      {"anchor_selection", [&] { return anchor_selection(artifacts); }},
      {"service_snapshot_isolation", service_hammer},
      {"determinism", [&] { return determinism(artifacts); }},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << " ["
              << seconds_since(t0) << " s]" << std::endl;
  }
  std::cout << (failed == 0 ? "ALL PASS" : std::to_string(failed) + " FAILED") << std::endl;
  return failed == 0 ? 0 : 1;
}
