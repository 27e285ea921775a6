#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "uniboost/attribution.hpp"
#include "uniboost/error.hpp"
#include "uniboost/serialization.hpp"
#include "uniboost/service.hpp"
#include "uniboost/sim_io.hpp"
#include "uniboost/traffic_sim.hpp"

namespace uniboost {
namespace {

namespace fs = std::filesystem;

/// Numbers in tables are rendered exactly as in the JSON artifacts.
std::string num(const Json& value) { return value.dump(); }

class Table {
 public:
  explicit Table(std::vector<std::string> header) { rows_.push_back(std::move(header)); }
  void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

  void render(std::ostream& out) const {
    std::vector<std::size_t> widths;
    for (const auto& row : rows_) {
      widths.resize(std::max(widths.size(), row.size()));
      for (std::size_t i = 0; i < row.size(); ++i) {
        widths[i] = std::max(widths[i], row[i].size());
      }
    }
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      for (std::size_t i = 0; i < rows_[r].size(); ++i) {
        out << (i ? "  " : "") << std::left << std::setw(static_cast<int>(widths[i]))
            << rows_[r][i];
      }
      out << '\n';
      if (r == 0) {
        std::size_t total = 0;
        for (auto w : widths) total += w + 2;
        out << std::string(total > 2 ? total - 2 : 0, '-') << '\n';
      }
    }
  }

 private:
  std::vector<std::vector<std::string>> rows_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  out << text;
}

Json stamped(Json doc) {
  doc["schema_version"] = kSchemaVersion;
  return doc;
}

void summary_table(std::ostream& out, const Json& summary) {
  Table t({"metric", "value"});
  for (const char* key : {"requests", "vv", "valued_vv", "duration", "valued_score",
                          "boost_ratio"}) {
    t.add({key, num(summary.at(key))});
  }
  for (const auto& [type, share] : summary.at("type_shares").items()) {
    t.add({"type_share:" + type, num(share)});
  }
  for (const auto& [plan, share] : summary.at("plan_shares").items()) {
    t.add({"plan_share:" + plan, num(share)});
  }
  t.add({"mu_score", num(summary.at("final_alignment").at("mu_score"))});
  t.add({"mu_anchor", num(summary.at("final_alignment").at("mu_anchor"))});
  t.render(out);
}

int cmd_simulate(const fs::path& config_path, std::optional<std::uint64_t> seed,
                 std::optional<std::int64_t> steps, const fs::path& out_dir,
                 std::ostream& out) {
  SimConfig config = load_sim_config(config_path);
  if (seed) config.seed = *seed;
  if (steps) config.n_requests = *steps;
  validate_config(config);

  fs::create_directories(out_dir);
  std::ofstream events(out_dir / "events.jsonl", std::ios::trunc | std::ios::binary);
  std::ofstream decisions(out_dir / "decisions.jsonl", std::ios::trunc | std::ios::binary);
  // Stream artifacts through hooks instead of holding them in memory.
  SimHooks hooks;
  hooks.on_event = [&](const ExposureEvent& e) { events << Json(e).dump() << '\n'; };
  hooks.on_decision = [&](const BlendDecision& d) { decisions << Json(d).dump() << '\n'; };
  config.retain.events = false;
  config.retain.decisions = false;
  const SimRun result = run(config, hooks);

  const Json summary = result.summary;
  write_json_file(out_dir / "summary.json",
                  stamped(Json{{"config", result.config},
                               {"summary", summary},
                               {"ticks", result.ticks},
                               {"controller_trace", result.controller_trace}}));
  write_json_file(out_dir / "plans.json", stamped(Json(result.final_registry)));
  summary_table(out, summary);
  return 0;
}

int cmd_ab(const fs::path& a_path, const fs::path& b_path, const fs::path& out_dir,
           std::ostream& out) {
  const AbReport report = ab_compare(load_sim_config(a_path), load_sim_config(b_path));
  const Json doc = stamped(Json(report));
  fs::create_directories(out_dir);
  write_json_file(out_dir / "ab.json", doc);

  Table t({"metric", "a", "b", "relative_delta"});
  const auto& a = doc.at("a");
  const auto& b = doc.at("b");
  for (const auto& [key, delta] : doc.at("relative_deltas").items()) {
    if (key.rfind("share:", 0) == 0) {
      const std::string type = key.substr(6);
      t.add({key, num(a.at("type_shares").value(type, Json(0.0))),
             num(b.at("type_shares").value(type, Json(0.0))), num(delta)});
    } else {
      t.add({key, num(a.at(key)), num(b.at(key)), num(delta)});
    }
  }
  t.render(out);
  out << "boost_ratio_reduction " << num(doc.at("boost_ratio_reduction")) << '\n';
  out << "paired_valued_score_mean " << num(doc.at("paired_valued_score_mean"))
      << " stderr " << num(doc.at("paired_valued_score_stderr")) << '\n';
  return 0;
}

std::vector<BlendDecision> load_decisions(const fs::path& events_path,
                                          const std::optional<fs::path>& decisions_path,
                                          std::vector<ExposureEvent>* events_out) {
  auto events = read_events_file(events_path);
  std::vector<BlendDecision> decisions = decisions_path
                                             ? read_decisions_file(*decisions_path)
                                             : decisions_from_events(events);
  if (events_out) *events_out = std::move(events);
  return decisions;
}

std::optional<PlanRegistry> load_plans(const std::optional<fs::path>& path) {
  if (!path) return std::nullopt;
  return read_json_file(*path).get<PlanRegistry>();
}

void emit(const Json& doc, const std::optional<fs::path>& out_dir, const std::string& name,
          const std::string& format, std::ostream& out,
          const std::function<void()>& table) {
  if (out_dir) {
    fs::create_directories(*out_dir);
    write_json_file(*out_dir / name, doc);
  }
  if (format == "json") {
    out << doc.dump(2) << '\n';
  } else {
    table();
  }
}

int cmd_replay(const fs::path& events_path, const std::optional<fs::path>& decisions_path,
               const std::string& plan_id, const std::optional<fs::path>& plans_path,
               const std::optional<fs::path>& out_dir, const std::string& format,
               std::ostream& out) {
  const auto decisions = load_decisions(events_path, decisions_path, nullptr);
  std::set<std::string> known = plans_in(decisions);
  if (auto plans = load_plans(plans_path)) {
    for (const auto& p : plans->plans()) known.insert(p.plan_id);
  }
  const ReplayResult r = counterfactual_replay(decisions, plan_id, known);
  const Json doc = stamped(Json{{"plan_id", plan_id},
                                {"decisions", decisions.size()},
                                {"vv_lift", r.vv_lift},
                                {"cost", r.cost},
                                {"roi_vv", real_or_null(roi(r.vv_lift, r.cost).value_or(
                                               std::numeric_limits<double>::infinity()))}});
  emit(doc, out_dir, "replay.json", format, out, [&] {
    Table t({"plan_id", "decisions", "vv_lift", "cost", "roi_vv"});
    t.add({plan_id, num(doc["decisions"]), num(doc["vv_lift"]), num(doc["cost"]),
           num(doc["roi_vv"])});
    t.render(out);
  });
  return 0;
}

Json report_json(const PlanReport& r) {
  return Json{{"plan_id", r.plan_id},
              {"window", r.window},
              {"cost", r.cost},
              {"vv_lift", r.vv_lift},
              {"boost_spend", r.boost_spend},
              {"exposure_share", r.exposure_share},
              {"roi_vv", r.roi_vv ? Json(*r.roi_vv) : Json(nullptr)}};
}

int cmd_report(const fs::path& events_path, const std::optional<fs::path>& decisions_path,
               std::int64_t window, std::int64_t window_length,
               const std::optional<fs::path>& plans_path,
               const std::optional<fs::path>& out_dir, const std::string& format,
               std::ostream& out) {
  std::vector<ExposureEvent> events;
  const auto decisions = load_decisions(events_path, decisions_path, &events);
  // Selectors are needed for exposure shares; simulate writes plans.json
  // next to the event log.
  std::optional<fs::path> registry_path = plans_path;
  if (!registry_path && fs::exists(events_path.parent_path() / "plans.json")) {
    registry_path = events_path.parent_path() / "plans.json";
  }
  if (!registry_path) {
    throw Error(ErrorCode::kInvalidConfig,
                "report needs --plans (no plans.json beside the event log)");
  }
  const PlanRegistry registry = *load_plans(registry_path);
  const TimeRange range{window * window_length, (window + 1) * window_length};
  const auto reports = rank_by_roi(plan_reports(events, decisions, registry, range));
  Json rows = Json::array();
  for (const auto& r : reports) rows.push_back(report_json(r));
  const Json doc = stamped(Json{{"window", window},
                                {"window_length", window_length},
                                {"range", range},
                                {"reports", rows}});
  emit(doc, out_dir, "report.json", format, out, [&] {
    Table t({"plan_id", "vv_lift", "cost", "roi_vv", "boost_spend", "exposure_share"});
    for (const auto& row : rows) {
      t.add({row["plan_id"].get<std::string>(), num(row["vv_lift"]), num(row["cost"]),
             num(row["roi_vv"]), num(row["boost_spend"]), num(row["exposure_share"])});
    }
    t.render(out);
  });
  return 0;
}

int cmd_anchor(const fs::path& events_path, std::vector<std::string> metrics,
               std::size_t bins, const std::optional<fs::path>& out_dir,
               const std::string& format, std::ostream& out) {
  const auto events = read_events_file(events_path);
  if (metrics.empty()) {
    for (auto m : kOutcomeMetrics) metrics.emplace_back(m);
  }
  std::vector<CalibrationCurve> curves;
  for (const auto& m : metrics) curves.push_back(calibration_curve(events, m, bins));
  curves = rank_anchor_candidates(std::move(curves));

  Json ranking = Json::array();
  std::ostringstream csv;
  csv << "metric,bin,n,score_lo,score_hi,mean_score,scaled_score,mean_outcome,"
         "calibration_error\n";
  for (const auto& c : curves) {
    Json bins_json = Json::array();
    for (std::size_t b = 0; b < c.bins.size(); ++b) {
      const auto& bin = c.bins[b];
      bins_json.push_back(Json{{"n", bin.n},
                               {"score_lo", bin.score_lo},
                               {"score_hi", bin.score_hi},
                               {"mean_score", bin.mean_score},
                               {"mean_outcome", bin.mean_outcome},
                               {"calibration_error", c.calibration_errors[b]}});
      csv << c.metric << ',' << b << ',' << bin.n << ',' << num(bin.score_lo) << ','
          << num(bin.score_hi) << ',' << num(bin.mean_score) << ','
          << num(c.scale * bin.mean_score) << ',' << num(bin.mean_outcome) << ','
          << num(c.calibration_errors[b]) << '\n';
    }
    ranking.push_back(Json{{"metric", c.metric},
                           {"stability", real_or_null(c.stability)},
                           {"scale", c.scale},
                           {"bins", bins_json}});
  }
  const Json doc = stamped(Json{{"bins", bins}, {"ranking", ranking}});
  if (out_dir) {
    fs::create_directories(*out_dir);
    write_text(*out_dir / "calibration.csv", csv.str());
  }
  emit(doc, out_dir, "anchor.json", format, out, [&] {
    Table t({"rank", "metric", "stability", "scale"});
    for (std::size_t i = 0; i < ranking.size(); ++i) {
      t.add({std::to_string(i + 1), ranking[i]["metric"].get<std::string>(),
             num(ranking[i]["stability"]), num(ranking[i]["scale"])});
    }
    t.render(out);
  });
  return 0;
}

int cmd_serve(std::optional<int> port, const std::optional<fs::path>& config_path,
              std::optional<fs::path> data_dir, std::ostream& out) {
  if (!port) {
    const char* env = std::getenv("UNIBOOST_PORT");
    port = env ? std::atoi(env) : 8080;
  }
  if (!data_dir) {
    if (const char* env = std::getenv("UNIBOOST_DATA_DIR")) data_dir = env;
  }
  ServiceConfig config;
  if (config_path) config = service_config_from_json(read_json_file(*config_path));
  config.data_dir = data_dir;
  Service service(std::move(config));
  service.start_live();
  out << "listening on 0.0.0.0:" << *port << " mode " << to_string(service.mode())
      << std::endl;
  if (!service.listen("0.0.0.0", *port)) {
    throw Error(ErrorCode::kInvalidConfig, "cannot listen on port " + std::to_string(*port));
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Blending-stage traffic allocation toolkit", "uniboost"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "Run the traffic simulator");
  fs::path sim_config, sim_out;
  std::optional<std::uint64_t> sim_seed;
  std::optional<std::int64_t> sim_steps;
  sim->add_option("--config", sim_config, "Simulator config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  sim->add_option("--seed", sim_seed, "Override the config seed");
  sim->add_option("--steps", sim_steps, "Override the number of requests")
      ->check(CLI::NonNegativeNumber);
  sim->add_option("--out", sim_out, "Output directory")->required();

  auto* ab = app.add_subcommand("ab", "Compare two simulator configs on shared traffic");
  fs::path ab_a, ab_b, ab_out;
  ab->add_option("--config-a", ab_a)->required()->check(CLI::ExistingFile);
  ab->add_option("--config-b", ab_b)->required()->check(CLI::ExistingFile);
  ab->add_option("--out", ab_out, "Output directory")->required();

  std::string format = "table";
  auto add_format = [&](CLI::App* sub) {
    sub->add_option("--format", format, "stdout format")
        ->check(CLI::IsMember({"table", "json"}));
  };

  auto* rp = app.add_subcommand("replay", "Counterfactual replay without one plan");
  fs::path rp_events;
  std::optional<fs::path> rp_decisions, rp_plans, rp_out;
  std::string rp_plan;
  rp->add_option("--events", rp_events)->required()->check(CLI::ExistingFile);
  rp->add_option("--decisions", rp_decisions)->check(CLI::ExistingFile);
  rp->add_option("--plan", rp_plan)->required();
  rp->add_option("--plans", rp_plans, "Registry JSON naming known plans")
      ->check(CLI::ExistingFile);
  rp->add_option("--out", rp_out, "Directory for replay.json");
  add_format(rp);

  auto* rep = app.add_subcommand("report", "Per-plan ROI report for one window");
  fs::path rep_events;
  std::optional<fs::path> rep_decisions, rep_plans, rep_out;
  std::int64_t rep_window = 0;
  std::int64_t rep_length = 500;
  rep->add_option("--events", rep_events)->required()->check(CLI::ExistingFile);
  rep->add_option("--decisions", rep_decisions)->check(CLI::ExistingFile);
  rep->add_option("--window", rep_window)->required()->check(CLI::NonNegativeNumber);
  rep->add_option("--window-length", rep_length)->check(CLI::PositiveNumber);
  rep->add_option("--plans", rep_plans, "Registry JSON (plans.json)")
      ->check(CLI::ExistingFile);
  rep->add_option("--out", rep_out, "Directory for report.json");
  add_format(rep);

  auto* an = app.add_subcommand("anchor", "Rank outcome metrics as anchor candidates");
  fs::path an_events;
  std::vector<std::string> an_metrics;
  std::size_t an_bins = kDefaultCalibrationBins;
  std::optional<fs::path> an_out;
  an->add_option("--events", an_events)->required()->check(CLI::ExistingFile);
  an->add_option("--metrics", an_metrics, "Metrics to compare (default: all six)")
      ->delimiter(',');
  an->add_option("--bins", an_bins)->check(CLI::PositiveNumber);
  an->add_option("--out", an_out, "Directory for anchor.json and calibration.csv");
  add_format(an);

  auto* sv = app.add_subcommand("serve", "Run the HTTP service");
  std::optional<int> sv_port;
  std::optional<fs::path> sv_config, sv_data;
  sv->add_option("--port", sv_port, "Port (env UNIBOOST_PORT)");
  sv->add_option("--config", sv_config, "Service config JSON")->check(CLI::ExistingFile);
  sv->add_option("--data-dir", sv_data, "Persistence directory (env UNIBOOST_DATA_DIR)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (*sim) return cmd_simulate(sim_config, sim_seed, sim_steps, sim_out, out);
    if (*ab) return cmd_ab(ab_a, ab_b, ab_out, out);
    if (*rp) {
      return cmd_replay(rp_events, rp_decisions, rp_plan, rp_plans, rp_out, format, out);
    }
    if (*rep) {
      return cmd_report(rep_events, rep_decisions, rep_window, rep_length, rep_plans,
                        rep_out, format, out);
    }
    if (*an) return cmd_anchor(an_events, an_metrics, an_bins, an_out, format, out);
    if (*sv) return cmd_serve(sv_port, sv_config, sv_data, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const Json::exception& e) {
    err << "error: MalformedLog: " << e.what() << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace uniboost
