#include "driftwatch/checkpoint.hpp"
#include "driftwatch/config.hpp"
#include "driftwatch/ingest.hpp"
#include "driftwatch/metrics.hpp"
#include "driftwatch/pipeline.hpp"
#include "driftwatch/scenario_export.hpp"
#include "driftwatch/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace driftwatch;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBelowThreshold = 1;
constexpr int kExitFatal = 2;

RuntimeConfig build_config(const std::string& config_path,
                           const std::vector<std::string>& overrides) {
  RuntimeConfig cfg;
  if (!config_path.empty()) cfg = load_config_file(config_path);
  apply_env_overrides(cfg);
  for (const auto& kv : overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

int run_detect(const std::string& input, const std::string& config_path,
               const std::string& out_dir, const std::string& ckpt_in,
               const std::string& ckpt_out, const std::vector<std::string>& overrides) {
  RuntimeConfig cfg = build_config(config_path, overrides);
  fs::create_directories(out_dir);

  std::optional<Engine> engine;
  if (!ckpt_in.empty())
    engine.emplace(load_checkpoint(ckpt_in, cfg));
  else
    engine.emplace(cfg);

  std::ifstream file;
  std::istream* in = &std::cin;
  if (input != "-") {
    file.open(input);
    if (!file) {
      std::cerr << "detect: cannot open input " << input << "\n";
      return kExitFatal;
    }
    in = &file;
  }
  ParseResult parsed = parse_stream(*in, engine->entities(), cfg);

  std::ofstream errs(fs::path(out_dir) / "parse_errors.jsonl");
  for (const auto& err : parsed.errors) {
    json line = {{"line", err.line_no},
                 {"code", std::string(to_string(err.code))},
                 {"detail", err.detail}};
    errs << line.dump() << '\n';
  }

  std::ofstream alerts(fs::path(out_dir) / "alerts.jsonl");
  std::ofstream stats(fs::path(out_dir) / "stats.jsonl");

  if (parsed.events.empty() && engine->next_window() == 0) {
    if (!ckpt_out.empty()) save_checkpoint(*engine, ckpt_out);
    std::cout << "detect: no events, zero alerts\n";
    return kExitOk;
  }

  if (engine->next_window() == 0) {
    std::int64_t origin = parsed.events.front().timestamp_ns;
    for (const auto& e : parsed.events) origin = std::min(origin, e.timestamp_ns);
    engine->set_origin_ns(origin);
  }

  std::map<std::int64_t, std::vector<Event>> by_window;
  std::size_t stale = 0;
  for (const auto& e : parsed.events) {
    auto idx = window_index_of(e.timestamp_ns, engine->origin_ns(), cfg.window_ns);
    if (idx < engine->next_window()) {
      ++stale;
      continue;
    }
    by_window[idx].push_back(e);
  }
  if (stale > 0)
    std::cerr << "detect: " << stale << " event(s) precede the resumed window; skipped\n";

  std::size_t alert_count = 0;
  if (!by_window.empty()) {
    std::int64_t last = by_window.rbegin()->first;
    for (std::int64_t idx = engine->next_window(); idx <= last; ++idx) {
      std::vector<Event> events;
      if (auto it = by_window.find(idx); it != by_window.end()) events = std::move(it->second);
      WindowReport report = engine->advance_window(idx, std::move(events));

      if (report.alert) {
        std::string stem = "scenario_w" + std::to_string(idx);
        std::string scenario_json =
            scenario_to_json(report.alert->scenario, engine->entities());
        std::ofstream(fs::path(out_dir) / (stem + ".json")) << scenario_json;
        std::ofstream(fs::path(out_dir) / (stem + ".dot"))
            << scenario_json_to_dot(scenario_json, /*merge_names=*/true);
        alerts << alert_to_jsonl(*report.alert, engine->entities(), stem + ".json") << '\n';
        ++alert_count;
      }

      json stat = {{"window_index", report.window_index},
                   {"raw_events", report.raw_events},
                   {"rejected", report.rejected},
                   {"whitelist_dropped", report.whitelist_dropped},
                   {"cpr_merged", report.cpr_merged},
                   {"events", report.events},
                   {"mean_rl", report.mean_rl},
                   {"sigma", report.sigma},
                   {"anomalous", report.anomalous.size()},
                   {"suspicious", report.suspicious.size()},
                   {"rehearsal", report.rehearsal.size()},
                   {"malicious", report.malicious.size()},
                   {"pool_size", report.pool_size},
                   {"trained", report.trained},
                   {"train_aborted", report.train_aborted},
                   {"timings",
                    {{"preprocess_ms", report.timings.preprocess_ms},
                     {"detect_ms", report.timings.detect_ms},
                     {"investigate_ms", report.timings.investigate_ms},
                     {"update_ms", report.timings.update_ms}}}};
      stats << stat.dump() << '\n';
    }
  }

  if (!ckpt_out.empty()) save_checkpoint(*engine, ckpt_out);
  std::cout << "detect: " << alert_count << " alert(s), " << engine->next_window()
            << " window(s) processed, " << parsed.errors.size() << " parse error(s)\n";
  return kExitOk;
}

int run_synth(const std::string& spec_path, const std::string& out_dir) {
  ScenarioSpec spec;
  if (!spec_path.empty()) spec = ScenarioSpec::from_file(spec_path);
  SynthOutput out = generate(spec);
  fs::create_directories(out_dir);
  std::ofstream(fs::path(out_dir) / "stream.jsonl") << out.stream_jsonl;
  std::ofstream(fs::path(out_dir) / "labels.jsonl") << out.labels_jsonl;
  std::cout << "synth: " << out.event_count << " events (" << out.attack_event_count
            << " attack), " << out.attack_node_uuids.size() << " attack nodes\n";
  return kExitOk;
}

int run_eval(const std::string& alerts_path, const std::string& labels_path,
             const std::string& level, int graph_windows, bool as_json, double min_precision,
             double min_recall, double min_f1) {
  GroundTruth truth = load_labels(labels_path);

  std::ifstream in(alerts_path);
  if (!in) {
    std::cerr << "eval: cannot open alerts " << alerts_path << "\n";
    return kExitFatal;
  }
  std::set<std::int64_t> windows;
  std::set<std::string> nodes;
  std::string line;
  fs::path alerts_dir = fs::path(alerts_path).parent_path();
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw EvalError("eval: bad alert line");
    if (j.contains("window_ids"))
      for (const auto& w : j["window_ids"]) windows.insert(w.get<std::int64_t>());
    else
      windows.insert(j["window_index"].get<std::int64_t>());
    if (level == "node") {
      bool loaded = false;
      if (j.contains("scenario_file")) {
        std::ifstream sin(alerts_dir / j["scenario_file"].get<std::string>());
        if (sin) {
          json sj = json::parse(sin, nullptr, false);
          if (!sj.is_discarded()) {
            for (const auto& n : sj["nodes"]) nodes.insert(n["id"].get<std::string>());
            loaded = true;
          }
        }
      }
      if (!loaded && j.contains("malicious_nodes"))
        for (const auto& n : j["malicious_nodes"]) nodes.insert(n.get<std::string>());
    }
  }

  MetricReport report;
  if (level == "window") report = score_windows(windows, truth);
  else if (level == "graph") report = score_graphs(windows, truth, graph_windows);
  else if (level == "node") report = score_nodes(nodes, truth);
  else {
    std::cerr << "eval: level must be window|graph|node\n";
    return kExitFatal;
  }

  if (as_json)
    std::cout << report.json() << "\n";
  else
    std::cout << report.text_table();

  if ((min_precision > 0 && report.precision < min_precision) ||
      (min_recall > 0 && report.recall < min_recall) || (min_f1 > 0 && report.f1 < min_f1))
    return kExitBelowThreshold;
  return kExitOk;
}

int run_checkpoint(const std::string& action, const std::string& path,
                   const std::string& config_path, const std::vector<std::string>& overrides) {
  if (action == "save") {
    RuntimeConfig cfg = build_config(config_path, overrides);
    Engine engine(cfg);
    save_checkpoint(engine, path);
    std::cout << "checkpoint: wrote fresh state to " << path << "\n";
    return kExitOk;
  }
  if (action == "load") {
    CheckpointInfo info = inspect_checkpoint(path);
    std::cout << "checkpoint: version " << info.version << ", mem=" << info.dims.mem
              << " emb=" << info.dims.emb << " time=" << info.dims.time
              << " enc=" << info.dims.enc << " neighbor_cap=" << info.dims.nbr_cap << ", "
              << info.entity_count << " entities, next window " << info.next_window << "\n";
    return kExitOk;
  }
  std::cerr << "checkpoint: action must be save|load\n";
  return kExitFatal;
}

int run_export_dot(const std::string& scenario_path, bool merge_names,
                   const std::string& out_path) {
  std::ifstream in(scenario_path);
  if (!in) {
    std::cerr << "export-dot: cannot open " << scenario_path << "\n";
    return kExitFatal;
  }
  std::stringstream buf;
  buf << in.rdbuf();
  std::string dot = scenario_json_to_dot(buf.str(), merge_names);
  if (out_path.empty())
    std::cout << dot;
  else
    std::ofstream(out_path) << dot;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"streaming provenance anomaly detection"};
  app.require_subcommand(1);

  auto* detect = app.add_subcommand("detect", "run the detection loop over a stream");
  std::string d_input, d_config, d_out = "out", d_ckpt_in, d_ckpt_out;
  std::vector<std::string> d_set;
  detect->add_option("--input", d_input, "JSONL event stream ('-' for stdin)")->required();
  detect->add_option("--config", d_config, "key=value config file");
  detect->add_option("--out", d_out, "output directory");
  detect->add_option("--checkpoint-in", d_ckpt_in, "resume from checkpoint");
  detect->add_option("--checkpoint-out", d_ckpt_out, "write checkpoint when done");
  detect->add_option("--set", d_set, "config override key=value (repeatable)");

  auto* synth = app.add_subcommand("synth", "generate a synthetic labeled stream");
  std::string s_spec, s_out = "synth-out";
  synth->add_option("--spec", s_spec, "scenario spec file (key=value)");
  synth->add_option("--out", s_out, "output directory");

  auto* eval = app.add_subcommand("eval", "score alerts against ground truth");
  std::string e_alerts, e_labels, e_level = "window";
  int e_graph_windows = 5;
  bool e_json = false;
  double e_min_p = 0, e_min_r = 0, e_min_f1 = 0;
  eval->add_option("--alerts", e_alerts, "alerts.jsonl from detect")->required();
  eval->add_option("--labels", e_labels, "labels.jsonl ground truth")->required();
  eval->add_option("--level", e_level, "window|graph|node");
  eval->add_option("--graph-windows", e_graph_windows, "windows per graph (graph level)");
  eval->add_flag("--json", e_json, "emit JSON instead of a table");
  eval->add_option("--min-precision", e_min_p, "exit 1 if precision below");
  eval->add_option("--min-recall", e_min_r, "exit 1 if recall below");
  eval->add_option("--min-f1", e_min_f1, "exit 1 if f1 below");

  auto* ckpt = app.add_subcommand("checkpoint", "persist or inspect engine state");
  std::string c_action, c_path, c_config;
  std::vector<std::string> c_set;
  ckpt->add_option("action", c_action, "save|load")->required();
  ckpt->add_option("path", c_path, "checkpoint file")->required();
  ckpt->add_option("--config", c_config, "config for save");
  ckpt->add_option("--set", c_set, "config override key=value");

  auto* exp = app.add_subcommand("export-dot", "render a scenario JSON as DOT");
  std::string x_scenario, x_out;
  bool x_merge = false;
  exp->add_option("--scenario", x_scenario, "scenario JSON file")->required();
  exp->add_flag("--merge-names", x_merge, "merge same-name nodes");
  exp->add_option("--out", x_out, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitFatal;
  }

  try {
    if (detect->parsed())
      return run_detect(d_input, d_config, d_out, d_ckpt_in, d_ckpt_out, d_set);
    if (synth->parsed()) return run_synth(s_spec, s_out);
    if (eval->parsed())
      return run_eval(e_alerts, e_labels, e_level, e_graph_windows, e_json, e_min_p, e_min_r,
                      e_min_f1);
    if (ckpt->parsed()) return run_checkpoint(c_action, c_path, c_config, c_set);
    if (exp->parsed()) return run_export_dot(x_scenario, x_merge, x_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFatal;
  }
  return kExitFatal;
}
