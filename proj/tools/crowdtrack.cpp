#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "crowdtrack/config.hpp"
#include "crowdtrack/error.hpp"
#include "crowdtrack/metrics.hpp"
#include "crowdtrack/mot_io.hpp"
#include "crowdtrack/propagation.hpp"
#include "crowdtrack/runner.hpp"
#include "crowdtrack/scenario.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace crowdtrack;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kDataError = 2;
constexpr int kCheckFailed = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  bool out_given = false;
  bool no_daqr = false;
  bool no_hcoi = false;
  bool no_stage2 = false;
  bool no_stage3 = false;
  bool frameout_masks = false;
  bool timing = false;
  unsigned jobs = 0;
  std::string command_line;
};

TrackerConfig effective_config(const Globals& g) {
  TrackerConfig c = g.config_path.empty() ? TrackerConfig{} : load_config(g.config_path);
  if (g.seed) c.seed = *g.seed;
  if (g.no_daqr) c.daqr = false;
  if (g.no_hcoi) c.hcoi = false;
  if (g.no_stage2) c.stage2 = false;
  if (g.no_stage3) c.stage3 = false;
  if (g.frameout_masks) c.frameout_masks = true;
  validate(c);
  return c;
}

json cell_json(const SummaryCell& c) {
  return {{"hota", c.hota}, {"idf1", c.idf1}, {"id_switches", c.id_switches}, {"scenarios", c.scenarios}};
}

json summary_json(const std::map<std::string, SummaryCell>& s) {
  json out = json::object();
  for (const auto& [key, cell] : s) out[key] = cell_json(cell);
  return out;
}

json run_json(const ScenarioRun& r) {
  json j{{"family", r.family},
         {"hota", r.metrics.hota},
         {"idf1", r.metrics.idf1},
         {"id_switches", r.metrics.id_switches},
         {"tracks", r.pred.size()}};
  if (!r.frame_outs.empty()) {
    json events = json::array();
    for (const FrameOutOutcome& e : r.frame_outs) {
      events.push_back({{"actor", e.actor},
                        {"exit_frame", e.exit + 1},
                        {"reentry_frame", e.reentry + 1},
                        {"gap", e.reentry - e.exit},
                        {"same_id", e.same_id ? json(*e.same_id) : json(nullptr)}});
    }
    j["frame_outs"] = std::move(events);
  }
  return j;
}

json toggles_json(const TrackerConfig& c) {
  return {{"daqr", c.daqr}, {"hcoi", c.hcoi}, {"stage2", c.stage2}, {"stage3", c.stage3},
          {"frameout_masks", c.frameout_masks}};
}

void write_json(const fs::path& path, const json& j) { write_text_file(path.string(), j.dump(2) + "\n"); }

std::string report_text(const std::vector<ScenarioRun>& runs) {
  std::string out = fmt::format("{:<22} {:<11} {:>7} {:>7} {:>6}\n", "scenario", "family", "HOTA", "IDF1", "IDSW");
  for (const ScenarioRun& r : runs) {
    out += fmt::format("{:<22} {:<11} {:>7.4f} {:>7.4f} {:>6}\n", r.id, r.family, r.metrics.hota, r.metrics.idf1,
                       r.metrics.id_switches);
  }
  for (const auto& [key, c] : summarize(runs)) {
    out += fmt::format("{:<22} {:<11} {:>7.4f} {:>7.4f} {:>6}\n", "mean/total", key, c.hota, c.idf1, c.id_switches);
  }
  return out;
}

void write_run_files(const fs::path& dir, const ScenarioRun& r, bool scored) {
  fs::create_directories(dir);
  write_mot(r.pred, (dir / "results.txt").string());
  if (scored) write_mot(r.gt, (dir / "gt.txt").string());
  {
    std::ostringstream ss;
    write_detections(r.detections, ss);
    write_text_file((dir / "detections.txt").string(), ss.str());
  }
  {
    std::string text;
    for (const DecisionRecord& d : r.decisions) text += decision_line(d) + "\n";
    write_text_file((dir / "decisions.log").string(), text);
  }
  {
    std::string text;
    for (const std::string& s : r.snapshots) text += s + "\n";
    write_text_file((dir / "tracks.txt").string(), text);
  }
  {
    std::ostringstream ss;
    write_observations(ss, r.observations);
    write_text_file((dir / "observations.txt").string(), ss.str());
  }
}

json manifest(const Globals& g, const TrackerConfig& c, const std::string& command,
              const std::vector<std::string>& scenario_ids, const json& results) {
  return {{"command", command},
          {"arguments", g.command_line},
          {"seed", c.seed},
          {"config", serialize_config(c)},
          {"scenarios", scenario_ids},
          {"results", results}};
}

void write_timing(const fs::path& dir, const std::vector<ScenarioRun>& runs) {
  json per = json::object();
  double total = 0.0;
  for (const ScenarioRun& r : runs) {
    per[r.id] = r.wall_seconds;
    total += r.wall_seconds;
  }
  write_json(dir / "timing.json", {{"runs", per}, {"total_seconds", total}});
}

std::vector<ScenarioSpec> select_suite(const std::string& family) {
  std::vector<ScenarioSpec> suite = standard_suite();
  if (family.empty()) return suite;
  std::erase_if(suite, [&](const ScenarioSpec& s) { return s.family != family; });
  if (suite.empty()) throw UsageError(fmt::format("no scenarios in family `{}`", family));
  return suite;
}

std::pair<int, int> parse_grid(const std::string& text) {
  int w = 0;
  int h = 0;
  char x = 0;
  std::istringstream in(text);
  if (!(in >> w >> x >> h) || x != 'x' || w <= 0 || h <= 0) {
    throw UsageError(fmt::format("--grid expects WIDTHxHEIGHT, got `{}`", text));
  }
  return {w, h};
}

struct RunOptions {
  std::string scenario;
  std::string builtin;
  bool suite = false;
  std::string family;
  std::string replay;
  std::string detections;
  std::string gt;
  std::string grid;
};

int cmd_run(const Globals& g, const RunOptions& o) {
  const TrackerConfig config = effective_config(g);
  const fs::path out(g.out);
  fs::create_directories(out);
  write_text_file((out / "config.yaml").string(), serialize_config(config));
  const int sources = !o.scenario.empty() + !o.builtin.empty() + o.suite + !o.replay.empty();
  if (sources != 1) throw UsageError("run needs exactly one of --scenario, --builtin, --suite, --replay");

  std::vector<ScenarioRun> runs;
  bool scored = true;
  if (o.suite) {
    runs = run_suite(select_suite(o.family), config, g.jobs, true);
    for (const ScenarioRun& r : runs) write_run_files(out / r.id, r, true);
  } else if (!o.replay.empty()) {
    if (o.detections.empty()) throw UsageError("--replay needs --detections");
    const std::vector<ObservationRecord> obs = load_observations(o.replay);
    auto [w, h] = o.grid.empty() ? std::pair<int, int>{0, 0} : parse_grid(o.grid);
    if (o.grid.empty()) {
      w = 480;
      h = 270;
      for (const ObservationRecord& r : obs) {
        if (r.observation.mask.width() > 0) {
          w = r.observation.mask.width();
          h = r.observation.mask.height();
          break;
        }
      }
    }
    std::optional<TrajectorySet> gt;
    if (!o.gt.empty()) gt = read_mot(o.gt);
    scored = gt.has_value();
    runs.push_back(run_replay(obs, read_detections(o.detections), gt, config, w, h));
    write_run_files(out, runs.back(), scored);
  } else {
    ScenarioSpec spec;
    if (!o.scenario.empty()) {
      spec = load_scenario(o.scenario);
      if (spec.name.empty()) spec.name = fs::path(o.scenario).stem().string();
    } else {
      bool found = false;
      for (ScenarioSpec& s : builtin_scenarios()) {
        if (s.name == o.builtin) {
          spec = std::move(s);
          found = true;
        }
      }
      if (!found) throw UsageError(fmt::format("unknown builtin scenario `{}`", o.builtin));
    }
    runs.push_back(run_scenario(spec, config, true));
    write_run_files(out, runs.back(), true);
  }

  json scenarios = json::object();
  std::vector<std::string> ids;
  for (const ScenarioRun& r : runs) {
    ids.push_back(r.id);
    if (scored) scenarios[r.id] = run_json(r);
  }
  json report{{"scenarios", scenarios}};
  if (scored) report["summary"] = summary_json(summarize(runs));
  write_json(out / "report.json", report);
  if (scored) {
    const std::string text = report_text(runs);
    write_text_file((out / "report.txt").string(), text);
    std::cout << text;
  }
  write_json(out / "manifest.json", manifest(g, config, "run", ids, report));
  if (g.timing) write_timing(out, runs);
  return kOk;
}

json scenario_cells(const std::vector<ScenarioRun>& runs) {
  json out = json::object();
  for (const ScenarioRun& r : runs) out[r.id] = run_json(r);
  return out;
}

int cmd_ablate(const Globals& g, const std::string& layout, const std::string& family, bool check) {
  const TrackerConfig base = effective_config(g);
  const std::vector<ScenarioSpec> suite = select_suite(family);
  const fs::path out(g.out);
  fs::create_directories(out);

  std::vector<AblationRow> rows;
  json rows_json = json::array();
  std::vector<ScenarioRun> all_runs;
  for (auto& [label, config] : ablation_layout(layout, base)) {
    std::vector<ScenarioRun> runs = run_suite(suite, config, g.jobs, false);
    AblationRow row{label, config, summarize(runs)};
    rows_json.push_back({{"label", label},
                         {"toggles", toggles_json(config)},
                         {"summary", summary_json(row.summary)},
                         {"scenarios", scenario_cells(runs)}});
    rows.push_back(std::move(row));
    for (ScenarioRun& r : runs) {
      r.id = label + "/" + r.id;
      all_runs.push_back(std::move(r));
    }
  }
  const std::string table = format_table(rows, "configuration");
  std::vector<std::string> ids;
  for (const ScenarioSpec& s : suite) ids.push_back(s.name);
  json result{{"layout", layout}, {"rows", rows_json}};
  write_json(out / "ablation.json", result);
  write_text_file((out / "ablation.txt").string(), table);
  write_json(out / "manifest.json", manifest(g, base, "ablate", ids, result));
  if (g.timing) write_timing(out, all_runs);
  std::cout << table;

  if (check) {
    const AblationRow* baseline = nullptr;
    const AblationRow* full = nullptr;
    for (const AblationRow& r : rows) {
      if (r.label == "baseline") baseline = &r;
      if (r.label == "DA-QR+H-CoI+SA-OA") full = &r;
    }
    if (baseline == nullptr || full == nullptr) throw UsageError("--check needs the modules layout");
    const SummaryCell& b = baseline->summary.at("ALL");
    const SummaryCell& f = full->summary.at("ALL");
    const bool ok = f.id_switches <= b.id_switches && f.idf1 >= b.idf1;
    std::cout << fmt::format("check: full IDSW {} vs baseline {}, full IDF1 {:.4f} vs baseline {:.4f}: {}\n",
                             f.id_switches, b.id_switches, f.idf1, b.idf1, ok ? "ok" : "FAILED");
    if (!ok) return kCheckFailed;
  }
  return kOk;
}

std::vector<std::string> split_values(const std::string& text) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(text);
  while (std::getline(in, cell, ',')) {
    const auto b = cell.find_first_not_of(' ');
    const auto e = cell.find_last_not_of(' ');
    if (b == std::string::npos) throw UsageError("--values has an empty entry");
    out.push_back(cell.substr(b, e - b + 1));
  }
  if (out.empty()) throw UsageError("--values is empty");
  return out;
}

int cmd_sweep(const Globals& g, const std::string& param, const std::string& values, const std::string& family) {
  const TrackerConfig base = effective_config(g);
  const auto& keys = config_keys();
  if (std::find(keys.begin(), keys.end(), param) == keys.end()) {
    throw UsageError(fmt::format("unknown parameter `{}`", param));
  }
  const std::vector<ScenarioSpec> suite = select_suite(family);
  const fs::path out(g.out);
  fs::create_directories(out);
  std::vector<AblationRow> rows;
  json rows_json = json::array();
  std::vector<ScenarioRun> all_runs;
  for (const std::string& v : split_values(values)) {
    TrackerConfig config = base;
    set_config_value(config, param, v);
    validate(config);
    std::vector<ScenarioRun> runs = run_suite(suite, config, g.jobs, false);
    AblationRow row{v, config, summarize(runs)};
    rows_json.push_back({{"value", v}, {"summary", summary_json(row.summary)}, {"scenarios", scenario_cells(runs)}});
    rows.push_back(std::move(row));
    for (ScenarioRun& r : runs) {
      r.id = v + "/" + r.id;
      all_runs.push_back(std::move(r));
    }
  }
  const std::string table = format_table(rows, param);
  std::vector<std::string> ids;
  for (const ScenarioSpec& s : suite) ids.push_back(s.name);
  json result{{"param", param}, {"values", split_values(values)}, {"rows", rows_json}};
  write_json(out / "sweep.json", result);
  write_text_file((out / "sweep.txt").string(), table);
  write_json(out / "manifest.json", manifest(g, base, "sweep", ids, result));
  if (g.timing) write_timing(out, all_runs);
  std::cout << table;
  return kOk;
}

int cmd_gen_suite(const Globals& g) {
  const TrackerConfig config = effective_config(g);
  const fs::path out(g.out);
  fs::create_directories(out);
  std::string index;
  for (const ScenarioSpec& spec : standard_suite()) {
    write_text_file((out / (spec.name + ".yaml")).string(), scenario_to_yaml(spec));
    const GroundTruth gt = generate(spec);
    write_mot(gt.trajectories(), (out / (spec.name + ".gt.txt")).string());
    DetectionFrames dets;
    const std::uint64_t det_seed = mix_seed(spec.seed, config.seed);
    for (FrameIndex f = 0; f < gt.frame_count(); ++f) {
      std::vector<Detection> d = simulate_detections(gt, spec.detector, f, det_seed);
      if (!d.empty()) dets[f] = std::move(d);
    }
    std::ostringstream ss;
    write_detections(dets, ss);
    write_text_file((out / (spec.name + ".det.txt")).string(), ss.str());
    index += fmt::format("{} {} {} {}\n", spec.name, spec.family, spec.actors.size(), spec.duration);
  }
  write_text_file((out / "suite.txt").string(), index);
  std::cout << index;
  return kOk;
}

int cmd_eval(const Globals& g, const std::string& gt_path, const std::string& pred_path) {
  const TrajectorySet gt = read_mot(gt_path);
  const TrajectorySet pred = read_mot(pred_path);
  const MetricReport m = evaluate(gt, pred);
  const std::string text = fmt::format("HOTA {:.6f}\nIDF1 {:.6f}\nIDSW {}\n", m.hota, m.idf1, m.id_switches);
  std::cout << text;
  if (g.out_given) {
    fs::create_directories(g.out);
    write_json(fs::path(g.out) / "report.json",
               {{"gt", gt_path}, {"pred", pred_path}, {"hota", m.hota}, {"idf1", m.idf1}, {"id_switches", m.id_switches}});
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crowdtrack: mask-propagation tracker, crowded-scene simulator and MOT metrics"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  // The output directory is left out so reruns elsewhere produce identical manifests.
  for (int k = 1; k < argc; ++k) {
    const std::string arg = argv[k];
    if (arg == "--out") {
      ++k;
      continue;
    }
    if (arg.rfind("--out=", 0) == 0) continue;
    g.command_line += (g.command_line.empty() ? "" : " ") + arg;
  }

  app.add_option("--config", g.config_path, "Tracker config file (key: value)")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", g.seed, "Run seed (overrides the config)");
  (void)seed_opt;
  auto* out_opt = app.add_option("--out", g.out, "Output directory");
  app.add_flag("--no-daqr", g.no_daqr, "Disable density-gated reconstruction");
  app.add_flag("--no-hcoi", g.no_hcoi, "Use the variance-only skip rule");
  app.add_flag("--no-stage2", g.no_stage2, "Disable box matching for occluded tracks");
  app.add_flag("--no-stage3", g.no_stage3, "Disable box matching for frame-out tracks");
  app.add_flag("--frameout-masks", g.frameout_masks, "Propagate masks for frame-out tracks too");
  app.add_flag("--timing", g.timing, "Write per-run wall-clock to timing.json");
  app.add_option("--jobs", g.jobs, "Worker threads for suite runs (0: all cores)");

  RunOptions ro;
  auto* run = app.add_subcommand("run", "Track one scenario, the standard suite, or a replay stream");
  run->add_option("--scenario", ro.scenario, "Scenario file")->check(CLI::ExistingFile);
  run->add_option("--builtin", ro.builtin, "Built-in scenario name");
  run->add_flag("--suite", ro.suite, "Run the standard suite");
  run->add_option("--family", ro.family, "Restrict --suite to one family");
  run->add_option("--replay", ro.replay, "Observation stream")->check(CLI::ExistingFile);
  run->add_option("--detections", ro.detections, "Detections in MOT layout (with --replay)")->check(CLI::ExistingFile);
  run->add_option("--gt", ro.gt, "Ground truth in MOT layout (with --replay)")->check(CLI::ExistingFile);
  run->add_option("--grid", ro.grid, "Grid size WxH for replay");

  std::string layout = "modules";
  std::string family;
  bool check = false;
  auto* ablate = app.add_subcommand("ablate", "Toggle-combination table over the standard suite");
  ablate->add_option("--layout", layout, "modules, stages or all")->check(CLI::IsMember({"modules", "stages", "all"}));
  ablate->add_option("--family", family, "Restrict to one family");
  ablate->add_flag("--check", check, "Fail (exit 3) unless the full row beats the baseline row");

  std::string param;
  std::string values;
  auto* sweep = app.add_subcommand("sweep", "Metric table over values of one config key");
  sweep->add_option("--param", param, "Config key")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();
  sweep->add_option("--family", family, "Restrict to one family");

  auto* gen = app.add_subcommand("gen-suite", "Write the standard suite specs, ground truth and detections");

  std::string gt_path;
  std::string pred_path;
  auto* eval = app.add_subcommand("eval", "Score a MOT result file against ground truth");
  eval->add_option("--gt", gt_path, "Ground truth")->required()->check(CLI::ExistingFile);
  eval->add_option("--pred", pred_path, "Predictions")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  g.out_given = out_opt->count() > 0;

  try {
    if (*run) return cmd_run(g, ro);
    if (*ablate) return cmd_ablate(g, layout, family, check);
    if (*sweep) return cmd_sweep(g, param, values, family);
    if (*gen) return cmd_gen_suite(g);
    if (*eval) return cmd_eval(g, gt_path, pred_path);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsage;
}
