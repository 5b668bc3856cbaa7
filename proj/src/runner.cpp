#include "crowdtrack/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "crowdtrack/error.hpp"

namespace crowdtrack {

namespace {

constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;

void score(ScenarioRun& run) {
  run.metrics = evaluate(run.gt, run.pred);
}

}  // namespace

ScenarioRun run_scenario(const ScenarioSpec& spec, const TrackerConfig& config, bool keep_logs) {
  const GroundTruth gt = generate(spec);
  const std::uint64_t det_seed = mix_seed(spec.seed, config.seed);
  SyntheticPropagator synthetic(gt, config.propagator, mix_seed(det_seed, kNoiseStream));
  RecordingPropagator recorder(synthetic);
  Propagator& backend = keep_logs ? static_cast<Propagator&>(recorder) : synthetic;
  Tracker tracker(config, backend, keep_logs);

  ScenarioRun run;
  run.id = spec.name;
  run.family = spec.family;
  std::chrono::steady_clock::duration spent{};
  for (FrameIndex f = 0; f < gt.frame_count(); ++f) {
    std::vector<Detection> dets = simulate_detections(gt, spec.detector, f, det_seed);
    const auto t0 = std::chrono::steady_clock::now();
    tracker.step(f, dets);
    spent += std::chrono::steady_clock::now() - t0;
    if (!dets.empty()) run.detections[f] = std::move(dets);
  }
  run.wall_seconds = std::chrono::duration<double>(spent).count();
  run.gt = gt.trajectories();
  run.pred = tracker.output();
  score(run);

  if (!spec.exits.empty()) {
    const auto matches = frame_matches(run.gt, run.pred);
    for (const ExitEvent& e : spec.exits) {
      if (e.reentry >= gt.frame_count()) continue;
      run.frame_outs.push_back({e.actor, e.exit, e.reentry, same_id_after_reentry(matches, e.actor + 1, e.exit, e.reentry)});
    }
  }
  if (keep_logs) {
    run.decisions = tracker.decisions();
    run.snapshots = tracker.snapshots();
    run.observations = recorder.records();
  }
  return run;
}

ScenarioRun run_replay(const std::vector<ObservationRecord>& observations, const DetectionFrames& detections,
                       const std::optional<TrajectorySet>& gt, const TrackerConfig& config, int width,
                       int height) {
  ReplayPropagator replay(observations, width, height);
  RecordingPropagator recorder(replay);
  Tracker tracker(config, recorder, true);
  FrameIndex last = -1;
  for (const ObservationRecord& r : observations) last = std::max(last, r.frame);
  if (!detections.empty()) last = std::max(last, detections.rbegin()->first);
  if (gt) {
    for (const auto& [id, boxes] : *gt) {
      if (!boxes.empty()) last = std::max(last, boxes.rbegin()->first);
    }
  }
  ScenarioRun run;
  run.id = "replay";
  run.family = "replay";
  run.detections = detections;
  const std::vector<Detection> none;
  const auto t0 = std::chrono::steady_clock::now();
  for (FrameIndex f = 0; f <= last; ++f) {
    auto it = detections.find(f);
    tracker.step(f, it == detections.end() ? none : it->second);
  }
  run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  run.pred = tracker.output();
  if (gt) {
    run.gt = *gt;
    score(run);
  }
  run.decisions = tracker.decisions();
  run.snapshots = tracker.snapshots();
  run.observations = recorder.records();
  return run;
}

std::vector<ScenarioRun> run_suite(const std::vector<ScenarioSpec>& specs, const TrackerConfig& config,
                                   unsigned workers, bool keep_logs) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, std::max<std::size_t>(1, specs.size()));
  std::vector<ScenarioRun> runs(specs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t k = next++; k < specs.size(); k = next++) {
      try {
        runs[k] = run_scenario(specs[k], config, keep_logs);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::sort(runs.begin(), runs.end(), [](const ScenarioRun& a, const ScenarioRun& b) { return a.id < b.id; });
  return runs;
}

std::map<std::string, SummaryCell> summarize(const std::vector<ScenarioRun>& runs) {
  std::map<std::string, SummaryCell> out;
  auto add = [&out](const std::string& key, const MetricReport& m) {
    SummaryCell& c = out[key];
    c.hota += m.hota;
    c.idf1 += m.idf1;
    c.id_switches += m.id_switches;
    ++c.scenarios;
  };
  for (const ScenarioRun& r : runs) {
    add("ALL", r.metrics);
    add(r.family, r.metrics);
  }
  for (auto& [key, c] : out) {
    c.hota /= c.scenarios;
    c.idf1 /= c.scenarios;
  }
  return out;
}

std::vector<std::pair<std::string, TrackerConfig>> ablation_layout(const std::string& layout,
                                                                   const TrackerConfig& base) {
  auto with = [&base](bool daqr, bool hcoi, bool stage2, bool stage3) {
    TrackerConfig c = base;
    c.daqr = daqr;
    c.hcoi = hcoi;
    c.stage2 = stage2;
    c.stage3 = stage3;
    return c;
  };
  std::vector<std::pair<std::string, TrackerConfig>> rows;
  if (layout == "modules" || layout == "all") {
    rows.emplace_back("baseline", with(false, false, false, false));
    rows.emplace_back("DA-QR", with(true, false, false, false));
    rows.emplace_back("H-CoI", with(false, true, false, false));
    rows.emplace_back("SA-OA", with(false, false, true, true));
    rows.emplace_back("DA-QR+H-CoI", with(true, true, false, false));
    rows.emplace_back("DA-QR+H-CoI+SA-OA", with(true, true, true, true));
  }
  if (layout == "stages" || layout == "all") {
    rows.emplace_back("stage1", with(base.daqr, base.hcoi, false, false));
    rows.emplace_back("stage1+2", with(base.daqr, base.hcoi, true, false));
    rows.emplace_back("stage1+3", with(base.daqr, base.hcoi, false, true));
    rows.emplace_back("stage1+2+3", with(base.daqr, base.hcoi, true, true));
  }
  if (rows.empty()) throw Error(fmt::format("unknown ablation layout `{}` (modules, stages, all)", layout));
  return rows;
}

std::string format_table(const std::vector<AblationRow>& rows, const std::string& first_column) {
  std::vector<std::string> groups{"ALL"};
  for (const AblationRow& r : rows) {
    for (const auto& [key, cell] : r.summary) {
      if (std::find(groups.begin(), groups.end(), key) == groups.end()) groups.push_back(key);
    }
  }
  std::size_t label_width = first_column.size();
  for (const AblationRow& r : rows) label_width = std::max(label_width, r.label.size());

  std::string out = fmt::format("{:<{}}", first_column, label_width);
  for (const std::string& g : groups) out += fmt::format(" | {:^24}", g);
  out += '\n';
  out += fmt::format("{:<{}}", "", label_width);
  for (std::size_t g = 0; g < groups.size(); ++g) out += fmt::format(" | {:>7} {:>7} {:>8}", "HOTA", "IDF1", "IDSW");
  out += '\n';
  out += std::string(label_width, '-');
  for (std::size_t g = 0; g < groups.size(); ++g) out += "-+-" + std::string(24, '-');
  out += '\n';
  for (const AblationRow& r : rows) {
    out += fmt::format("{:<{}}", r.label, label_width);
    for (const std::string& g : groups) {
      auto it = r.summary.find(g);
      if (it == r.summary.end()) {
        out += fmt::format(" | {:>24}", "-");
      } else {
        out += fmt::format(" | {:>7.4f} {:>7.4f} {:>8}", it->second.hota, it->second.idf1, it->second.id_switches);
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace crowdtrack
