#pragma once

#include <optional>
#include <string>
#include <vector>

#include "crowdtrack/config.hpp"
#include "crowdtrack/metrics.hpp"
#include "crowdtrack/mot_io.hpp"
#include "crowdtrack/propagation.hpp"
#include "crowdtrack/scenario.hpp"
#include "crowdtrack/tracker.hpp"

namespace crowdtrack {

struct FrameOutOutcome {
  int actor = 0;
  FrameIndex exit = 0;
  FrameIndex reentry = 0;
  /// nullopt: no matched prediction on one side of the gap.
  std::optional<bool> same_id;
};

struct ScenarioRun {
  std::string id;
  std::string family;
  TrajectorySet gt;
  TrajectorySet pred;
  DetectionFrames detections;
  MetricReport metrics;
  std::vector<FrameOutOutcome> frame_outs;
  std::vector<DecisionRecord> decisions;
  std::vector<std::string> snapshots;
  std::vector<ObservationRecord> observations;
  double wall_seconds = 0.0;
};

/// Simulates detections, runs the tracker over every frame and scores the
/// result. Detection sampling and propagator noise are keyed by
/// (spec.seed, config.seed).
ScenarioRun run_scenario(const ScenarioSpec& spec, const TrackerConfig& config, bool keep_logs = true);

/// Tracker over recorded observations and detections; scored when gt is given.
ScenarioRun run_replay(const std::vector<ObservationRecord>& observations, const DetectionFrames& detections,
                       const std::optional<TrajectorySet>& gt, const TrackerConfig& config, int width,
                       int height);

/// Runs the specs on `workers` threads (0: hardware concurrency); results are
/// ordered by scenario id.
std::vector<ScenarioRun> run_suite(const std::vector<ScenarioSpec>& specs, const TrackerConfig& config,
                                   unsigned workers = 0, bool keep_logs = false);

struct SummaryCell {
  double hota = 0.0;
  double idf1 = 0.0;
  std::int64_t id_switches = 0;
  int scenarios = 0;
};

/// "ALL" plus one entry per family: mean HOTA/IDF1, summed ID switches.
std::map<std::string, SummaryCell> summarize(const std::vector<ScenarioRun>& runs);

struct AblationRow {
  std::string label;
  TrackerConfig config;
  std::map<std::string, SummaryCell> summary;
};

/// Toggle layouts: "modules" (DA-QR / H-CoI / SA-OA combinations) or
/// "stages" (matching stages 2 and 3).
std::vector<std::pair<std::string, TrackerConfig>> ablation_layout(const std::string& layout,
                                                                   const TrackerConfig& base);

std::string format_table(const std::vector<AblationRow>& rows, const std::string& first_column);

}  // namespace crowdtrack
