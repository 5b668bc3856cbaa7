#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crowdtrack/association.hpp"
#include "crowdtrack/geometry.hpp"
#include "crowdtrack/trajectory.hpp"

namespace crowdtrack {

enum class ShapeKind { Rectangle, Ellipse };

/// Travel target. `speed` (px/frame) applies to the segment arriving here;
/// `hold` frames are spent at the waypoint before leaving.
struct Waypoint {
  double x = 0.0;
  double y = 0.0;
  double speed = 1.0;
  int hold = 0;
};

struct ActorSpec {
  ShapeKind shape = ShapeKind::Rectangle;
  int width = 20;
  int height = 40;
  std::vector<Waypoint> waypoints;
  bool loop = false;
};

/// Two actors converge on their common centroid, meeting at the middle frame
/// of [start, end], then return to their own paths. Simultaneous crossings
/// sharing an actor converge as one group.
struct CrossingEvent {
  int a = 0;
  int b = 1;
  FrameIndex start = 0;
  FrameIndex end = 0;

  FrameIndex peak() const { return (start + end) / 2; }
};

/// The actor leaves the view for [exit, reentry) and re-appears centered at
/// (x, y); its path continues from there, shifted.
struct ExitEvent {
  int actor = 0;
  FrameIndex exit = 0;
  FrameIndex reentry = 0;
  double x = 0.0;
  double y = 0.0;

  FrameIndex gap() const { return reentry - exit; }
};

struct DetectorModel {
  double jitter_sigma = 1.0;
  double miss_base = 0.01;
  double miss_slope = 0.1;
  /// Confidence is visibility * (1 - u) with u ~ Uniform(0, conf_spread).
  double conf_spread = 0.2;
};

struct ScenarioSpec {
  std::string name;
  std::string family;
  int width = 480;
  int height = 270;
  int fps = 25;
  int duration = 300;
  std::vector<ActorSpec> actors;
  std::vector<CrossingEvent> crossings;
  std::vector<ExitEvent> exits;
  DetectorModel detector;
  std::uint64_t seed = 1;
};

/// Throws Error naming the offending field path (e.g. `actors[2].waypoints[0].speed`).
void validate(const ScenarioSpec& spec);

struct ActorFrame {
  Mask silhouette;  // full shape clipped to the grid
  Mask visible;     // silhouette minus nearer actors
  BBox box;         // enclosing box of the silhouette (empty when off-screen)
  double visibility = 0.0;
  bool on_screen = false;
  double cx = 0.0;
  double cy = 0.0;

  friend bool operator==(const ActorFrame&, const ActorFrame&) = default;
};

class GroundTruth {
 public:
  GroundTruth() = default;
  GroundTruth(int width, int height, std::vector<std::vector<ActorFrame>> frames);

  int width() const { return width_; }
  int height() const { return height_; }
  int frame_count() const { return static_cast<int>(frames_.size()); }
  int actor_count() const { return frames_.empty() ? 0 : static_cast<int>(frames_.front().size()); }
  const ActorFrame& at(FrameIndex frame, int actor) const { return frames_[frame][actor]; }
  const std::vector<ActorFrame>& frame(FrameIndex f) const { return frames_[f]; }

  /// On-screen actors as trajectories; actor k has id k + 1.
  TrajectorySet trajectories() const;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::vector<ActorFrame>> frames_;
};

/// Deterministic rasterization; later actors are nearer the camera.
GroundTruth generate(const ScenarioSpec& spec);

/// Per on-screen actor: missed with probability miss_base + miss_slope *
/// (1 - visibility); otherwise GT box with per-edge Gaussian jitter, clipped.
std::vector<Detection> simulate_detections(const GroundTruth& gt, const DetectorModel& model,
                                           FrameIndex frame, std::uint64_t seed);

/// Twenty seeded specs: dense crossings ("basketball"), net-line clusters
/// ("volleyball") and sparse scenes with frame-outs ("soccer").
std::vector<ScenarioSpec> standard_suite(std::uint64_t seed = 2024);

/// One actor walking alone across the grid.
ScenarioSpec single_actor_scenario();
/// Two actors meet, stand almost on top of each other for 40 frames, then
/// part. The rear one is mostly hidden and rarely detected meanwhile.
ScenarioSpec crossing_scenario();
/// The standard suite plus the two small scenes above, by name.
std::vector<ScenarioSpec> builtin_scenarios(std::uint64_t seed = 2024);

ScenarioSpec load_scenario(const std::string& path);
ScenarioSpec parse_scenario(const std::string& yaml_text);
std::string scenario_to_yaml(const ScenarioSpec& spec);

/// splitmix64 finalizer; combines seeds into independent stream keys.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace crowdtrack
