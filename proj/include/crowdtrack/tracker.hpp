#pragma once

#include <span>
#include <string>
#include <vector>

#include "crowdtrack/association.hpp"
#include "crowdtrack/config.hpp"
#include "crowdtrack/mask_control.hpp"
#include "crowdtrack/propagation.hpp"
#include "crowdtrack/trajectory.hpp"

namespace crowdtrack {

struct DecisionRecord {
  FrameIndex frame = 0;
  TrackId id = 0;
  MemoryDecision decision = MemoryDecision::Update;
  DecisionReason reason = DecisionReason::Default;

  friend bool operator==(const DecisionRecord&, const DecisionRecord&) = default;
};

/// `frame id decision reason`, 1-based frame.
std::string decision_line(const DecisionRecord& record);

struct FrameReport {
  FrameIndex frame = 0;
  SaOaResult association;
  MemoryUpdatePlan plan;
  std::size_t expired = 0;
};

/// Per-frame loop: expire -> propagate -> associate -> plan memory -> apply.
/// Frames must be fed in increasing order.
class Tracker {
 public:
  Tracker(const TrackerConfig& config, Propagator& propagator, bool keep_snapshots = true);

  const FrameReport& step(FrameIndex frame, std::span<const Detection> detections);

  /// Live tracks (expired ones are dropped).
  const std::vector<Track>& tracks() const { return tracks_; }
  const TrajectorySet& output() const { return output_; }
  const std::vector<DecisionRecord>& decisions() const { return decisions_; }
  const std::vector<std::string>& snapshots() const { return snapshots_; }
  const FrameReport& last_report() const { return report_; }

 private:
  bool wants_mask(const Track& track) const;

  TrackerConfig config_;
  AssociationParams assoc_;
  MaskControlParams control_;
  RetentionPolicy retention_;
  Propagator& propagator_;
  IdAllocator ids_;
  std::vector<Track> tracks_;
  TrajectorySet output_;
  std::vector<DecisionRecord> decisions_;
  std::vector<std::string> snapshots_;
  FrameReport report_;
  FrameIndex last_frame_ = -1;
  bool keep_snapshots_ = true;
};

}  // namespace crowdtrack
