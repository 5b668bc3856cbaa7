#pragma once

#include <cstdint>
#include <map>
#include <optional>

#include "crowdtrack/trajectory.hpp"

namespace crowdtrack {

struct MetricReport {
  double hota = 1.0;
  double idf1 = 1.0;
  std::int64_t id_switches = 0;
};

/// Identity F1 under the best global one-to-one id mapping; a frame counts as
/// an identity hit when box IoU >= iou_gate. Both sets empty -> 1.
double idf1(const TrajectorySet& gt, const TrajectorySet& pred, double iou_gate = 0.5);

/// Frame-wise matched prediction ids: frame -> (gt id -> pred id), using a
/// per-frame Hungarian on 1 - IoU with pairs below iou_gate excluded.
std::map<FrameIndex, std::map<TrackId, TrackId>> frame_matches(const TrajectorySet& gt,
                                                              const TrajectorySet& pred,
                                                              double iou_gate = 0.5);

/// Times a GT identity is matched to a prediction id different from the one
/// it was last matched to.
std::int64_t id_switches(const TrajectorySet& gt, const TrajectorySet& pred, double iou_gate = 0.5);

struct HotaBreakdown {
  double alpha = 0.0;
  double det_a = 0.0;
  double ass_a = 0.0;
  double hota = 0.0;
};

/// HOTA averaged over alpha = 0.05, 0.10, ..., 0.95. Both sets empty -> 1.
double hota(const TrajectorySet& gt, const TrajectorySet& pred);
std::map<int, HotaBreakdown> hota_by_alpha(const TrajectorySet& gt, const TrajectorySet& pred);

MetricReport evaluate(const TrajectorySet& gt, const TrajectorySet& pred);

/// Whether `gt_id` carries the same prediction id right after re-entry as it
/// had right before leaving: compares the last match in frames [0, exit) with
/// the first match in [reentry, reentry + window). nullopt when either side
/// has no match.
std::optional<bool> same_id_after_reentry(const std::map<FrameIndex, std::map<TrackId, TrackId>>& matches,
                                          TrackId gt_id, FrameIndex exit, FrameIndex reentry,
                                          int window = 10);

}  // namespace crowdtrack
