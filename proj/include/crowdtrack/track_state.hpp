#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <string_view>

#include "crowdtrack/geometry.hpp"

namespace crowdtrack {

using TrackId = std::int64_t;
using FrameIndex = std::int32_t;

enum class TrackState { Active, Occluded, FrameOut, Expired };

std::string_view to_string(TrackState state);

/// Edges of the lifecycle graph. Self-loops on the three live states are
/// allowed (a state persisting across frames); Expired is absorbing.
bool is_allowed_transition(TrackState from, TrackState to);

struct ConfidenceStats {
  double mean = 0.0;
  double variance = 0.0;  // population variance
};

/// Sliding window over the most recent mask confidence scores.
class ConfidenceHistory {
 public:
  explicit ConfidenceHistory(std::size_t capacity = 10);

  /// Appends `score`, evicting the oldest entry when full. Throws unless 0 <= score <= 1.
  void push(double score);

  std::size_t size() const { return window_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return window_.empty(); }
  const std::deque<double>& values() const { return window_; }

  /// Throws on an empty window.
  ConfidenceStats stats() const;

 private:
  std::size_t capacity_;
  std::deque<double> window_;
};

/// One identity hypothesis. The propagator memory is keyed by `id`.
struct Track {
  TrackId id = 0;
  TrackState state = TrackState::Active;
  ConfidenceHistory history;
  FrameIndex birth_frame = 0;
  FrameIndex last_matched_frame = 0;
  BBox last_matched_det;
  double last_matched_density = 0.0;
};

void push_confidence(Track& track, double score);
ConfidenceStats confidence_stats(const Track& track);

/// Occluded iff the density at the last matched frame exceeds `delta`.
TrackState classify_unmatched(const Track& track, double delta);

/// Records a match at `frame`; re-activates Occluded/FrameOut tracks.
void mark_matched(Track& track, FrameIndex frame, const BBox& det, double density);

/// Records a miss. Classification happens once, when an Active track first
/// goes unmatched; later misses keep the cached state.
void mark_unmatched(Track& track, double delta);

/// Per-state retention: a non-Active track expires once
/// current_frame - last_matched_frame exceeds its limit.
struct RetentionPolicy {
  int ttl = 60;
  int frameout_ttl = 60;
};

/// Marks expired tracks and returns how many changed state.
std::size_t expire_tracks(std::span<Track> tracks, FrameIndex current_frame, int ttl);
std::size_t expire_tracks(std::span<Track> tracks, FrameIndex current_frame,
                          const RetentionPolicy& policy);

/// `frame id state mu var last_frame last_bbox density`; mu/var print as `-`
/// for an empty history and last_bbox as `x0,y0,x1,y1`. Frames are written 1-based.
std::string snapshot_line(FrameIndex frame, const Track& track);

}  // namespace crowdtrack
