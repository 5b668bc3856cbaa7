#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "crowdtrack/geometry.hpp"
#include "crowdtrack/track_state.hpp"

namespace crowdtrack {

struct Detection {
  BBox box;
  double confidence = 1.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct MatchPair {
  TrackId track = 0;
  std::size_t detection = 0;
  int stage = 1;

  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

struct MatchResult {
  std::vector<MatchPair> pairs;
  std::vector<TrackId> unmatched_tracks;
  std::vector<std::size_t> unmatched_detections;
};

struct AssociationParams {
  double w = 0.5;
  double c_max = 0.8;
  double theta_s2 = 0.3;
  double theta_s3 = 0.3;
  int alpha_max = 150;
  double theta_new = 0.6;
  double delta = 0.6;
  bool stage2 = true;
  bool stage3 = true;
  /// Match Frame-Out tracks by propagated mask box instead of the last
  /// matched detection box (requires masks to be generated for them).
  bool frameout_masks = false;
};

/// w * (1 - iou) + (1 - w) * (1 - mu)
double stage1_cost(double iou, double mu, double w);

struct MaskCandidate {
  TrackId id = 0;
  std::optional<BBox> mask_box;  // nullopt: empty mask, row is forbidden
  double mean_score = 0.0;
};

struct BoxCandidate {
  TrackId id = 0;
  BBox box;
  FrameIndex last_matched_frame = 0;
};

/// Mask-box IoU plus mean confidence; zero IoU and cost > c_max are gated out.
MatchResult stage1_match(std::span<const MaskCandidate> tracks, std::span<const Detection> dets,
                         std::span<const std::size_t> available, const AssociationParams& params);

/// 1 - IoU against the last matched detection box, gated by IoU >= theta_s2.
MatchResult stage2_match(std::span<const BoxCandidate> tracks, std::span<const Detection> dets,
                         std::span<const std::size_t> available, const AssociationParams& params);

/// Like stage 2 with gate theta_s3, plus the temporal gate
/// current_frame - last_matched_frame <= alpha_max.
MatchResult stage3_match(std::span<const BoxCandidate> tracks, std::span<const Detection> dets,
                         std::span<const std::size_t> available, FrameIndex current_frame,
                         const AssociationParams& params);

/// Monotone id source, starting at 1.
class IdAllocator {
 public:
  TrackId next() { return next_++; }
  TrackId peek() const { return next_; }

 private:
  TrackId next_ = 1;
};

/// One new Active track per available detection with confidence >= theta_new.
std::vector<Track> initialize_new_tracks(std::span<const Detection> dets,
                                         std::span<const std::size_t> available,
                                         std::span<const double> densities, FrameIndex frame,
                                         const AssociationParams& params, IdAllocator& ids,
                                         std::size_t history_capacity);

struct SaOaResult {
  MatchResult match;
  std::vector<TrackId> new_tracks;
  /// compute_density of every detection among the frame's detections.
  std::vector<double> densities;
};

/// Runs stage 1 -> stage 2 -> stage 3 -> initialization on successively
/// remaining detections, then updates the track table in place: matched
/// tracks become Active with refreshed last-match fields, unmatched ones are
/// classified, and new tracks are appended.
///
/// `mask_boxes` holds the enclosing box of each track's propagated mask this
/// frame (nullopt for an empty mask; absent when no mask was generated).
/// Detections must have positive area.
SaOaResult sa_oa(std::vector<Track>& tracks, const std::map<TrackId, std::optional<BBox>>& mask_boxes,
                 std::span<const Detection> dets, FrameIndex frame, const AssociationParams& params,
                 IdAllocator& ids, std::size_t history_capacity);

}  // namespace crowdtrack
