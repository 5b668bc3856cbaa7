#include "crowdtrack/track_state.hpp"

#include <cmath>

#include <fmt/format.h>

#include "crowdtrack/error.hpp"

namespace crowdtrack {

std::string_view to_string(TrackState state) {
  switch (state) {
    case TrackState::Active: return "active";
    case TrackState::Occluded: return "occluded";
    case TrackState::FrameOut: return "frameout";
    case TrackState::Expired: return "expired";
  }
  return "unknown";
}

bool is_allowed_transition(TrackState from, TrackState to) {
  if (from == TrackState::Expired) return to == TrackState::Expired;
  if (from == to) return true;
  switch (from) {
    case TrackState::Active:
      return to == TrackState::Occluded || to == TrackState::FrameOut;
    case TrackState::Occluded:
    case TrackState::FrameOut:
      return to == TrackState::Active || to == TrackState::Expired;
    case TrackState::Expired:
      break;
  }
  return false;
}

ConfidenceHistory::ConfidenceHistory(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw Error("confidence window length must be >= 1");
}

void ConfidenceHistory::push(double score) {
  if (!(score >= 0.0 && score <= 1.0)) {
    throw Error(fmt::format("confidence score {} outside [0, 1]", score));
  }
  if (window_.size() == capacity_) window_.pop_front();
  window_.push_back(score);
}

ConfidenceStats ConfidenceHistory::stats() const {
  if (window_.empty()) throw Error("confidence stats requested for an empty history");
  // Welford
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (double x : window_) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  return {mean, m2 / static_cast<double>(n)};
}

void push_confidence(Track& track, double score) { track.history.push(score); }

ConfidenceStats confidence_stats(const Track& track) { return track.history.stats(); }

TrackState classify_unmatched(const Track& track, double delta) {
  return track.last_matched_density > delta ? TrackState::Occluded : TrackState::FrameOut;
}

void mark_matched(Track& track, FrameIndex frame, const BBox& det, double density) {
  if (track.state == TrackState::Expired) throw Error("cannot match an expired track");
  track.state = TrackState::Active;
  track.last_matched_frame = frame;
  track.last_matched_det = det;
  track.last_matched_density = density;
}

void mark_unmatched(Track& track, double delta) {
  if (track.state == TrackState::Active) track.state = classify_unmatched(track, delta);
}

std::size_t expire_tracks(std::span<Track> tracks, FrameIndex current_frame, int ttl) {
  return expire_tracks(tracks, current_frame, RetentionPolicy{ttl, ttl});
}

std::size_t expire_tracks(std::span<Track> tracks, FrameIndex current_frame,
                          const RetentionPolicy& policy) {
  if (policy.ttl < 1 || policy.frameout_ttl < 1) throw Error("retention limits must be >= 1");
  std::size_t expired = 0;
  for (Track& t : tracks) {
    if (t.state == TrackState::Active || t.state == TrackState::Expired) continue;
    const int limit = t.state == TrackState::FrameOut ? policy.frameout_ttl : policy.ttl;
    if (current_frame - t.last_matched_frame > limit) {
      t.state = TrackState::Expired;
      ++expired;
    }
  }
  return expired;
}

std::string snapshot_line(FrameIndex frame, const Track& track) {
  std::string mu = "-";
  std::string var = "-";
  if (!track.history.empty()) {
    const ConfidenceStats s = track.history.stats();
    mu = fmt::format("{:.6f}", s.mean);
    var = fmt::format("{:.6f}", s.variance);
  }
  const BBox& b = track.last_matched_det;
  return fmt::format("{} {} {} {} {} {} {},{},{},{} {:.6f}", frame + 1, track.id,
                     to_string(track.state), mu, var, track.last_matched_frame + 1, b.x_min, b.y_min, b.x_max, b.y_max,
                     track.last_matched_density);
}

}  // namespace crowdtrack
