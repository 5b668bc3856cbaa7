#include "crowdtrack/tracker.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "crowdtrack/error.hpp"

namespace crowdtrack {

std::string decision_line(const DecisionRecord& r) {
  return fmt::format("{} {} {} {}", r.frame + 1, r.id, to_string(r.decision), to_string(r.reason));
}

Tracker::Tracker(const TrackerConfig& config, Propagator& propagator, bool keep_snapshots)
    : config_(config),
      assoc_(association_params(config)),
      control_(mask_control_params(config)),
      retention_(retention_policy(config)),
      propagator_(propagator),
      keep_snapshots_(keep_snapshots) {
  validate(config_);
}

bool Tracker::wants_mask(const Track& t) const {
  switch (t.state) {
    case TrackState::Active:
    case TrackState::Occluded:
      return true;
    case TrackState::FrameOut:
      return !config_.stage3 || config_.frameout_masks;
    case TrackState::Expired:
      return false;
  }
  return false;
}

const FrameReport& Tracker::step(FrameIndex frame, std::span<const Detection> detections) {
  if (frame <= last_frame_) throw Error(fmt::format("tracker: frame {} fed out of order", frame + 1));
  last_frame_ = frame;
  report_ = FrameReport{};
  report_.frame = frame;

  report_.expired = expire_tracks(tracks_, frame, retention_);
  if (report_.expired > 0) {
    for (const Track& t : tracks_) {
      if (t.state == TrackState::Expired) propagator_.release(t.id);
    }
    std::erase_if(tracks_, [](const Track& t) { return t.state == TrackState::Expired; });
  }

  std::map<TrackId, MaskObservation> observed;
  std::map<TrackId, std::optional<BBox>> mask_boxes;
  for (Track& t : tracks_) {
    if (!wants_mask(t)) continue;
    MaskObservation obs = propagator_.propagate(t.id, frame);
    push_confidence(t, obs.score);
    mask_boxes[t.id] = obs.mask.empty() ? std::nullopt : std::optional<BBox>(mask_enclosing_bbox(obs.mask));
    observed.emplace(t.id, std::move(obs));
  }

  std::vector<Detection> dets;
  dets.reserve(detections.size());
  for (const Detection& d : detections) {
    if (!d.box.empty()) dets.push_back(d);
  }

  report_.association = sa_oa(tracks_, mask_boxes, dets, frame, assoc_, ids_,
                              static_cast<std::size_t>(config_.history_N));
  const SaOaResult& assoc = report_.association;

  std::map<TrackId, const MatchPair*> matched;
  for (const MatchPair& p : assoc.match.pairs) matched[p.track] = &p;

  std::vector<TrackFrameView> views;
  for (const Track& t : tracks_) {
    auto obs = observed.find(t.id);
    auto m = matched.find(t.id);
    if (obs == observed.end() && m == matched.end()) continue;
    TrackFrameView v;
    v.id = t.id;
    if (!t.history.empty()) v.stats = t.history.stats();
    if (obs != observed.end()) {
      v.score = obs->second.score;
      v.mask = &obs->second.mask;
    }
    if (m != matched.end()) {
      v.match_stage = m->second->stage;
      v.density = assoc.densities[m->second->detection];
    }
    views.push_back(v);
  }
  report_.plan = plan_memory_updates(views, control_);

  for (const TrackFrameView& v : views) {
    const MemoryDecision decision = report_.plan.decision(v.id);
    switch (decision) {
      case MemoryDecision::Reconstruct:
        propagator_.reset(v.id, dets[matched.at(v.id)->detection].box, frame);
        break;
      case MemoryDecision::Skip:
        break;
      case MemoryDecision::Update:
        if (v.score) propagator_.update_memory(v.id, frame);
        break;
    }
    if (v.score || decision != MemoryDecision::Update) {
      decisions_.push_back({frame, v.id, decision, report_.plan.reason(v.id)});
    }
  }

  for (const Track& t : tracks_) {
    if (std::find(assoc.new_tracks.begin(), assoc.new_tracks.end(), t.id) != assoc.new_tracks.end()) {
      propagator_.seed(t.id, t.last_matched_det, frame);
    }
  }

  for (const Track& t : tracks_) {
    if (t.last_matched_frame == frame) output_[t.id][frame] = t.last_matched_det;
    if (keep_snapshots_) snapshots_.push_back(snapshot_line(frame, t));
  }
  return report_;
}

}  // namespace crowdtrack
