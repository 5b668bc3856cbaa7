#include "crowdtrack/association.hpp"

#include <algorithm>
#include <numeric>

#include "crowdtrack/error.hpp"
#include "crowdtrack/hungarian.hpp"

namespace crowdtrack {

double stage1_cost(double iou, double mu, double w) {
  return w * (1.0 - iou) + (1.0 - w) * (1.0 - mu);
}

namespace {

template <class Candidate, class Entry>
MatchResult run_stage(std::span<const Candidate> tracks, std::span<const std::size_t> available, int stage,
                      Entry entry) {
  CostMatrix costs(tracks.size(), available.size());
  for (std::size_t r = 0; r < tracks.size(); ++r) {
    for (std::size_t c = 0; c < available.size(); ++c) {
      const std::optional<double> cost = entry(tracks[r], available[c]);
      if (cost) {
        costs.set(r, c, *cost);
      } else {
        costs.forbid(r, c);
      }
    }
  }
  const Assignment assignment = hungarian(costs);

  MatchResult out;
  std::vector<char> row_used(tracks.size(), 0);
  std::vector<char> col_used(available.size(), 0);
  for (const auto& [r, c] : assignment.pairs) {
    out.pairs.push_back({tracks[r].id, available[c], stage});
    row_used[r] = 1;
    col_used[c] = 1;
  }
  for (std::size_t r = 0; r < tracks.size(); ++r) {
    if (!row_used[r]) out.unmatched_tracks.push_back(tracks[r].id);
  }
  for (std::size_t c = 0; c < available.size(); ++c) {
    if (!col_used[c]) out.unmatched_detections.push_back(available[c]);
  }
  return out;
}

}  // namespace

MatchResult stage1_match(std::span<const MaskCandidate> tracks, std::span<const Detection> dets,
                         std::span<const std::size_t> available, const AssociationParams& params) {
  return run_stage(tracks, available, 1,
                   [&](const MaskCandidate& t, std::size_t d) -> std::optional<double> {
                     if (!t.mask_box) return std::nullopt;
                     const double iou = bbox_iou(*t.mask_box, dets[d].box);
                     if (iou <= 0.0) return std::nullopt;
                     const double cost = stage1_cost(iou, t.mean_score, params.w);
                     if (cost > params.c_max) return std::nullopt;
                     return cost;
                   });
}

MatchResult stage2_match(std::span<const BoxCandidate> tracks, std::span<const Detection> dets,
                         std::span<const std::size_t> available, const AssociationParams& params) {
  return run_stage(tracks, available, 2,
                   [&](const BoxCandidate& t, std::size_t d) -> std::optional<double> {
                     const double iou = bbox_iou(t.box, dets[d].box);
                     if (iou < params.theta_s2 || iou <= 0.0) return std::nullopt;
                     return 1.0 - iou;
                   });
}

MatchResult stage3_match(std::span<const BoxCandidate> tracks, std::span<const Detection> dets,
                         std::span<const std::size_t> available, FrameIndex current_frame,
                         const AssociationParams& params) {
  return run_stage(tracks, available, 3,
                   [&](const BoxCandidate& t, std::size_t d) -> std::optional<double> {
                     if (current_frame - t.last_matched_frame > params.alpha_max) return std::nullopt;
                     const double iou = bbox_iou(t.box, dets[d].box);
                     if (iou < params.theta_s3 || iou <= 0.0) return std::nullopt;
                     return 1.0 - iou;
                   });
}

std::vector<Track> initialize_new_tracks(std::span<const Detection> dets,
                                         std::span<const std::size_t> available,
                                         std::span<const double> densities, FrameIndex frame,
                                         const AssociationParams& params, IdAllocator& ids,
                                         std::size_t history_capacity) {
  std::vector<Track> born;
  for (std::size_t d : available) {
    if (dets[d].confidence < params.theta_new) continue;
    Track t{.id = ids.next(),
            .state = TrackState::Active,
            .history = ConfidenceHistory(history_capacity),
            .birth_frame = frame,
            .last_matched_frame = frame,
            .last_matched_det = dets[d].box,
            .last_matched_density = d < densities.size() ? densities[d] : 0.0};
    born.push_back(std::move(t));
  }
  return born;
}

SaOaResult sa_oa(std::vector<Track>& tracks, const std::map<TrackId, std::optional<BBox>>& mask_boxes,
                 std::span<const Detection> dets, FrameIndex frame, const AssociationParams& params,
                 IdAllocator& ids, std::size_t history_capacity) {
  SaOaResult result;
  std::vector<BBox> boxes;
  boxes.reserve(dets.size());
  for (const Detection& d : dets) {
    if (d.box.empty()) throw Error("sa_oa: detections must have positive area");
    boxes.push_back(d.box);
  }
  result.densities.resize(dets.size());
  for (std::size_t d = 0; d < dets.size(); ++d) result.densities[d] = compute_density(d, boxes);

  std::map<TrackId, Track*> by_id;
  for (Track& t : tracks) by_id[t.id] = &t;

  auto mask_box_of = [&](TrackId id) -> std::optional<BBox> {
    auto it = mask_boxes.find(id);
    return it == mask_boxes.end() ? std::nullopt : it->second;
  };

  std::vector<std::size_t> remaining(dets.size());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});

  auto absorb = [&](const MatchResult& stage) {
    result.match.pairs.insert(result.match.pairs.end(), stage.pairs.begin(), stage.pairs.end());
    remaining = stage.unmatched_detections;
  };

  // Stage 1: Active and Occluded (plus Frame-Out when stage 3 is off).
  std::vector<MaskCandidate> stage1;
  for (const Track& t : tracks) {
    const bool eligible = t.state == TrackState::Active || t.state == TrackState::Occluded ||
                          (t.state == TrackState::FrameOut && !params.stage3);
    if (!eligible) continue;
    const double mu = t.history.empty() ? 0.0 : t.history.stats().mean;
    stage1.push_back({t.id, mask_box_of(t.id), mu});
  }
  const MatchResult s1 = stage1_match(stage1, dets, remaining, params);
  absorb(s1);

  if (params.stage2) {
    std::vector<BoxCandidate> stage2;
    for (TrackId id : s1.unmatched_tracks) {
      const Track& t = *by_id.at(id);
      if (t.state == TrackState::Active || t.state == TrackState::Occluded) {
        stage2.push_back({t.id, t.last_matched_det, t.last_matched_frame});
      }
    }
    absorb(stage2_match(stage2, dets, remaining, params));
  }

  if (params.stage3) {
    std::vector<BoxCandidate> stage3;
    for (const Track& t : tracks) {
      if (t.state != TrackState::FrameOut) continue;
      if (params.frameout_masks) {
        const std::optional<BBox> mb = mask_box_of(t.id);
        if (mb) stage3.push_back({t.id, *mb, t.last_matched_frame});
      } else {
        stage3.push_back({t.id, t.last_matched_det, t.last_matched_frame});
      }
    }
    absorb(stage3_match(stage3, dets, remaining, frame, params));
  }

  std::vector<char> matched(tracks.size(), 0);
  std::map<TrackId, std::size_t> index_of;
  for (std::size_t k = 0; k < tracks.size(); ++k) index_of[tracks[k].id] = k;
  for (const MatchPair& p : result.match.pairs) {
    Track& t = *by_id.at(p.track);
    mark_matched(t, frame, dets[p.detection].box, result.densities[p.detection]);
    matched[index_of.at(p.track)] = 1;
  }
  for (std::size_t k = 0; k < tracks.size(); ++k) {
    if (matched[k] || tracks[k].state == TrackState::Expired) continue;
    mark_unmatched(tracks[k], params.delta);
    result.match.unmatched_tracks.push_back(tracks[k].id);
  }

  std::vector<Track> born = initialize_new_tracks(dets, remaining, result.densities, frame, params,
                                                  ids, history_capacity);
  std::vector<char> consumed(dets.size(), 0);
  for (const Track& t : born) {
    result.new_tracks.push_back(t.id);
  }
  // Detections that spawned a track count as consumed, not unmatched.
  for (std::size_t d : remaining) {
    if (dets[d].confidence >= params.theta_new) consumed[d] = 1;
  }
  for (std::size_t d : remaining) {
    if (!consumed[d]) result.match.unmatched_detections.push_back(d);
  }
  for (Track& t : born) tracks.push_back(std::move(t));

  std::sort(result.match.pairs.begin(), result.match.pairs.end(),
            [](const MatchPair& a, const MatchPair& b) { return a.track < b.track; });
  return result;
}

}  // namespace crowdtrack
