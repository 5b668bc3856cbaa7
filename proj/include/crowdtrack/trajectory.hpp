#pragma once

#include <map>

#include "crowdtrack/geometry.hpp"
#include "crowdtrack/track_state.hpp"

namespace crowdtrack {

/// id -> (frame -> box); at most one box per id and frame. Frames are 0-based.
using TrajectorySet = std::map<TrackId, std::map<FrameIndex, BBox>>;

/// frame -> (id -> box), the transpose used by frame-wise evaluation.
using FrameBoxes = std::map<FrameIndex, std::map<TrackId, BBox>>;

inline FrameBoxes by_frame(const TrajectorySet& set) {
  FrameBoxes out;
  for (const auto& [id, boxes] : set) {
    for (const auto& [frame, box] : boxes) out[frame][id] = box;
  }
  return out;
}

inline std::size_t box_count(const TrajectorySet& set) {
  std::size_t n = 0;
  for (const auto& [id, boxes] : set) n += boxes.size();
  return n;
}

}  // namespace crowdtrack
