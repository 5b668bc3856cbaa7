#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "crowdtrack/association.hpp"
#include "crowdtrack/trajectory.hpp"

namespace crowdtrack {

/// `frame,id,x,y,w,h,conf,-1,-1,-1` lines with 1-based frames. Boxes become
/// half-open integer boxes: floor on the minimum edges, ceil on the maximum.
TrajectorySet read_mot(std::istream& in);
TrajectorySet read_mot(const std::string& path);

/// Lines sorted by (frame, id).
void write_mot(const TrajectorySet& set, std::ostream& out);
void write_mot(const TrajectorySet& set, const std::string& path);

using DetectionFrames = std::map<FrameIndex, std::vector<Detection>>;

/// Same line layout; the id column is ignored and written as -1.
DetectionFrames read_detections(std::istream& in);
DetectionFrames read_detections(const std::string& path);
void write_detections(const DetectionFrames& dets, std::ostream& out);

/// Writes `text` to `path`, surfacing failures.
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace crowdtrack
