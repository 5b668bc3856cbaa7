#include "crowdtrack/mot_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "crowdtrack/error.hpp"

namespace crowdtrack {

namespace {

struct MotLine {
  long long frame = 0;
  long long id = 0;
  BBox box;
  double conf = 1.0;
};

MotLine parse_line(const std::string& raw, int number) {
  std::vector<std::string> cols;
  std::stringstream ss(raw);
  std::string cell;
  while (std::getline(ss, cell, ',')) cols.push_back(cell);
  auto fail = [&](const std::string& what) { return Error(fmt::format("line {}: {}", number, what)); };
  if (cols.size() < 6) throw fail(fmt::format("expected at least 6 comma-separated fields, got {}", cols.size()));
  double v[7] = {0, 0, 0, 0, 0, 0, 1};
  const std::size_t n = std::min<std::size_t>(cols.size(), 7);
  for (std::size_t k = 0; k < n; ++k) {
    try {
      std::size_t used = 0;
      std::string s = cols[k];
      while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.pop_back();
      v[k] = std::stod(s, &used);
      if (used != s.size() || !std::isfinite(v[k])) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw fail(fmt::format("field {} is not a number: `{}`", k + 1, cols[k]));
    }
  }
  MotLine line;
  if (v[0] != std::floor(v[0]) || v[0] < 1) throw fail("frame must be a positive integer");
  if (v[1] != std::floor(v[1])) throw fail("id must be an integer");
  if (v[4] < 0 || v[5] < 0) throw fail("box size must be non-negative");
  line.frame = static_cast<long long>(v[0]);
  line.id = static_cast<long long>(v[1]);
  line.box = {static_cast<int>(std::floor(v[2])), static_cast<int>(std::floor(v[3])),
              static_cast<int>(std::ceil(v[2] + v[4])), static_cast<int>(std::ceil(v[3] + v[5]))};
  line.conf = v[6];
  return line;
}

template <class F>
void for_each_line(std::istream& in, F&& f) {
  std::string raw;
  int number = 0;
  while (std::getline(in, raw)) {
    ++number;
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    f(parse_line(raw, number), number);
  }
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open `{}`", path));
  return in;
}

template <class R>
R with_path(const std::string& path, R (*reader)(std::istream&)) {
  std::ifstream in = open_in(path);
  try {
    return reader(in);
  } catch (const Error& e) {
    throw Error(fmt::format("{}: {}", path, e.what()));
  }
}

}  // namespace

TrajectorySet read_mot(std::istream& in) {
  TrajectorySet out;
  for_each_line(in, [&](const MotLine& l, int number) {
    if (l.box.empty()) throw Error(fmt::format("line {}: box must have positive area", number));
    auto& track = out[l.id];
    if (!track.emplace(static_cast<FrameIndex>(l.frame - 1), l.box).second) {
      throw Error(fmt::format("line {}: duplicate entry for frame {} id {}", number, l.frame, l.id));
    }
  });
  return out;
}

TrajectorySet read_mot(const std::string& path) {
  return with_path<TrajectorySet>(path, static_cast<TrajectorySet (*)(std::istream&)>(&read_mot));
}

void write_mot(const TrajectorySet& set, std::ostream& out) {
  for (const auto& [frame, boxes] : by_frame(set)) {
    for (const auto& [id, b] : boxes) {
      fmt::print(out, "{},{},{},{},{},{},1,-1,-1,-1\n", frame + 1, id, b.x_min, b.y_min, b.width(), b.height());
    }
  }
}

void write_mot(const TrajectorySet& set, const std::string& path) {
  std::ostringstream ss;
  write_mot(set, ss);
  write_text_file(path, ss.str());
}

DetectionFrames read_detections(std::istream& in) {
  DetectionFrames out;
  for_each_line(in, [&](const MotLine& l, int number) {
    if (!(l.conf >= 0.0 && l.conf <= 1.0)) {
      throw Error(fmt::format("line {}: confidence {} outside [0, 1]", number, l.conf));
    }
    out[static_cast<FrameIndex>(l.frame - 1)].push_back({l.box, l.conf});
  });
  return out;
}

DetectionFrames read_detections(const std::string& path) {
  return with_path<DetectionFrames>(path, static_cast<DetectionFrames (*)(std::istream&)>(&read_detections));
}

void write_detections(const DetectionFrames& dets, std::ostream& out) {
  for (const auto& [frame, list] : dets) {
    for (const Detection& d : list) {
      fmt::print(out, "{},-1,{},{},{},{},{:.17g},-1,-1,-1\n", frame + 1, d.box.x_min, d.box.y_min, d.box.width(),
                 d.box.height(), d.confidence);
    }
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write `{}`", path));
  out << text;
  out.flush();
  if (!out) throw Error(fmt::format("write to `{}` failed", path));
}

std::string read_text_file(const std::string& path) {
  std::ifstream in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace crowdtrack
