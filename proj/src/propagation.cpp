#include "crowdtrack/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <fmt/format.h>

#include "crowdtrack/error.hpp"

namespace crowdtrack {

void validate(const PropagatorParams& p) {
  auto unit = [](const char* key, double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(fmt::format("{} must lie in [0, 1], got {}", key, v));
  };
  unit("kappa", p.kappa);
  unit("lambda_occ", p.lambda_occ);
  unit("p_drift", p.p_drift);
  unit("rho", p.rho);
  unit("rho_penalty", p.rho_penalty);
  if (!(p.sigma_n >= 0.0 && std::isfinite(p.sigma_n))) {
    throw Error(fmt::format("sigma_n must be finite and >= 0, got {}", p.sigma_n));
  }
}

double step_purity(double p, double overlap, bool updated, double kappa) {
  if (!updated) return std::clamp(p, 0.0, 1.0);
  return std::clamp(p * (1.0 - kappa * overlap), 0.0, 1.0);
}

ActorOverlap actor_overlap(const GroundTruth& gt, FrameIndex frame, int actor) {
  ActorOverlap out;
  const ActorFrame& me = gt.at(frame, actor);
  if (!me.on_screen || me.visibility >= 1.0) return out;
  const Mask hidden = mask_difference(me.silhouette, me.visible);
  std::int64_t best = 0;
  for (int b = 0; b < gt.actor_count(); ++b) {
    if (b == actor) continue;
    const ActorFrame& other = gt.at(frame, b);
    if (!other.on_screen || bbox_intersection_area(me.box, other.box) == 0) continue;
    const std::int64_t inter = mask_intersection_area(hidden, other.silhouette);
    if (inter > best) {
      best = inter;
      out.dominant = b;
    }
  }
  out.fraction = static_cast<double>(hidden.area()) / static_cast<double>(me.silhouette.area());
  return out;
}

namespace {

// Columns of the source's silhouette region on the side facing the bound actor.
Mask contamination_slice(const ActorFrame& bound, const ActorFrame& source, double share) {
  if (share <= 0.0 || source.silhouette.empty()) return Mask(source.silhouette.width(), source.silhouette.height());
  const BBox vb = mask_enclosing_bbox(source.silhouette);
  const int cols = std::min(vb.width(), static_cast<int>(std::ceil(share * vb.width())));
  const BBox band = source.cx >= bound.cx ? BBox{vb.x_min, vb.y_min, vb.x_min + cols, vb.y_max}
                                          : BBox{vb.x_max - cols, vb.y_min, vb.x_max, vb.y_max};
  return mask_intersection(source.silhouette,
                           Mask::from_box(source.silhouette.width(), source.silhouette.height(), band));
}

}  // namespace

MaskObservation emit_observation(SyntheticMemory& memory, const GroundTruth& gt, FrameIndex frame,
                                 const PropagatorParams& params, std::uint64_t noise_seed, TrackId id) {
  MaskObservation obs;
  obs.id = id;
  obs.mask = Mask(gt.width(), gt.height());
  if (!memory.bound || !gt.at(frame, *memory.bound).on_screen) return obs;

  if (!memory.drifted && memory.purity < params.p_drift && memory.contamination) {
    const ActorFrame& src = gt.at(frame, *memory.contamination);
    const ActorFrame& cur = gt.at(frame, *memory.bound);
    if (src.on_screen && bbox_intersection_area(src.box, cur.box) > 0 &&
        mask_intersection_area(src.silhouette, cur.silhouette) > 0) {
      std::swap(memory.bound, memory.contamination);
      memory.drifted = true;
    }
  }

  const ActorFrame& bound = gt.at(frame, *memory.bound);
  const double occlusion = 1.0 - bound.visibility;
  double score = 1.0 - params.lambda_occ * occlusion;
  if (memory.drifted) {
    obs.mask = bound.silhouette;
  } else {
    score *= memory.purity;
    obs.mask = bound.silhouette;
    // The mask only bleeds into the source while the two touch.
    if (memory.contamination) {
      const ActorFrame& src = gt.at(frame, *memory.contamination);
      if (src.on_screen && bbox_intersection_area(src.box, bound.box) > 0) {
        obs.mask = mask_union(obs.mask, contamination_slice(bound, src, 1.0 - memory.purity));
      }
    }
  }
  if (params.sigma_n > 0.0) {
    boost::random::mt19937_64 rng(mix_seed(mix_seed(noise_seed, static_cast<std::uint64_t>(frame)),
                                           static_cast<std::uint64_t>(id)));
    score += boost::random::normal_distribution<double>(0.0, params.sigma_n)(rng);
  }
  obs.score = std::clamp(score, 0.0, 1.0);
  return obs;
}

SyntheticMemory reset_memory(const BBox& prompt, const GroundTruth& gt, FrameIndex frame,
                             const PropagatorParams& params) {
  if (prompt.empty()) throw Error("reset: prompt box must have positive area");
  SyntheticMemory mem;
  double best_iou = 0.0;
  for (int a = 0; a < gt.actor_count(); ++a) {
    const ActorFrame& af = gt.at(frame, a);
    if (!af.on_screen) continue;
    const double iou = bbox_iou(prompt, af.box);
    if (iou > best_iou) {
      best_iou = iou;
      mem.bound = a;
    }
  }
  if (!mem.bound) return mem;
  double best_cover = params.rho;
  for (int b = 0; b < gt.actor_count(); ++b) {
    const ActorFrame& af = gt.at(frame, b);
    if (b == *mem.bound || !af.on_screen) continue;
    const double cover = static_cast<double>(bbox_intersection_area(prompt, af.box)) /
                         static_cast<double>(af.box.area());
    if (cover > best_cover) {
      best_cover = cover;
      mem.contamination = b;
    }
  }
  if (mem.contamination) mem.purity = 1.0 - params.rho_penalty;
  return mem;
}

void commit_memory(SyntheticMemory& memory, const GroundTruth& gt, FrameIndex frame,
                   const PropagatorParams& params) {
  if (!memory.bound) return;
  if (!gt.at(frame, *memory.bound).on_screen) {
    memory = SyntheticMemory{};
    return;
  }
  const ActorOverlap ov = actor_overlap(gt, frame, *memory.bound);
  memory.purity = step_purity(memory.purity, ov.fraction, true, params.kappa);
  if (ov.fraction > 0.0) memory.contamination = ov.dominant;
}

SyntheticPropagator::SyntheticPropagator(const GroundTruth& gt, PropagatorParams params, std::uint64_t seed)
    : gt_(gt), params_(params), seed_(seed) {
  validate(params_);
}

SyntheticMemory& SyntheticPropagator::slot(TrackId id) {
  auto it = memories_.find(id);
  if (it == memories_.end()) throw Error(fmt::format("propagator: unknown track {}", id));
  return it->second;
}

MaskObservation SyntheticPropagator::propagate(TrackId id, FrameIndex frame) {
  return emit_observation(slot(id), gt_, frame, params_, seed_, id);
}

void SyntheticPropagator::update_memory(TrackId id, FrameIndex frame) {
  commit_memory(slot(id), gt_, frame, params_);
}

void SyntheticPropagator::reset(TrackId id, const BBox& prompt, FrameIndex frame) {
  slot(id) = reset_memory(prompt, gt_, frame, params_);
}

void SyntheticPropagator::seed(TrackId id, const BBox& prompt, FrameIndex frame) {
  if (memories_.count(id)) throw Error(fmt::format("propagator: track {} already seeded", id));
  memories_[id] = reset_memory(prompt, gt_, frame, params_);
}

void SyntheticPropagator::release(TrackId id) { memories_.erase(id); }

const SyntheticMemory* SyntheticPropagator::memory(TrackId id) const {
  auto it = memories_.find(id);
  return it == memories_.end() ? nullptr : &it->second;
}

std::string format_observation(const ObservationRecord& r) {
  return fmt::format("{} {} {:.17g} {}", r.frame + 1, r.observation.id, r.observation.score,
                     mask_to_rle_text(r.observation.mask));
}

ObservationRecord parse_observation(const std::string& line) {
  std::istringstream in(line);
  long long frame = 0;
  long long id = 0;
  std::string score_text;
  if (!(in >> frame >> id >> score_text)) throw Error("observation record: expected `frame id score rle`");
  if (frame < 1) throw Error("observation record: frames are 1-based");
  ObservationRecord r;
  r.frame = static_cast<FrameIndex>(frame - 1);
  r.observation.id = id;
  try {
    std::size_t used = 0;
    r.observation.score = std::stod(score_text, &used);
    if (used != score_text.size()) throw Error("trailing characters");
  } catch (const std::exception&) {
    throw Error(fmt::format("observation record: bad score `{}`", score_text));
  }
  if (!(r.observation.score >= 0.0 && r.observation.score <= 1.0)) {
    throw Error(fmt::format("observation record: score {} outside [0, 1]", score_text));
  }
  std::string rest;
  std::getline(in, rest);
  r.observation.mask = mask_from_rle_text(rest);
  return r;
}

std::vector<ObservationRecord> read_observations(std::istream& in) {
  std::vector<ObservationRecord> out;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_observation(line));
    } catch (const Error& e) {
      throw Error(fmt::format("line {}: {}", number, e.what()));
    }
  }
  return out;
}

std::vector<ObservationRecord> load_observations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open observation stream `{}`", path));
  try {
    return read_observations(in);
  } catch (const Error& e) {
    throw Error(fmt::format("{}: {}", path, e.what()));
  }
}

void write_observations(std::ostream& out, const std::vector<ObservationRecord>& records) {
  for (const ObservationRecord& r : records) out << format_observation(r) << '\n';
}

ReplayPropagator::ReplayPropagator(std::vector<ObservationRecord> records, int width, int height)
    : width_(width), height_(height) {
  for (ObservationRecord& r : records) {
    const auto key = std::make_pair(r.frame, r.observation.id);
    if (table_.count(key)) {
      throw Error(fmt::format("observation stream: duplicate record for frame {} id {}", r.frame + 1,
                              r.observation.id));
    }
    table_.emplace(key, std::move(r.observation));
  }
}

MaskObservation ReplayPropagator::propagate(TrackId id, FrameIndex frame) {
  auto it = table_.find({frame, id});
  if (it == table_.end()) return MaskObservation{id, Mask(width_, height_), 0.0};
  return it->second;
}

MaskObservation RecordingPropagator::propagate(TrackId id, FrameIndex frame) {
  MaskObservation obs = inner_.propagate(id, frame);
  records_.push_back({frame, obs});
  return obs;
}

}  // namespace crowdtrack
