#include "crowdtrack/mask_control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "crowdtrack/error.hpp"

namespace crowdtrack {

void validate(const QrBand& band) {
  if (!(0.0 <= band.tau_r && band.tau_r < band.tau_p && band.tau_p <= 1.0)) {
    throw Error(fmt::format("QR band requires 0 <= tau_r < tau_p <= 1 (got {}, {})", band.tau_r,
                            band.tau_p));
  }
}

bool should_reconstruct(double score, double density, const QrBand& band, double theta_density) {
  return band.tau_r < score && score < band.tau_p && density < theta_density;
}

std::vector<std::pair<TrackId, TrackId>> find_overlapping_pairs(std::span<const TrackMask> masks,
                                                                double theta_miou) {
  std::vector<TrackMask> sorted(masks.begin(), masks.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const TrackMask& a, const TrackMask& b) { return a.id < b.id; });
  std::vector<std::pair<TrackId, TrackId>> pairs;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i].mask == nullptr || sorted[i].mask->empty()) continue;
    for (std::size_t j = i + 1; j < sorted.size(); ++j) {
      if (sorted[j].mask == nullptr || sorted[j].mask->empty()) continue;
      if (mask_iou(*sorted[i].mask, *sorted[j].mask) > theta_miou) {
        pairs.emplace_back(sorted[i].id, sorted[j].id);
      }
    }
  }
  return pairs;
}

std::string_view to_string(DecisionReason reason) {
  switch (reason) {
    case DecisionReason::HcoiMean: return "hcoi-mean";
    case DecisionReason::HcoiVar: return "hcoi-var";
    case DecisionReason::Daqr: return "daqr";
    case DecisionReason::Default: return "default";
  }
  return "default";
}

std::string_view to_string(MemoryDecision decision) {
  switch (decision) {
    case MemoryDecision::Update: return "update";
    case MemoryDecision::Skip: return "skip";
    case MemoryDecision::Reconstruct: return "reconstruct";
  }
  return "update";
}

namespace {

TrackId larger_id(const TrackReliability& a, const TrackReliability& b) {
  return std::max(a.id, b.id);
}

UnreliableChoice by_variance(const TrackReliability& a, const TrackReliability& b) {
  if (a.stats.variance == b.stats.variance) return {larger_id(a, b), DecisionReason::HcoiVar};
  return {a.stats.variance > b.stats.variance ? a.id : b.id, DecisionReason::HcoiVar};
}

}  // namespace

UnreliableChoice select_unreliable(const TrackReliability& a, const TrackReliability& b) {
  const double d_mean = std::abs(a.stats.mean - b.stats.mean);
  const double d_var = std::abs(a.stats.variance - b.stats.variance);
  if (d_mean >= d_var) {
    if (a.stats.mean == b.stats.mean) return {larger_id(a, b), DecisionReason::HcoiMean};
    return {a.stats.mean < b.stats.mean ? a.id : b.id, DecisionReason::HcoiMean};
  }
  return by_variance(a, b);
}

UnreliableChoice select_unreliable_by_variance(const TrackReliability& a,
                                               const TrackReliability& b) {
  return by_variance(a, b);
}

MemoryDecision MemoryUpdatePlan::decision(TrackId id) const {
  if (reconstruct_set.contains(id)) return MemoryDecision::Reconstruct;
  if (skip_set.contains(id)) return MemoryDecision::Skip;
  return MemoryDecision::Update;
}

DecisionReason MemoryUpdatePlan::reason(TrackId id) const {
  auto it = reasons.find(id);
  return it == reasons.end() ? DecisionReason::Default : it->second;
}

MemoryUpdatePlan plan_memory_updates(std::span<const TrackFrameView> tracks,
                                     const MaskControlParams& params) {
  MemoryUpdatePlan plan;

  std::map<TrackId, const TrackFrameView*> by_id;
  std::vector<TrackMask> masks;
  for (const TrackFrameView& t : tracks) {
    by_id[t.id] = &t;
    if (t.score && t.mask != nullptr) masks.push_back({t.id, t.mask});
  }

  for (const auto& [i, j] : find_overlapping_pairs(masks, params.theta_miou)) {
    const TrackReliability a{i, by_id[i]->stats};
    const TrackReliability b{j, by_id[j]->stats};
    const UnreliableChoice loser =
        params.hcoi ? select_unreliable(a, b) : select_unreliable_by_variance(a, b);
    // First skip reason wins; later pairs re-skipping the same id are no-ops.
    if (plan.skip_set.insert(loser.id).second) plan.reasons[loser.id] = loser.reason;
  }

  const double theta = params.daqr ? params.theta_density : std::numeric_limits<double>::infinity();
  for (const TrackFrameView& t : tracks) {
    bool reconstruct = false;
    DecisionReason reason = DecisionReason::Daqr;
    switch (t.match_stage) {
      case 1:
        reconstruct = t.score && should_reconstruct(*t.score, t.density, params.band, theta);
        break;
      case 2:
        reconstruct = t.density < theta;
        break;
      case 3:
        reconstruct = true;
        reason = DecisionReason::Default;
        break;
      default:
        break;
    }
    if (reconstruct) {
      plan.reconstruct_set.insert(t.id);
      plan.skip_set.erase(t.id);
      plan.reasons[t.id] = reason;
    }
  }
  return plan;
}

std::optional<double> track_density(std::optional<std::size_t> matched_det, const Mask* mask,
                                    std::span<const BBox> detections) {
  if (matched_det) {
    if (*matched_det >= detections.size() || detections[*matched_det].empty()) return std::nullopt;
    return compute_density(*matched_det, detections);
  }
  if (mask == nullptr || mask->empty()) return std::nullopt;
  std::vector<BBox> boxes(detections.begin(), detections.end());
  boxes.push_back(mask_enclosing_bbox(*mask));
  return compute_density(boxes.size() - 1, boxes);
}

}  // namespace crowdtrack
