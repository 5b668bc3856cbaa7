#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "crowdtrack/geometry.hpp"
#include "crowdtrack/track_state.hpp"

namespace crowdtrack {

/// Mid-confidence band in which a mask is re-generated from its detection.
struct QrBand {
  double tau_r = 0.3;
  double tau_p = 0.7;
};

void validate(const QrBand& band);

/// Density-aware reconstruction gate: tau_r < score < tau_p and
/// density < theta_density. Pass +inf as theta to get the ungated rule.
bool should_reconstruct(double score, double density, const QrBand& band, double theta_density);

struct TrackMask {
  TrackId id = 0;
  const Mask* mask = nullptr;
};

/// Unordered pairs with mask IoU strictly above `theta_miou`, as (smaller id,
/// larger id), sorted ascending.
std::vector<std::pair<TrackId, TrackId>> find_overlapping_pairs(std::span<const TrackMask> masks,
                                                                double theta_miou);

struct TrackReliability {
  TrackId id = 0;
  ConfidenceStats stats;
};

enum class DecisionReason { HcoiMean, HcoiVar, Daqr, Default };
std::string_view to_string(DecisionReason reason);

struct UnreliableChoice {
  TrackId id = 0;
  DecisionReason reason = DecisionReason::HcoiMean;
};

/// Hybrid choice: when the mean gap is at least the variance gap the lower
/// mean is unreliable, otherwise the higher variance is. Exact ties on the
/// deciding statistic mark the larger id.
UnreliableChoice select_unreliable(const TrackReliability& a, const TrackReliability& b);

/// Variance-only choice (the non-hybrid arbitration).
UnreliableChoice select_unreliable_by_variance(const TrackReliability& a, const TrackReliability& b);

enum class MemoryDecision { Update, Skip, Reconstruct };
std::string_view to_string(MemoryDecision decision);

struct MemoryUpdatePlan {
  std::set<TrackId> skip_set;
  std::set<TrackId> reconstruct_set;
  std::map<TrackId, DecisionReason> reasons;

  MemoryDecision decision(TrackId id) const;
  DecisionReason reason(TrackId id) const;
};

/// Per-track inputs for one frame after association.
struct TrackFrameView {
  TrackId id = 0;
  ConfidenceStats stats;
  /// Present when the propagator produced a mask for this track this frame.
  std::optional<double> score;
  const Mask* mask = nullptr;
  /// Association stage that matched the track this frame (0 = unmatched).
  int match_stage = 0;
  /// Density of the matched detection among all detections.
  double density = 0.0;
};

struct MaskControlParams {
  QrBand band;
  double theta_density = 1.5;
  double theta_miou = 0.3;
  bool daqr = true;
  bool hcoi = true;
};

/// Builds the per-frame memory plan.
///  - every overlapping pair contributes its unreliable member to skip_set;
///  - stage-1 matches passing should_reconstruct are reconstructed;
///  - stage-2 matches are reconstructed (density-gated when DA-QR is on);
///  - stage-3 matches are always re-seeded;
///  - reconstruction wins over a skip.
MemoryUpdatePlan plan_memory_updates(std::span<const TrackFrameView> tracks,
                                     const MaskControlParams& params);

/// Density of a track for the current frame: from its matched detection when
/// it has one, else from its mask box placed among the detections. Returns
/// nullopt when neither box is usable.
std::optional<double> track_density(std::optional<std::size_t> matched_det,
                                    const Mask* mask, std::span<const BBox> detections);

}  // namespace crowdtrack
