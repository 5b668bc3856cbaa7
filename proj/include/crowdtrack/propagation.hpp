#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crowdtrack/geometry.hpp"
#include "crowdtrack/scenario.hpp"
#include "crowdtrack/track_state.hpp"

namespace crowdtrack {

struct MaskObservation {
  TrackId id = 0;
  Mask mask;
  double score = 0.0;

  friend bool operator==(const MaskObservation&, const MaskObservation&) = default;
};

/// Mask-propagation backend. Calls for one frame come in the order
/// propagate* -> (update_memory | reset | nothing)* -> seed*.
class Propagator {
 public:
  virtual ~Propagator() = default;

  virtual MaskObservation propagate(TrackId id, FrameIndex frame) = 0;
  /// Commits this frame's prediction into the track's memory.
  virtual void update_memory(TrackId id, FrameIndex frame) = 0;
  /// Replaces the track's memory from a box prompt.
  virtual void reset(TrackId id, const BBox& prompt, FrameIndex frame) = 0;
  virtual void seed(TrackId id, const BBox& prompt, FrameIndex frame) = 0;
  virtual void release(TrackId id) = 0;
};

struct PropagatorParams {
  double kappa = 0.4;
  double lambda_occ = 0.5;
  double sigma_n = 0.05;
  double p_drift = 0.4;
  double rho = 0.3;
  double rho_penalty = 0.2;

  friend bool operator==(const PropagatorParams&, const PropagatorParams&) = default;
};

void validate(const PropagatorParams& params);

/// Memory of one track. `bound` is the actor index being followed (nullopt:
/// memory lost, nothing is produced until a reset).
struct SyntheticMemory {
  double purity = 1.0;
  std::optional<int> bound;
  std::optional<int> contamination;
  bool drifted = false;

  friend bool operator==(const SyntheticMemory&, const SyntheticMemory&) = default;
};

/// p * (1 - kappa * overlap) when updated, else p; clamped to [0, 1].
double step_purity(double p, double overlap, bool updated, double kappa);

struct ActorOverlap {
  double fraction = 0.0;  // share of the silhouette hidden by nearer actors
  std::optional<int> dominant;  // the actor hiding most of it
};

ActorOverlap actor_overlap(const GroundTruth& gt, FrameIndex frame, int actor);

/// Produces the track's mask and score for `frame`. May rebind the memory to
/// its contamination source (drift).
MaskObservation emit_observation(SyntheticMemory& memory, const GroundTruth& gt, FrameIndex frame,
                                 const PropagatorParams& params, std::uint64_t noise_seed, TrackId id);

/// Memory initialized from a box prompt.
SyntheticMemory reset_memory(const BBox& prompt, const GroundTruth& gt, FrameIndex frame,
                             const PropagatorParams& params);

/// Advances purity with this frame's overlap and tracks the contaminating
/// neighbour. Memory is lost when the bound actor is off-screen.
void commit_memory(SyntheticMemory& memory, const GroundTruth& gt, FrameIndex frame,
                   const PropagatorParams& params);

class SyntheticPropagator final : public Propagator {
 public:
  SyntheticPropagator(const GroundTruth& gt, PropagatorParams params, std::uint64_t seed);

  MaskObservation propagate(TrackId id, FrameIndex frame) override;
  void update_memory(TrackId id, FrameIndex frame) override;
  void reset(TrackId id, const BBox& prompt, FrameIndex frame) override;
  void seed(TrackId id, const BBox& prompt, FrameIndex frame) override;
  void release(TrackId id) override;

  const SyntheticMemory* memory(TrackId id) const;

 private:
  SyntheticMemory& slot(TrackId id);

  const GroundTruth& gt_;
  PropagatorParams params_;
  std::uint64_t seed_;
  std::map<TrackId, SyntheticMemory> memories_;
};

struct ObservationRecord {
  FrameIndex frame = 0;
  MaskObservation observation;

  friend bool operator==(const ObservationRecord&, const ObservationRecord&) = default;
};

/// One record per line: `frame id score w h n s1 l1 ...` (1-based frame).
std::string format_observation(const ObservationRecord& record);
ObservationRecord parse_observation(const std::string& line);
std::vector<ObservationRecord> read_observations(std::istream& in);
std::vector<ObservationRecord> load_observations(const std::string& path);
void write_observations(std::ostream& out, const std::vector<ObservationRecord>& records);

/// Serves recorded observations; memory operations are no-ops. A track
/// with no record for a frame yields an empty mask with score 0.
class ReplayPropagator final : public Propagator {
 public:
  ReplayPropagator(std::vector<ObservationRecord> records, int width, int height);

  MaskObservation propagate(TrackId id, FrameIndex frame) override;
  void update_memory(TrackId, FrameIndex) override {}
  void reset(TrackId, const BBox&, FrameIndex) override {}
  void seed(TrackId, const BBox&, FrameIndex) override {}
  void release(TrackId) override {}

 private:
  std::map<std::pair<FrameIndex, TrackId>, MaskObservation> table_;
  int width_;
  int height_;
};

/// Forwards to another propagator and keeps every observation it returns.
class RecordingPropagator final : public Propagator {
 public:
  explicit RecordingPropagator(Propagator& inner) : inner_(inner) {}

  MaskObservation propagate(TrackId id, FrameIndex frame) override;
  void update_memory(TrackId id, FrameIndex frame) override { inner_.update_memory(id, frame); }
  void reset(TrackId id, const BBox& prompt, FrameIndex frame) override { inner_.reset(id, prompt, frame); }
  void seed(TrackId id, const BBox& prompt, FrameIndex frame) override { inner_.seed(id, prompt, frame); }
  void release(TrackId id) override { inner_.release(id); }

  const std::vector<ObservationRecord>& records() const { return records_; }

 private:
  Propagator& inner_;
  std::vector<ObservationRecord> records_;
};

}  // namespace crowdtrack
