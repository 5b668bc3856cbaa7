#include <gtest/gtest.h>

#include <numeric>
#include <set>
#include <vector>

#include "crowdtrack/association.hpp"
#include "crowdtrack/error.hpp"
#include "support/oracles.hpp"

using namespace crowdtrack;

namespace {

std::vector<std::size_t> all_of(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

Track track(TrackId id, TrackState state, const BBox& last, FrameIndex last_frame, double density = 0.0) {
  Track t;
  t.id = id;
  t.state = state;
  t.last_matched_det = last;
  t.last_matched_frame = last_frame;
  t.last_matched_density = density;
  return t;
}

// Gated costs in the oracle's own terms, then enumeration.
double brute_total(const std::vector<std::vector<std::optional<double>>>& c,
                   std::vector<std::pair<std::size_t, std::size_t>>* pairs) {
  CostMatrix m(c.size(), c.empty() ? 0 : c[0].size());
  for (std::size_t r = 0; r < c.size(); ++r) {
    for (std::size_t k = 0; k < c[r].size(); ++k) {
      if (c[r][k]) {
        m.set(r, k, *c[r][k]);
      } else {
        m.forbid(r, k);
      }
    }
  }
  const oracle::BruteAssignment b = oracle::brute_assignment(m);
  *pairs = b.pairs;
  return b.total;
}

}  // namespace

TEST(Stage1Cost, Examples) {
  EXPECT_NEAR(stage1_cost(0.8, 0.9, 0.5), 0.15, 1e-15);
  EXPECT_EQ(stage1_cost(1.0, 1.0, 0.5), 0.0);
  for (double mu : {0.0, 0.3, 1.0}) EXPECT_DOUBLE_EQ(stage1_cost(0.25, mu, 1.0), 0.75);
}

TEST(Stage1Cost, Monotone) {
  oracle::Rng rng(2);
  for (int k = 0; k < 1000; ++k) {
    const double w = oracle::rand_real(rng, 0.01, 1.0);
    const double mu = oracle::rand_real(rng, 0.0, 1.0);
    const double a = oracle::rand_real(rng, 0.0, 1.0);
    const double b = oracle::rand_real(rng, 0.0, 1.0);
    if (a < b) {
      EXPECT_GT(stage1_cost(a, mu, w), stage1_cost(b, mu, w));
    }
    const double w2 = oracle::rand_real(rng, 0.0, 0.99);
    if (a < b) {
      EXPECT_GT(stage1_cost(0.5, a, w2), stage1_cost(0.5, b, w2));
    }
  }
}

TEST(Stage1, SingleTrack) {
  const AssociationParams p;
  const std::vector<Detection> dets{{{0, 0, 10, 10}, 0.9}};
  // IoU 0.9: 10x10 against 10x9 nested.
  const std::vector<MaskCandidate> ok{{1, BBox{0, 0, 10, 9}, 0.9}};
  const MatchResult r = stage1_match(ok, dets, all_of(1), p);
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_EQ(r.pairs[0], (MatchPair{1, 0, 1}));
  const std::vector<MaskCandidate> far{{1, BBox{50, 50, 60, 60}, 0.9}};
  EXPECT_TRUE(stage1_match(far, dets, all_of(1), p).pairs.empty());
  const std::vector<MaskCandidate> empty{{1, std::nullopt, 0.9}};
  EXPECT_TRUE(stage1_match(empty, dets, all_of(1), p).pairs.empty());
}

TEST(Stage1, PureIouWhenMeansEqual) {
  oracle::Rng rng(23);
  AssociationParams p;
  p.w = 1.0;
  p.c_max = 1.0;
  for (int k = 0; k < 100; ++k) {
    std::vector<MaskCandidate> tracks;
    std::vector<Detection> dets;
    for (int i = 0; i < 3; ++i) tracks.push_back({i + 1, oracle::random_box(rng, 40, 40), 0.7});
    for (int j = 0; j < 3; ++j) dets.push_back({oracle::random_box(rng, 40, 40), 0.9});
    std::vector<std::vector<std::optional<double>>> c(3, std::vector<std::optional<double>>(3));
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t d = 0; d < 3; ++d) {
        const double iou = oracle::box_iou(*tracks[r].mask_box, dets[d].box);
        if (iou > 0.0) c[r][d] = 1.0 - iou;
      }
    }
    std::vector<std::pair<std::size_t, std::size_t>> want;
    brute_total(c, &want);
    const MatchResult got = stage1_match(tracks, dets, all_of(3), p);
    ASSERT_EQ(got.pairs.size(), want.size());
    for (std::size_t k2 = 0; k2 < want.size(); ++k2) {
      EXPECT_EQ(got.pairs[k2].track, tracks[want[k2].first].id);
      EXPECT_EQ(got.pairs[k2].detection, want[k2].second);
    }
  }
}

TEST(Stage1, CrossingMatchesGatedEnumeration) {
  const AssociationParams p;
  const std::vector<MaskCandidate> tracks{{1, BBox{10, 10, 30, 50}, 0.9}, {2, BBox{22, 10, 42, 50}, 0.6},
                                          {3, BBox{34, 12, 54, 52}, 0.8}};
  const std::vector<Detection> dets{{{12, 10, 32, 50}, 0.9}, {{20, 11, 40, 51}, 0.9}, {{36, 10, 56, 50}, 0.9}};
  std::vector<std::vector<std::optional<double>>> c(3, std::vector<std::optional<double>>(3));
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t d = 0; d < 3; ++d) {
      const double iou = oracle::box_iou(*tracks[r].mask_box, dets[d].box);
      const double cost = 0.5 * (1.0 - iou) + 0.5 * (1.0 - tracks[r].mean_score);
      if (iou > 0.0 && cost <= 0.8) c[r][d] = cost;
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> want;
  brute_total(c, &want);
  const MatchResult got = stage1_match(tracks, dets, all_of(3), p);
  ASSERT_EQ(got.pairs.size(), want.size());
  for (std::size_t k = 0; k < want.size(); ++k) {
    EXPECT_EQ(got.pairs[k].track, tracks[want[k].first].id);
    EXPECT_EQ(got.pairs[k].detection, want[k].second);
  }
}

TEST(Stage2, Examples) {
  const AssociationParams p;
  const std::vector<BoxCandidate> tracks{{7, {0, 0, 10, 10}, 3}};
  const std::vector<Detection> same{{{0, 0, 10, 10}, 0.9}};
  const MatchResult r = stage2_match(tracks, same, all_of(1), p);
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_EQ(r.pairs[0], (MatchPair{7, 0, 2}));
  const std::vector<Detection> far{{{40, 40, 50, 50}, 0.9}, {{20, 0, 30, 10}, 0.9}};
  EXPECT_TRUE(stage2_match(tracks, far, all_of(2), p).pairs.empty());
}

TEST(Stage2, RandomMatchesGatedEnumeration) {
  oracle::Rng rng(41);
  const AssociationParams p;
  for (int k = 0; k < 200; ++k) {
    std::vector<BoxCandidate> tracks;
    std::vector<Detection> dets;
    for (int i = 0; i < 2; ++i) tracks.push_back({i + 1, oracle::random_box(rng, 20, 20), 0});
    for (int j = 0; j < 3; ++j) dets.push_back({oracle::random_box(rng, 20, 20), 0.9});
    std::vector<std::vector<std::optional<double>>> c(2, std::vector<std::optional<double>>(3));
    for (std::size_t r = 0; r < 2; ++r) {
      for (std::size_t d = 0; d < 3; ++d) {
        const double iou = oracle::box_iou(tracks[r].box, dets[d].box);
        if (iou >= 0.3) c[r][d] = 1.0 - iou;
      }
    }
    std::vector<std::pair<std::size_t, std::size_t>> want;
    const double total = brute_total(c, &want);
    const MatchResult got = stage2_match(tracks, dets, all_of(3), p);
    ASSERT_EQ(got.pairs.size(), want.size());
    double sum = 0.0;
    for (const MatchPair& m : got.pairs) {
      sum += 1.0 - oracle::box_iou(tracks[static_cast<std::size_t>(m.track - 1)].box, dets[m.detection].box);
    }
    EXPECT_NEAR(sum, total, 1e-12);
  }
}

TEST(Stage3, TemporalAndSpatialGates) {
  const AssociationParams p;
  const std::vector<Detection> dets{{{0, 0, 10, 10}, 0.9}};
  const std::vector<BoxCandidate> recent{{4, {0, 0, 10, 10}, 0}};
  const MatchResult r = stage3_match(recent, dets, all_of(1), 100, p);
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_EQ(r.pairs[0].stage, 3);
  EXPECT_EQ(stage3_match(recent, dets, all_of(1), 150, p).pairs.size(), 1u);
  EXPECT_TRUE(stage3_match(recent, dets, all_of(1), 151, p).pairs.empty());
  EXPECT_TRUE(stage3_match(recent, dets, all_of(1), 200, p).pairs.empty());
  const std::vector<BoxCandidate> elsewhere{{4, {100, 100, 110, 110}, 50}};
  EXPECT_TRUE(stage3_match(elsewhere, dets, all_of(1), 100, p).pairs.empty());
}

TEST(InitializeTracks, ConfidenceGate) {
  const AssociationParams p;
  IdAllocator ids;
  const std::vector<Detection> dets{{{0, 0, 10, 10}, 0.95}, {{20, 0, 30, 10}, 0.2}};
  const std::vector<double> dens{0.0, 0.0};
  const std::vector<Track> born = initialize_new_tracks(dets, all_of(2), dens, 5, p, ids, 10);
  ASSERT_EQ(born.size(), 1u);
  EXPECT_EQ(born[0].id, 1);
  EXPECT_EQ(born[0].birth_frame, 5);
  EXPECT_EQ(born[0].last_matched_det, (BBox{0, 0, 10, 10}));
  EXPECT_EQ(ids.peek(), 2);
}

TEST(SaOa, EmptyDetectionsReclassify) {
  const AssociationParams p;
  IdAllocator ids;
  std::vector<Track> tracks{track(1, TrackState::Active, {0, 0, 10, 10}, 0, 0.9),
                            track(2, TrackState::Active, {50, 0, 60, 10}, 0, 0.1)};
  const std::map<TrackId, std::optional<BBox>> masks{{1, BBox{0, 0, 10, 10}}, {2, BBox{50, 0, 60, 10}}};
  const SaOaResult r = sa_oa(tracks, masks, {}, 1, p, ids, 10);
  EXPECT_TRUE(r.match.pairs.empty());
  EXPECT_EQ(r.match.unmatched_tracks, (std::vector<TrackId>{1, 2}));
  EXPECT_EQ(tracks[0].state, TrackState::Occluded);
  EXPECT_EQ(tracks[1].state, TrackState::FrameOut);
}

TEST(SaOa, StagePrecedenceAndPartition) {
  oracle::Rng rng(99);
  for (int k = 0; k < 200; ++k) {
    AssociationParams p;
    IdAllocator ids;
    for (int i = 0; i < 10; ++i) ids.next();
    std::vector<Track> tracks;
    std::map<TrackId, std::optional<BBox>> masks;
    const TrackState states[] = {TrackState::Active, TrackState::Occluded, TrackState::FrameOut};
    for (int i = 0; i < 5; ++i) {
      Track t = track(i + 1, states[oracle::rand_int(rng, 0, 2)], oracle::random_box(rng, 40, 40),
                      oracle::rand_int(rng, 0, 9));
      t.history.push(oracle::rand_real(rng, 0.0, 1.0));
      if (t.state != TrackState::FrameOut) masks[t.id] = oracle::random_box(rng, 40, 40);
      tracks.push_back(t);
    }
    std::vector<Detection> dets;
    for (int j = oracle::rand_int(rng, 0, 6); j > 0; --j) {
      dets.push_back({oracle::random_box(rng, 40, 40), oracle::rand_real(rng, 0.0, 1.0)});
    }
    std::map<TrackId, TrackState> before;
    for (const Track& t : tracks) before[t.id] = t.state;
    const SaOaResult r = sa_oa(tracks, masks, dets, 10, p, ids, 10);

    std::set<std::size_t> seen;
    for (const MatchPair& m : r.match.pairs) {
      EXPECT_TRUE(seen.insert(m.detection).second);
      if (m.stage == 3) {
        EXPECT_EQ(before.at(m.track), TrackState::FrameOut);
      }
      if (m.stage != 3) {
        EXPECT_NE(before.at(m.track), TrackState::FrameOut);
      }
    }
    for (std::size_t d : r.match.unmatched_detections) {
      EXPECT_TRUE(seen.insert(d).second);
      EXPECT_LT(dets[d].confidence, p.theta_new);
    }
    EXPECT_EQ(seen.size() + r.new_tracks.size(), dets.size());
    for (TrackId id : r.new_tracks) EXPECT_GT(id, 10);
  }
}

TEST(SaOa, RejectsEmptyDetectionBox) {
  IdAllocator ids;
  std::vector<Track> tracks;
  const std::vector<Detection> dets{{{0, 0, 0, 10}, 0.9}};
  EXPECT_THROW(sa_oa(tracks, {}, dets, 0, {}, ids, 10), Error);
}
