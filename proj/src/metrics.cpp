#include "crowdtrack/metrics.hpp"

#include <cmath>
#include <vector>

#include "crowdtrack/hungarian.hpp"

namespace crowdtrack {

namespace {

struct IdIndex {
  std::map<TrackId, std::size_t> index;
  std::vector<TrackId> ids;

  explicit IdIndex(const TrajectorySet& set) {
    for (const auto& [id, boxes] : set) {
      index[id] = ids.size();
      ids.push_back(id);
    }
  }
};

}  // namespace

double idf1(const TrajectorySet& gt, const TrajectorySet& pred, double iou_gate) {
  const std::size_t n_gt = box_count(gt);
  const std::size_t n_pred = box_count(pred);
  if (n_gt == 0 && n_pred == 0) return 1.0;
  if (n_gt == 0 || n_pred == 0) return 0.0;

  const IdIndex gi(gt);
  const IdIndex pi(pred);
  std::vector<std::int64_t> hits(gi.ids.size() * pi.ids.size(), 0);
  const FrameBoxes gf = by_frame(gt);
  const FrameBoxes pf = by_frame(pred);
  for (const auto& [frame, gboxes] : gf) {
    auto it = pf.find(frame);
    if (it == pf.end()) continue;
    for (const auto& [g, gb] : gboxes) {
      for (const auto& [p, pb] : it->second) {
        if (bbox_iou(gb, pb) >= iou_gate) ++hits[gi.index.at(g) * pi.ids.size() + pi.index.at(p)];
      }
    }
  }
  std::int64_t top = 0;
  for (std::int64_t h : hits) top = std::max(top, h);
  CostMatrix costs(gi.ids.size(), pi.ids.size());
  for (std::size_t r = 0; r < gi.ids.size(); ++r) {
    for (std::size_t c = 0; c < pi.ids.size(); ++c) {
      costs.set(r, c, static_cast<double>(top - hits[r * pi.ids.size() + c]));
    }
  }
  std::int64_t idtp = 0;
  for (const auto& [r, c] : hungarian(costs).pairs) idtp += hits[r * pi.ids.size() + c];
  return 2.0 * static_cast<double>(idtp) / static_cast<double>(n_gt + n_pred);
}

std::map<FrameIndex, std::map<TrackId, TrackId>> frame_matches(const TrajectorySet& gt,
                                                              const TrajectorySet& pred,
                                                              double iou_gate) {
  std::map<FrameIndex, std::map<TrackId, TrackId>> out;
  const FrameBoxes gf = by_frame(gt);
  const FrameBoxes pf = by_frame(pred);
  for (const auto& [frame, gboxes] : gf) {
    auto it = pf.find(frame);
    if (it == pf.end()) continue;
    std::vector<TrackId> gids;
    std::vector<TrackId> pids;
    for (const auto& [g, b] : gboxes) gids.push_back(g);
    for (const auto& [p, b] : it->second) pids.push_back(p);
    CostMatrix costs(gids.size(), pids.size());
    for (std::size_t r = 0; r < gids.size(); ++r) {
      for (std::size_t c = 0; c < pids.size(); ++c) {
        const double iou = bbox_iou(gboxes.at(gids[r]), it->second.at(pids[c]));
        if (iou >= iou_gate) {
          costs.set(r, c, 1.0 - iou);
        } else {
          costs.forbid(r, c);
        }
      }
    }
    auto& row = out[frame];
    for (const auto& [r, c] : hungarian(costs).pairs) row[gids[r]] = pids[c];
  }
  return out;
}

std::int64_t id_switches(const TrajectorySet& gt, const TrajectorySet& pred, double iou_gate) {
  std::map<TrackId, TrackId> last;
  std::int64_t switches = 0;
  for (const auto& [frame, row] : frame_matches(gt, pred, iou_gate)) {
    for (const auto& [g, p] : row) {
      auto it = last.find(g);
      if (it != last.end() && it->second != p) ++switches;
      last[g] = p;
    }
  }
  return switches;
}

std::map<int, HotaBreakdown> hota_by_alpha(const TrajectorySet& gt, const TrajectorySet& pred) {
  std::map<int, HotaBreakdown> out;
  const std::size_t n_gt = box_count(gt);
  const std::size_t n_pred = box_count(pred);
  for (int k = 1; k <= 19; ++k) out[k].alpha = k / 20.0;
  if (n_gt == 0 && n_pred == 0) {
    for (auto& [k, b] : out) b.det_a = b.ass_a = b.hota = 1.0;
    return out;
  }
  if (n_gt == 0 || n_pred == 0) return out;

  const IdIndex gi(gt);
  const IdIndex pi(pred);
  const std::size_t np = pi.ids.size();
  const FrameBoxes gf = by_frame(gt);
  const FrameBoxes pf = by_frame(pred);

  struct FrameSim {
    std::vector<std::size_t> g;
    std::vector<std::size_t> p;
    std::vector<double> iou;
  };
  std::vector<FrameSim> frames;
  std::vector<double> potential(gi.ids.size() * np, 0.0);
  std::vector<double> gt_count(gi.ids.size(), 0.0);
  std::vector<double> pr_count(np, 0.0);
  for (const auto& [id, boxes] : gt) gt_count[gi.index.at(id)] = static_cast<double>(boxes.size());
  for (const auto& [id, boxes] : pred) pr_count[pi.index.at(id)] = static_cast<double>(boxes.size());

  for (const auto& [frame, gboxes] : gf) {
    auto it = pf.find(frame);
    if (it == pf.end()) continue;
    FrameSim fs;
    for (const auto& [g, b] : gboxes) fs.g.push_back(gi.index.at(g));
    for (const auto& [p, b] : it->second) fs.p.push_back(pi.index.at(p));
    std::vector<BBox> gb;
    std::vector<BBox> pb;
    for (const auto& [g, b] : gboxes) gb.push_back(b);
    for (const auto& [p, b] : it->second) pb.push_back(b);
    fs.iou.resize(fs.g.size() * fs.p.size());
    std::vector<double> row_sum(fs.g.size(), 0.0);
    std::vector<double> col_sum(fs.p.size(), 0.0);
    for (std::size_t r = 0; r < fs.g.size(); ++r) {
      for (std::size_t c = 0; c < fs.p.size(); ++c) {
        const double s = bbox_iou(gb[r], pb[c]);
        fs.iou[r * fs.p.size() + c] = s;
        row_sum[r] += s;
        col_sum[c] += s;
      }
    }
    // Soft co-occurrence used for the global alignment score.
    for (std::size_t r = 0; r < fs.g.size(); ++r) {
      for (std::size_t c = 0; c < fs.p.size(); ++c) {
        const double s = fs.iou[r * fs.p.size() + c];
        const double denom = row_sum[r] + col_sum[c] - s;
        if (denom > 1e-12) potential[fs.g[r] * np + fs.p[c]] += s / denom;
      }
    }
    frames.push_back(std::move(fs));
  }

  std::vector<double> align(potential.size(), 0.0);
  for (std::size_t g = 0; g < gi.ids.size(); ++g) {
    for (std::size_t p = 0; p < np; ++p) {
      const double pm = potential[g * np + p];
      align[g * np + p] = pm / (gt_count[g] + pr_count[p] - pm);
    }
  }

  for (auto& [k, b] : out) {
    const double alpha = b.alpha;
    std::vector<double> match_count(potential.size(), 0.0);
    double tp = 0.0;
    for (const FrameSim& fs : frames) {
      CostMatrix costs(fs.g.size(), fs.p.size());
      for (std::size_t r = 0; r < fs.g.size(); ++r) {
        for (std::size_t c = 0; c < fs.p.size(); ++c) {
          const double s = fs.iou[r * fs.p.size() + c];
          if (s >= alpha - 1e-12 && s > 0.0) {
            costs.set(r, c, 1.0 - align[fs.g[r] * np + fs.p[c]] * s);
          } else {
            costs.forbid(r, c);
          }
        }
      }
      for (const auto& [r, c] : hungarian(costs).pairs) {
        match_count[fs.g[r] * np + fs.p[c]] += 1.0;
        tp += 1.0;
      }
    }
    if (tp == 0.0) continue;
    double ass = 0.0;
    for (std::size_t g = 0; g < gi.ids.size(); ++g) {
      for (std::size_t p = 0; p < np; ++p) {
        const double mc = match_count[g * np + p];
        if (mc > 0.0) ass += mc * mc / (gt_count[g] + pr_count[p] - mc);
      }
    }
    b.ass_a = ass / tp;
    b.det_a = tp / (static_cast<double>(n_gt) + static_cast<double>(n_pred) - tp);
    b.hota = std::sqrt(b.det_a * b.ass_a);
  }
  return out;
}

double hota(const TrajectorySet& gt, const TrajectorySet& pred) {
  double sum = 0.0;
  const auto by_alpha = hota_by_alpha(gt, pred);
  for (const auto& [k, b] : by_alpha) sum += b.hota;
  return sum / static_cast<double>(by_alpha.size());
}

MetricReport evaluate(const TrajectorySet& gt, const TrajectorySet& pred) {
  return {hota(gt, pred), idf1(gt, pred), id_switches(gt, pred)};
}

std::optional<bool> same_id_after_reentry(const std::map<FrameIndex, std::map<TrackId, TrackId>>& matches,
                                          TrackId gt_id, FrameIndex exit, FrameIndex reentry, int window) {
  std::optional<TrackId> before;
  std::optional<TrackId> after;
  for (auto it = matches.begin(); it != matches.end() && it->first < exit; ++it) {
    auto m = it->second.find(gt_id);
    if (m != it->second.end()) before = m->second;
  }
  for (auto it = matches.lower_bound(reentry); it != matches.end() && it->first < reentry + window; ++it) {
    auto m = it->second.find(gt_id);
    if (m != it->second.end()) {
      after = m->second;
      break;
    }
  }
  if (!before || !after) return std::nullopt;
  return *before == *after;
}

}  // namespace crowdtrack
