#include "crowdtrack/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "crowdtrack/error.hpp"

namespace crowdtrack {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void validate(const ScenarioSpec& spec) {
  auto fail = [](const std::string& path, const std::string& what) {
    throw Error(fmt::format("scenario field `{}`: {}", path, what));
  };
  if (spec.width <= 0) fail("grid.width", "must be positive");
  if (spec.height <= 0) fail("grid.height", "must be positive");
  if (spec.fps <= 0) fail("fps", "must be positive");
  if (spec.duration <= 0) fail("duration", "must be positive");
  const int n = static_cast<int>(spec.actors.size());
  for (int k = 0; k < n; ++k) {
    const ActorSpec& a = spec.actors[k];
    const std::string base = fmt::format("actors[{}]", k);
    if (a.width <= 0) fail(base + ".size", "width must be positive");
    if (a.height <= 0) fail(base + ".size", "height must be positive");
    if (a.waypoints.empty()) fail(base + ".waypoints", "needs at least one waypoint");
    for (std::size_t w = 0; w < a.waypoints.size(); ++w) {
      const Waypoint& wp = a.waypoints[w];
      const std::string path = fmt::format("{}.waypoints[{}]", base, w);
      if (!std::isfinite(wp.x) || !std::isfinite(wp.y)) fail(path, "coordinates must be finite");
      const bool needs_speed = w > 0 || (a.loop && a.waypoints.size() > 1);
      if (needs_speed && !(wp.speed > 0.0)) fail(path + ".speed", "must be positive");
      if (wp.hold < 0) fail(path + ".hold", "must be non-negative");
    }
  }
  for (std::size_t c = 0; c < spec.crossings.size(); ++c) {
    const CrossingEvent& e = spec.crossings[c];
    const std::string path = fmt::format("events.crossings[{}]", c);
    if (e.a < 0 || e.a >= n || e.b < 0 || e.b >= n || e.a == e.b) fail(path, "needs two distinct actor indices");
    if (e.start < 0 || e.end < e.start) fail(path, "frame range must satisfy 0 <= start <= end");
  }
  for (std::size_t x = 0; x < spec.exits.size(); ++x) {
    const ExitEvent& e = spec.exits[x];
    const std::string path = fmt::format("events.exits[{}]", x);
    if (e.actor < 0 || e.actor >= n) fail(path + ".actor", "unknown actor index");
    if (e.exit < 0) fail(path + ".exit", "must be non-negative");
    if (e.reentry <= e.exit) fail(path + ".reentry", "must be after exit");
  }
  const DetectorModel& d = spec.detector;
  if (!(d.jitter_sigma >= 0.0)) fail("detector.jitter_sigma", "must be non-negative");
  if (!(d.miss_base >= 0.0 && d.miss_base <= 1.0)) fail("detector.miss_base", "must lie in [0, 1]");
  if (!(d.miss_slope >= 0.0)) fail("detector.miss_slope", "must be non-negative");
  if (!(d.conf_spread >= 0.0 && d.conf_spread <= 1.0)) fail("detector.conf_spread", "must lie in [0, 1]");
}

namespace {

constexpr double kMeetSpacingX = 9.0;
constexpr double kPileSpacingX = 5.0;  // groups of three or more
constexpr double kMeetSpacingY = 1.0;
constexpr double kMeetRamp = 0.6;  // share of each half spent closing in

struct Point {
  double x = 0.0;
  double y = 0.0;
};

std::vector<Point> base_path(const ActorSpec& a, int duration) {
  std::vector<Point> out(duration);
  const auto& wps = a.waypoints;
  const std::size_t n = wps.size();
  Point p{wps[0].x, wps[0].y};
  std::size_t target = 1;
  int hold = wps[0].hold;
  for (int f = 0; f < duration; ++f) {
    out[f] = p;
    if (hold > 0) {
      --hold;
      continue;
    }
    if (target >= n) {
      if (!a.loop || n < 2) continue;
      target = 0;
    }
    const Waypoint& t = wps[target];
    const double dx = t.x - p.x;
    const double dy = t.y - p.y;
    const double dist = std::sqrt(dx * dx + dy * dy);
    if (dist <= t.speed) {
      p = {t.x, t.y};
      hold = t.hold;
      ++target;
      if (a.loop && target == n) target = 0;
    } else {
      p.x += dx / dist * t.speed;
      p.y += dy / dist * t.speed;
    }
  }
  return out;
}

int find_root(std::vector<int>& parent, int v) {
  while (parent[v] != v) {
    parent[v] = parent[parent[v]];
    v = parent[v];
  }
  return v;
}

}  // namespace

GroundTruth::GroundTruth(int width, int height, std::vector<std::vector<ActorFrame>> frames)
    : width_(width), height_(height), frames_(std::move(frames)) {}

TrajectorySet GroundTruth::trajectories() const {
  TrajectorySet out;
  for (int f = 0; f < frame_count(); ++f) {
    for (int a = 0; a < actor_count(); ++a) {
      const ActorFrame& af = frames_[f][a];
      if (af.on_screen) out[a + 1][f] = af.box;
    }
  }
  return out;
}

namespace {

struct Paths {
  std::vector<std::vector<Point>> pos;
  std::vector<std::vector<char>> hidden;
};

// Centre of every actor at every frame, after exits and crossings.
Paths actor_paths(const ScenarioSpec& spec) {
  const int n = static_cast<int>(spec.actors.size());
  const int frames = spec.duration;

  std::vector<std::vector<Point>> pos(n);
  std::vector<std::vector<char>> hidden(n, std::vector<char>(frames, 0));
  for (int a = 0; a < n; ++a) pos[a] = base_path(spec.actors[a], frames);

  std::vector<ExitEvent> exits = spec.exits;
  std::sort(exits.begin(), exits.end(), [](const ExitEvent& l, const ExitEvent& r) {
    return l.exit != r.exit ? l.exit < r.exit : l.actor < r.actor;
  });
  for (const ExitEvent& e : exits) {
    for (int f = e.exit; f < std::min(e.reentry, frames); ++f) hidden[e.actor][f] = 1;
    if (e.reentry >= frames) continue;
    const double dx = e.x - pos[e.actor][e.reentry].x;
    const double dy = e.y - pos[e.actor][e.reentry].y;
    for (int f = e.reentry; f < frames; ++f) {
      pos[e.actor][f].x += dx;
      pos[e.actor][f].y += dy;
    }
  }

  if (!spec.crossings.empty()) {
    std::vector<std::vector<Point>> pulled = pos;
    std::vector<int> parent(n);
    std::vector<double> weight(n);
    for (int f = 0; f < frames; ++f) {
      std::iota(parent.begin(), parent.end(), 0);
      std::fill(weight.begin(), weight.end(), 0.0);
      bool any = false;
      for (const CrossingEvent& e : spec.crossings) {
        if (f < e.start || f > e.end) continue;
        if (hidden[e.a][f] || hidden[e.b][f]) continue;
        const double mid = 0.5 * (e.start + e.end);
        const double half = 0.5 * (e.end - e.start);
        const double h =
            half > 0.0 ? std::clamp((1.0 - std::abs(f - mid) / half) / kMeetRamp, 0.0, 1.0) : 1.0;
        parent[find_root(parent, e.a)] = find_root(parent, e.b);
        weight[e.a] = std::max(weight[e.a], h);
        weight[e.b] = std::max(weight[e.b], h);
        any = true;
      }
      if (!any) continue;
      std::vector<Point> sum(n);
      std::vector<int> count(n, 0);
      std::vector<FrameIndex> group_start(n, frames);
      for (const CrossingEvent& e : spec.crossings) {
        if (f < e.start || f > e.end || hidden[e.a][f] || hidden[e.b][f]) continue;
        const int r = find_root(parent, e.a);
        group_start[r] = std::min(group_start[r], e.start);
      }
      for (int a = 0; a < n; ++a) {
        if (weight[a] <= 0.0) continue;
        const int r = find_root(parent, a);
        sum[r].x += pos[a][f].x;
        sum[r].y += pos[a][f].y;
        ++count[r];
      }
      // Members meet side by side, ordered as they stood when the group formed.
      std::vector<std::vector<int>> members(n);
      for (int a = 0; a < n; ++a) {
        if (weight[a] > 0.0 && count[find_root(parent, a)] >= 2) members[find_root(parent, a)].push_back(a);
      }
      for (int r = 0; r < n; ++r) {
        std::vector<int>& group = members[r];
        if (group.size() < 2) continue;
        const FrameIndex f0 = std::min(group_start[r], f);
        std::sort(group.begin(), group.end(), [&](int l, int rr) {
          return pos[l][f0].x != pos[rr][f0].x ? pos[l][f0].x < pos[rr][f0].x : l < rr;
        });
        const Point c{sum[r].x / count[r], sum[r].y / count[r]};
        const double mid = 0.5 * (static_cast<double>(group.size()) - 1.0);
        const double spacing = group.size() > 2 ? kPileSpacingX : kMeetSpacingX;
        for (std::size_t k = 0; k < group.size(); ++k) {
          const int a = group[k];
          const Point target{c.x + (static_cast<double>(k) - mid) * spacing,
                             c.y + (static_cast<double>(k) - mid) * kMeetSpacingY};
          pulled[a][f].x = pos[a][f].x + weight[a] * (target.x - pos[a][f].x);
          pulled[a][f].y = pos[a][f].y + weight[a] * (target.y - pos[a][f].y);
        }
      }
    }
    pos = std::move(pulled);
  }
  return {std::move(pos), std::move(hidden)};
}

BBox shape_box(const ActorSpec& actor, const Point& c) {
  const int x0 = static_cast<int>(std::floor(c.x - actor.width / 2.0 + 0.5));
  const int y0 = static_cast<int>(std::floor(c.y - actor.height / 2.0 + 0.5));
  return {x0, y0, x0 + actor.width, y0 + actor.height};
}

}  // namespace

GroundTruth generate(const ScenarioSpec& spec) {
  validate(spec);
  const int n = static_cast<int>(spec.actors.size());
  const int frames = spec.duration;
  const Paths paths = actor_paths(spec);
  const auto& pos = paths.pos;
  const auto& hidden = paths.hidden;

  std::vector<std::vector<ActorFrame>> out(frames, std::vector<ActorFrame>(n));
  for (int f = 0; f < frames; ++f) {
    Mask covered(spec.width, spec.height);
    for (int a = n - 1; a >= 0; --a) {
      const ActorSpec& actor = spec.actors[a];
      ActorFrame& af = out[f][a];
      af.cx = pos[a][f].x;
      af.cy = pos[a][f].y;
      if (hidden[a][f]) {
        af.silhouette = Mask(spec.width, spec.height);
        af.visible = af.silhouette;
        continue;
      }
      const BBox shape = shape_box(actor, pos[a][f]);
      af.silhouette = actor.shape == ShapeKind::Rectangle
                          ? Mask::from_box(spec.width, spec.height, shape)
                          : Mask::from_ellipse(spec.width, spec.height, shape);
      af.on_screen = !af.silhouette.empty();
      if (!af.on_screen) {
        af.visible = af.silhouette;
        continue;
      }
      af.box = mask_enclosing_bbox(af.silhouette);
      af.visible = mask_difference(af.silhouette, covered);
      af.visibility = static_cast<double>(af.visible.area()) / static_cast<double>(af.silhouette.area());
      covered = mask_union(covered, af.silhouette);
    }
  }
  return GroundTruth(spec.width, spec.height, std::move(out));
}

std::vector<Detection> simulate_detections(const GroundTruth& gt, const DetectorModel& model,
                                           FrameIndex frame, std::uint64_t seed) {
  std::vector<Detection> dets;
  if (frame < 0 || frame >= gt.frame_count()) throw Error("simulate_detections: frame out of range");
  for (int a = 0; a < gt.actor_count(); ++a) {
    const ActorFrame& af = gt.at(frame, a);
    if (!af.on_screen) continue;
    boost::random::mt19937_64 rng(mix_seed(mix_seed(seed, static_cast<std::uint64_t>(frame)),
                                           static_cast<std::uint64_t>(a)));
    boost::random::uniform_real_distribution<double> unit(0.0, 1.0);
    boost::random::normal_distribution<double> normal(0.0, 1.0);
    const double u_miss = unit(rng);
    double jitter[4];
    for (double& j : jitter) j = normal(rng) * model.jitter_sigma;
    const double u_conf = unit(rng) * model.conf_spread;

    const double p_miss = std::clamp(model.miss_base + model.miss_slope * (1.0 - af.visibility), 0.0, 1.0);
    if (u_miss < p_miss) continue;
    BBox box{af.box.x_min + static_cast<int>(std::lround(jitter[0])),
             af.box.y_min + static_cast<int>(std::lround(jitter[1])),
             af.box.x_max + static_cast<int>(std::lround(jitter[2])),
             af.box.y_max + static_cast<int>(std::lround(jitter[3]))};
    box = clip_box(box, gt.width(), gt.height());
    if (box.empty()) continue;
    dets.push_back({box, af.visibility * (1.0 - u_conf)});
  }
  return dets;
}

// ---------------------------------------------------------------------------
// Standard suite

namespace {

using Rng = boost::random::mt19937_64;

double uniform(Rng& rng, double lo, double hi) {
  return boost::random::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(Rng& rng, int lo, int hi) {
  return boost::random::uniform_int_distribution<int>(lo, hi)(rng);
}

ActorSpec roaming_actor(Rng& rng, double x0, double x1, double y0, double y1, int stops,
                        double v0, double v1, int max_hold) {
  ActorSpec a;
  a.shape = uniform_int(rng, 0, 1) == 0 ? ShapeKind::Rectangle : ShapeKind::Ellipse;
  a.width = uniform_int(rng, 18, 24);
  a.height = uniform_int(rng, 38, 46);
  a.loop = true;
  for (int k = 0; k < stops; ++k) {
    a.waypoints.push_back(
        {uniform(rng, x0, x1), uniform(rng, y0, y1), uniform(rng, v0, v1), uniform_int(rng, 0, max_hold)});
  }
  return a;
}

ScenarioSpec basketball(std::uint64_t seed, int index) {
  Rng rng(seed);
  ScenarioSpec s;
  s.name = fmt::format("basketball-{:02d}", index);
  s.family = "basketball";
  s.duration = 300;
  s.seed = mix_seed(seed, 1);
  for (int a = 0; a < 10; ++a) s.actors.push_back(roaming_actor(rng, 40, 440, 50, 220, 6, 1.0, 2.5, 10));
  // Three-player pile-ups, then one-on-one crossings.
  int t = 30;
  for (int k = 0; k < 3; ++k) {
    const int a = uniform_int(rng, 0, 9);
    int b = uniform_int(rng, 0, 8);
    if (b >= a) ++b;
    int c = a;
    while (c == a || c == b) c = uniform_int(rng, 0, 9);
    const int len = uniform_int(rng, 20, 30);
    s.crossings.push_back({a, b, t, t + len});
    s.crossings.push_back({b, c, t, t + len});
    t += len + uniform_int(rng, 15, 35);
  }
  for (int k = 0; k < 3 && t < s.duration - 30; ++k) {
    const int a = uniform_int(rng, 0, 9);
    int b = uniform_int(rng, 0, 8);
    if (b >= a) ++b;
    const int len = uniform_int(rng, 16, 26);
    s.crossings.push_back({a, b, t, t + len});
    t += len + uniform_int(rng, 10, 25);
  }
  return s;
}

ScenarioSpec volleyball(std::uint64_t seed, int index) {
  Rng rng(seed);
  ScenarioSpec s;
  s.name = fmt::format("volleyball-{:02d}", index);
  s.family = "volleyball";
  s.duration = 300;
  s.seed = mix_seed(seed, 1);
  for (int team = 0; team < 2; ++team) {
    const double net_y = team == 0 ? 115.0 : 150.0;
    for (int k = 0; k < 6; ++k) {
      const double home = 90.0 + 300.0 * k / 5.0 + uniform(rng, -8, 8);
      ActorSpec a = roaming_actor(rng, home - 35, home + 35, net_y - 10, net_y + 10, 3, 0.8, 2.0, 15);
      s.actors.push_back(std::move(a));
    }
  }
  int t = 25;
  while (t < s.duration - 30) {
    const int a = uniform_int(rng, 0, 5);
    const int b = 6 + std::clamp(a + uniform_int(rng, -1, 1), 0, 5);
    const int len = uniform_int(rng, 16, 26);
    s.crossings.push_back({a, b, t, t + len});
    if (uniform_int(rng, 0, 2) == 0) {
      const int c = a < 5 ? a + 1 : a - 1;
      s.crossings.push_back({b, c, t, t + len});
    }
    t += len + uniform_int(rng, 10, 30);
  }
  return s;
}

ScenarioSpec soccer(std::uint64_t seed, int index) {
  Rng rng(seed);
  ScenarioSpec s;
  s.name = fmt::format("soccer-{:02d}", index);
  s.family = "soccer";
  s.duration = 450;
  s.seed = mix_seed(seed, 1);
  for (int a = 0; a < 8; ++a) {
    const double cx = 70.0 + 340.0 * (a % 4) / 3.0;
    const double cy = a < 4 ? 80.0 : 190.0;
    s.actors.push_back(roaming_actor(rng, cx - 35, cx + 35, cy - 25, cy + 25, 3, 0.4, 1.2, 20));
  }
  s.crossings.push_back({uniform_int(rng, 0, 3), uniform_int(rng, 4, 7), 60, 80});

  // Frame-outs are placed where the leaving actor is isolated both when it
  // leaves and where it comes back, so each one is a clean re-entry test.
  std::vector<int> gaps;
  for (int k = 0; k < 3; ++k) gaps.push_back(uniform_int(rng, 40, 130));
  if (index % 2 == 0) gaps.push_back(uniform_int(rng, 180, 220));
  std::vector<int> busy_until(8, -1);
  Paths paths = actor_paths(s);
  auto box_at = [&](int actor, FrameIndex f, double dx, double dy) {
    const Point c{paths.pos[actor][f].x + dx, paths.pos[actor][f].y + dy};
    return shape_box(s.actors[actor], c);
  };
  // Nobody else within `margin` pixels of the box.
  auto isolated = [&](int actor, FrameIndex f, const BBox& box, int margin) {
    const BBox grown{box.x_min - margin, box.y_min - margin, box.x_max + margin, box.y_max + margin};
    for (int b = 0; b < static_cast<int>(s.actors.size()); ++b) {
      if (b == actor || paths.hidden[b][f]) continue;
      if (bbox_intersection_area(grown, box_at(b, f, 0, 0)) > 0) return false;
    }
    return true;
  };
  const BBox grid{0, 0, s.width, s.height};
  int attempts = 0;
  for (const int gap : gaps) {
    while (attempts++ < 2000) {
      const int actor = uniform_int(rng, 0, 7);
      const int exit = uniform_int(rng, 100, s.duration - gap - 40);
      if (exit <= busy_until[actor] || paths.hidden[actor][exit - 1]) continue;
      bool clash = false;
      for (const CrossingEvent& c : s.crossings) {
        if ((c.a == actor || c.b == actor) && exit + gap + 20 >= c.start && exit - 20 <= c.end) clash = true;
      }
      if (clash) continue;
      const Point at = paths.pos[actor][exit - 1];
      const ExitEvent e{actor, exit, exit + gap, at.x + uniform(rng, -4, 4), at.y + uniform(rng, -3, 3)};
      const double dx = e.x - paths.pos[actor][e.reentry].x;
      const double dy = e.y - paths.pos[actor][e.reentry].y;
      const BBox spot = box_at(actor, exit - 1, 0, 0);
      bool ok = bbox_intersection_area(spot, grid) == spot.area() && isolated(actor, exit - 1, spot, 8);
      for (FrameIndex f = e.reentry; f < std::min(e.reentry + 10, s.duration) && ok; ++f) {
        const BBox back = box_at(actor, f, dx, dy);
        ok = bbox_intersection_area(back, grid) == back.area() && isolated(actor, f, back, 8);
      }
      // Nobody else may wander through the vacated spot while it is away.
      for (FrameIndex f = exit; f < e.reentry && ok; ++f) ok = isolated(actor, f, spot, 0);
      if (!ok) continue;
      s.exits.push_back(e);
      busy_until[actor] = e.reentry + 20;
      paths = actor_paths(s);
      break;
    }
  }
  return s;
}

}  // namespace

std::vector<ScenarioSpec> standard_suite(std::uint64_t seed) {
  std::vector<ScenarioSpec> suite;
  for (int i = 0; i < 7; ++i) suite.push_back(basketball(mix_seed(seed, 100 + i), i));
  for (int i = 0; i < 7; ++i) suite.push_back(volleyball(mix_seed(seed, 200 + i), i));
  for (int i = 0; i < 6; ++i) suite.push_back(soccer(mix_seed(seed, 300 + i), i));
  return suite;
}

ScenarioSpec single_actor_scenario() {
  ScenarioSpec s;
  s.name = "single-actor";
  s.family = "demo";
  s.duration = 120;
  s.seed = 7;
  s.detector = {0.0, 0.0, 0.0, 0.2};
  ActorSpec a;
  a.waypoints = {{60, 135, 1.0, 0}, {420, 135, 2.0, 0}};
  s.actors.push_back(a);
  return s;
}

ScenarioSpec crossing_scenario() {
  ScenarioSpec s;
  s.name = "two-actor-crossing";
  s.family = "demo";
  s.duration = 200;
  s.seed = 5;
  s.detector = {0.5, 0.0, 1.0, 0.2};
  ActorSpec a;
  a.waypoints = {{150, 80, 1.0, 0}, {240, 135, 1.5, 40}, {150, 200, 1.5, 0}};
  ActorSpec b;
  b.waypoints = {{330, 80, 1.0, 0}, {243, 135, 1.5, 40}, {330, 200, 1.5, 0}};
  s.actors = {a, b};
  return s;
}

std::vector<ScenarioSpec> builtin_scenarios(std::uint64_t seed) {
  std::vector<ScenarioSpec> all = standard_suite(seed);
  all.push_back(single_actor_scenario());
  all.push_back(crossing_scenario());
  return all;
}

// ---------------------------------------------------------------------------
// YAML

namespace {

template <class T>
T read_field(const YAML::Node& node, const std::string& key, const std::string& path, T fallback) {
  const YAML::Node v = node[key];
  if (!v) return fallback;
  try {
    return v.as<T>();
  } catch (const YAML::Exception&) {
    throw Error(fmt::format("scenario field `{}{}`: cannot parse value", path, key));
  }
}

void reject_unknown(const YAML::Node& node, std::initializer_list<const char*> keys,
                    const std::string& path) {
  if (!node.IsMap()) throw Error(fmt::format("scenario field `{}`: expected a mapping", path));
  for (const auto& kv : node) {
    const std::string k = kv.first.as<std::string>();
    if (std::find_if(keys.begin(), keys.end(), [&](const char* e) { return k == e; }) == keys.end()) {
      throw Error(fmt::format("scenario field `{}{}`: unknown key", path.empty() ? "" : path + ".", k));
    }
  }
}

}  // namespace

ScenarioSpec parse_scenario(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw Error(fmt::format("scenario YAML parse error: {}", e.what()));
  }
  if (!root || root.IsNull()) throw Error("scenario file is empty");
  reject_unknown(root, {"name", "family", "grid", "fps", "duration", "seed", "detector", "actors", "events"}, "");
  ScenarioSpec s;
  s.name = read_field<std::string>(root, "name", "", "");
  s.family = read_field<std::string>(root, "family", "", "");
  if (const YAML::Node g = root["grid"]) {
    reject_unknown(g, {"width", "height"}, "grid");
    s.width = read_field<int>(g, "width", "grid.", s.width);
    s.height = read_field<int>(g, "height", "grid.", s.height);
  }
  s.fps = read_field<int>(root, "fps", "", s.fps);
  s.duration = read_field<int>(root, "duration", "", s.duration);
  s.seed = read_field<std::uint64_t>(root, "seed", "", s.seed);
  if (const YAML::Node d = root["detector"]) {
    reject_unknown(d, {"jitter_sigma", "miss_base", "miss_slope", "conf_spread"}, "detector");
    s.detector.jitter_sigma = read_field<double>(d, "jitter_sigma", "detector.", s.detector.jitter_sigma);
    s.detector.miss_base = read_field<double>(d, "miss_base", "detector.", s.detector.miss_base);
    s.detector.miss_slope = read_field<double>(d, "miss_slope", "detector.", s.detector.miss_slope);
    s.detector.conf_spread = read_field<double>(d, "conf_spread", "detector.", s.detector.conf_spread);
  }
  if (const YAML::Node actors = root["actors"]) {
    for (std::size_t k = 0; k < actors.size(); ++k) {
      const YAML::Node a = actors[k];
      const std::string path = fmt::format("actors[{}]", k);
      reject_unknown(a, {"shape", "size", "loop", "waypoints"}, path);
      ActorSpec actor;
      const std::string shape = read_field<std::string>(a, "shape", path + ".", "rectangle");
      if (shape == "rectangle") {
        actor.shape = ShapeKind::Rectangle;
      } else if (shape == "ellipse") {
        actor.shape = ShapeKind::Ellipse;
      } else {
        throw Error(fmt::format("scenario field `{}.shape`: expected rectangle or ellipse", path));
      }
      if (const YAML::Node size = a["size"]) {
        if (!size.IsSequence() || size.size() != 2) {
          throw Error(fmt::format("scenario field `{}.size`: expected [width, height]", path));
        }
        actor.width = size[0].as<int>();
        actor.height = size[1].as<int>();
      }
      actor.loop = read_field<bool>(a, "loop", path + ".", false);
      if (const YAML::Node wps = a["waypoints"]) {
        for (std::size_t w = 0; w < wps.size(); ++w) {
          const YAML::Node wp = wps[w];
          const std::string wpath = fmt::format("{}.waypoints[{}]", path, w);
          if (!wp.IsSequence() || wp.size() < 2 || wp.size() > 4) {
            throw Error(fmt::format("scenario field `{}`: expected [x, y, speed?, hold?]", wpath));
          }
          Waypoint p;
          try {
            p.x = wp[0].as<double>();
            p.y = wp[1].as<double>();
            if (wp.size() > 2) p.speed = wp[2].as<double>();
            if (wp.size() > 3) p.hold = wp[3].as<int>();
          } catch (const YAML::Exception&) {
            throw Error(fmt::format("scenario field `{}`: non-numeric entry", wpath));
          }
          actor.waypoints.push_back(p);
        }
      }
      s.actors.push_back(std::move(actor));
    }
  }
  if (const YAML::Node ev = root["events"]) {
    reject_unknown(ev, {"crossings", "exits"}, "events");
    if (const YAML::Node cs = ev["crossings"]) {
      for (std::size_t k = 0; k < cs.size(); ++k) {
        const std::string path = fmt::format("events.crossings[{}]", k);
        reject_unknown(cs[k], {"a", "b", "start", "end"}, path);
        s.crossings.push_back({read_field<int>(cs[k], "a", path + ".", -1), read_field<int>(cs[k], "b", path + ".", -1),
                               read_field<int>(cs[k], "start", path + ".", 0),
                               read_field<int>(cs[k], "end", path + ".", -1)});
      }
    }
    if (const YAML::Node xs = ev["exits"]) {
      for (std::size_t k = 0; k < xs.size(); ++k) {
        const std::string path = fmt::format("events.exits[{}]", k);
        reject_unknown(xs[k], {"actor", "exit", "reentry", "position"}, path);
        ExitEvent e;
        e.actor = read_field<int>(xs[k], "actor", path + ".", -1);
        e.exit = read_field<int>(xs[k], "exit", path + ".", 0);
        e.reentry = read_field<int>(xs[k], "reentry", path + ".", 0);
        const YAML::Node p = xs[k]["position"];
        if (!p || !p.IsSequence() || p.size() != 2) {
          throw Error(fmt::format("scenario field `{}.position`: expected [x, y]", path));
        }
        e.x = p[0].as<double>();
        e.y = p[1].as<double>();
        s.exits.push_back(e);
      }
    }
  }
  validate(s);
  return s;
}

ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open scenario file `{}`", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string scenario_to_yaml(const ScenarioSpec& s) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << s.name;
  out << YAML::Key << "family" << YAML::Value << s.family;
  out << YAML::Key << "grid" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "width"
      << YAML::Value << s.width << YAML::Key << "height" << YAML::Value << s.height << YAML::EndMap;
  out << YAML::Key << "fps" << YAML::Value << s.fps;
  out << YAML::Key << "duration" << YAML::Value << s.duration;
  out << YAML::Key << "seed" << YAML::Value << s.seed;
  out << YAML::Key << "detector" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "jitter_sigma" << YAML::Value << s.detector.jitter_sigma;
  out << YAML::Key << "miss_base" << YAML::Value << s.detector.miss_base;
  out << YAML::Key << "miss_slope" << YAML::Value << s.detector.miss_slope;
  out << YAML::Key << "conf_spread" << YAML::Value << s.detector.conf_spread;
  out << YAML::EndMap;
  out << YAML::Key << "actors" << YAML::Value << YAML::BeginSeq;
  for (const ActorSpec& a : s.actors) {
    out << YAML::BeginMap;
    out << YAML::Key << "shape" << YAML::Value << (a.shape == ShapeKind::Rectangle ? "rectangle" : "ellipse");
    out << YAML::Key << "size" << YAML::Value << YAML::Flow << YAML::BeginSeq << a.width << a.height << YAML::EndSeq;
    out << YAML::Key << "loop" << YAML::Value << a.loop;
    out << YAML::Key << "waypoints" << YAML::Value << YAML::BeginSeq;
    for (const Waypoint& w : a.waypoints) {
      out << YAML::Flow << YAML::BeginSeq << w.x << w.y << w.speed << w.hold << YAML::EndSeq;
    }
    out << YAML::EndSeq << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "events" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "crossings" << YAML::Value << YAML::BeginSeq;
  for (const CrossingEvent& c : s.crossings) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "a" << YAML::Value << c.a << YAML::Key << "b"
        << YAML::Value << c.b << YAML::Key << "start" << YAML::Value << c.start << YAML::Key << "end"
        << YAML::Value << c.end << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "exits" << YAML::Value << YAML::BeginSeq;
  for (const ExitEvent& e : s.exits) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "actor" << YAML::Value << e.actor << YAML::Key
        << "exit" << YAML::Value << e.exit << YAML::Key << "reentry" << YAML::Value << e.reentry
        << YAML::Key << "position" << YAML::Value << YAML::Flow << YAML::BeginSeq << e.x << e.y
        << YAML::EndSeq << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace crowdtrack
