#include "crowdtrack/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "crowdtrack/error.hpp"

namespace crowdtrack {

std::int64_t bbox_intersection_area(const BBox& a, const BBox& b) {
  const std::int64_t w = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const std::int64_t h = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (w <= 0 || h <= 0) return 0;
  return w * h;
}

double bbox_iou(const BBox& a, const BBox& b) {
  const std::int64_t inter = bbox_intersection_area(a, b);
  const std::int64_t uni = a.area() + b.area() - inter;
  if (uni <= 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

BBox clip_box(const BBox& box, int width, int height) {
  BBox out{std::clamp(box.x_min, 0, width), std::clamp(box.y_min, 0, height),
           std::clamp(box.x_max, 0, width), std::clamp(box.y_max, 0, height)};
  out.x_max = std::max(out.x_max, out.x_min);
  out.y_max = std::max(out.y_max, out.y_min);
  return out;
}

double compute_density(std::size_t i, std::span<const BBox> boxes) {
  if (i >= boxes.size()) throw Error("compute_density: index out of range");
  const BBox& ref = boxes[i];
  if (ref.empty()) throw Error("compute_density: reference box has zero area");
  std::int64_t covered = 0;
  for (std::size_t j = 0; j < boxes.size(); ++j) {
    if (j != i) covered += bbox_intersection_area(ref, boxes[j]);
  }
  return static_cast<double>(covered) / static_cast<double>(ref.area());
}

// ---------------------------------------------------------------------------
// Mask

Mask::Mask(int width, int height) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw Error("mask dimensions must be non-negative");
}

Mask Mask::from_runs(int width, int height, std::vector<Run> runs) {
  Mask probe(width, height);
  const std::int64_t total = probe.pixel_count();
  for (const Run& r : runs) {
    if (r.length < 0 || r.start < 0 || r.end() > total) {
      throw Error(fmt::format("run ({}, {}) outside {}x{} grid", r.start, r.length, width, height));
    }
  }
  std::sort(runs.begin(), runs.end(),
            [](const Run& a, const Run& b) { return a.start < b.start; });
  MaskBuilder builder(width, height);
  std::int64_t open_start = -1;
  std::int64_t open_end = -1;
  for (const Run& r : runs) {
    if (r.length == 0) continue;
    if (open_start < 0) {
      open_start = r.start;
      open_end = r.end();
    } else if (r.start <= open_end) {
      open_end = std::max(open_end, r.end());
    } else {
      builder.append(open_start, open_end - open_start);
      open_start = r.start;
      open_end = r.end();
    }
  }
  if (open_start >= 0) builder.append(open_start, open_end - open_start);
  return std::move(builder).build();
}

Mask Mask::from_box(int width, int height, const BBox& box) {
  const BBox c = clip_box(box, width, height);
  MaskBuilder builder(width, height);
  if (!c.empty()) {
    for (int y = c.y_min; y < c.y_max; ++y) builder.append_row_span(y, c.x_min, c.x_max);
  }
  return std::move(builder).build();
}

Mask Mask::from_ellipse(int width, int height, const BBox& box) {
  MaskBuilder builder(width, height);
  if (box.empty()) return std::move(builder).build();
  const double cx = 0.5 * (box.x_min + box.x_max);
  const double cy = 0.5 * (box.y_min + box.y_max);
  const double rx = 0.5 * box.width();
  const double ry = 0.5 * box.height();
  const int y0 = std::max(box.y_min, 0);
  const int y1 = std::min(box.y_max, height);
  for (int y = y0; y < y1; ++y) {
    const double dy = (y + 0.5 - cy) / ry;
    const double q = 1.0 - dy * dy;
    if (q < 0.0) continue;
    const double half = rx * std::sqrt(q);
    int xb = static_cast<int>(std::ceil(cx - half - 0.5));
    int xe = static_cast<int>(std::floor(cx + half - 0.5)) + 1;
    xb = std::max(xb, 0);
    xe = std::min(xe, width);
    if (xb < xe) builder.append_row_span(y, xb, xe);
  }
  return std::move(builder).build();
}

bool Mask::contains(int x, int y) const {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return false;
  const std::int64_t idx = static_cast<std::int64_t>(y) * width_ + x;
  auto it = std::upper_bound(runs_.begin(), runs_.end(), idx,
                             [](std::int64_t v, const Run& r) { return v < r.start; });
  if (it == runs_.begin()) return false;
  --it;
  return idx < it->end();
}

MaskBuilder::MaskBuilder(int width, int height) : mask_(width, height) {}

void MaskBuilder::append(std::int64_t start, std::int64_t length) {
  if (length <= 0) return;
  auto& runs = mask_.runs_;
  if (!runs.empty()) {
    Run& last = runs.back();
    if (start < last.end()) throw Error("MaskBuilder: runs must be appended in order");
    if (start == last.end()) {
      last.length += length;
      mask_.area_ += length;
      return;
    }
  }
  runs.push_back(Run{start, length});
  mask_.area_ += length;
}

void MaskBuilder::append_row_span(int y, int x_begin, int x_end) {
  append(static_cast<std::int64_t>(y) * mask_.width_ + x_begin, x_end - x_begin);
}

Mask MaskBuilder::build() && { return std::move(mask_); }

namespace {

void require_same_grid(const Mask& a, const Mask& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(fmt::format("mask grid mismatch: {}x{} vs {}x{}", a.width(), a.height(),
                            b.width(), b.height()));
  }
}

// Sweeps both run lists once; `keep(in_a, in_b)` decides membership of each
// maximal segment on which both memberships are constant.
template <class Keep>
Mask combine(const Mask& a, const Mask& b, Keep keep) {
  require_same_grid(a, b);
  const auto ra = a.runs();
  const auto rb = b.runs();
  const std::int64_t total = a.pixel_count();
  MaskBuilder out(a.width(), a.height());
  std::size_t i = 0;
  std::size_t j = 0;
  std::int64_t pos = 0;
  while (pos < total && (i < ra.size() || j < rb.size())) {
    const bool in_a = i < ra.size() && ra[i].start <= pos;
    const bool in_b = j < rb.size() && rb[j].start <= pos;
    std::int64_t next = total;
    if (i < ra.size()) next = std::min(next, in_a ? ra[i].end() : ra[i].start);
    if (j < rb.size()) next = std::min(next, in_b ? rb[j].end() : rb[j].start);
    if (keep(in_a, in_b)) out.append(pos, next - pos);
    pos = next;
    if (i < ra.size() && ra[i].end() <= pos) ++i;
    if (j < rb.size() && rb[j].end() <= pos) ++j;
  }
  return std::move(out).build();
}

}  // namespace

std::int64_t mask_intersection_area(const Mask& a, const Mask& b) {
  require_same_grid(a, b);
  const auto ra = a.runs();
  const auto rb = b.runs();
  std::size_t i = 0;
  std::size_t j = 0;
  std::int64_t inter = 0;
  while (i < ra.size() && j < rb.size()) {
    const std::int64_t lo = std::max(ra[i].start, rb[j].start);
    const std::int64_t hi = std::min(ra[i].end(), rb[j].end());
    if (hi > lo) inter += hi - lo;
    if (ra[i].end() < rb[j].end()) {
      ++i;
    } else {
      ++j;
    }
  }
  return inter;
}

double mask_iou(const Mask& a, const Mask& b) {
  const std::int64_t inter = mask_intersection_area(a, b);
  const std::int64_t uni = a.area() + b.area() - inter;
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

Mask mask_union(const Mask& a, const Mask& b) {
  return combine(a, b, [](bool x, bool y) { return x || y; });
}

Mask mask_intersection(const Mask& a, const Mask& b) {
  return combine(a, b, [](bool x, bool y) { return x && y; });
}

Mask mask_difference(const Mask& a, const Mask& b) {
  return combine(a, b, [](bool x, bool y) { return x && !y; });
}

BBox mask_enclosing_bbox(const Mask& m) {
  if (m.empty()) throw Error("mask_enclosing_bbox: empty mask");
  const std::int64_t w = m.width();
  const auto runs = m.runs();
  BBox box{m.width(), static_cast<int>(runs.front().start / w), 0,
           static_cast<int>((runs.back().end() - 1) / w) + 1};
  for (const Run& r : runs) {
    const std::int64_t first_row = r.start / w;
    const std::int64_t last_row = (r.end() - 1) / w;
    if (first_row == last_row) {
      box.x_min = std::min<int>(box.x_min, static_cast<int>(r.start % w));
      box.x_max = std::max<int>(box.x_max, static_cast<int>((r.end() - 1) % w) + 1);
    } else {
      // Spans a row break: covers column w-1 on its first row and column 0 on its last.
      box.x_min = 0;
      box.x_max = m.width();
    }
    if (box.x_min == 0 && box.x_max == m.width()) break;
  }
  return box;
}

std::string mask_to_rle_text(const Mask& m) {
  std::string out = fmt::format("{} {} {}", m.width(), m.height(), m.runs().size());
  for (const Run& r : m.runs()) fmt::format_to(std::back_inserter(out), " {} {}", r.start, r.length);
  return out;
}

Mask mask_from_rle_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  long long w = 0;
  long long h = 0;
  long long n = 0;
  if (!(in >> w >> h >> n) || w < 0 || h < 0 || n < 0) {
    throw Error("malformed RLE header (expected `w h n`)");
  }
  std::vector<Run> runs;
  runs.reserve(static_cast<std::size_t>(n));
  for (long long k = 0; k < n; ++k) {
    Run r;
    if (!(in >> r.start >> r.length)) throw Error(fmt::format("RLE truncated at run {}", k));
    runs.push_back(r);
  }
  std::string extra;
  if (in >> extra) throw Error("trailing tokens after RLE runs");
  return Mask::from_runs(static_cast<int>(w), static_cast<int>(h), std::move(runs));
}

}  // namespace crowdtrack
