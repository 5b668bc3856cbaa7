#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace crowdtrack {

/// Integer pixel box, half-open on the max edges: pixel (x, y) is inside iff
/// x_min <= x < x_max and y_min <= y < y_max.
struct BBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  int width() const { return x_max - x_min; }
  int height() const { return y_max - y_min; }
  std::int64_t area() const {
    return static_cast<std::int64_t>(width()) * static_cast<std::int64_t>(height());
  }
  bool valid() const { return x_min <= x_max && y_min <= y_max; }
  bool empty() const { return x_min >= x_max || y_min >= y_max; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

std::int64_t bbox_intersection_area(const BBox& a, const BBox& b);

/// |a ∩ b| / |a ∪ b|; two zero-area boxes give 0.
double bbox_iou(const BBox& a, const BBox& b);

/// Clips `box` to [0, width) x [0, height).
BBox clip_box(const BBox& box, int width, int height);

/// Sum over j != i of |boxes[i] ∩ boxes[j]| / |boxes[i]|. Not normalized: a box
/// covered twice over contributes 2. Throws if boxes[i] has zero area.
double compute_density(std::size_t i, std::span<const BBox> boxes);

/// One run of foreground pixels in row-major linear index space.
struct Run {
  std::int64_t start = 0;
  std::int64_t length = 0;

  std::int64_t end() const { return start + length; }
  friend bool operator==(const Run&, const Run&) = default;
};

/// Run-length encoded binary mask on a width x height grid.
///
/// Runs are kept canonical: sorted, non-empty, non-overlapping and never
/// adjacent, so two masks with the same foreground compare equal.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height);

  /// Validates and canonicalizes arbitrary runs (overlaps and adjacency are
  /// merged). Throws if a run leaves the grid or has negative length.
  static Mask from_runs(int width, int height, std::vector<Run> runs);
  static Mask from_box(int width, int height, const BBox& box);
  /// Axis-aligned ellipse inscribed in `box` (pixel centers tested).
  static Mask from_ellipse(int width, int height, const BBox& box);

  int width() const { return width_; }
  int height() const { return height_; }
  std::int64_t pixel_count() const { return static_cast<std::int64_t>(width_) * height_; }
  std::span<const Run> runs() const { return runs_; }
  std::int64_t area() const { return area_; }
  bool empty() const { return area_ == 0; }
  bool contains(int x, int y) const;

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  friend class MaskBuilder;

  int width_ = 0;
  int height_ = 0;
  std::vector<Run> runs_;
  std::int64_t area_ = 0;
};

/// Appends runs in increasing start order, merging touching runs.
class MaskBuilder {
 public:
  MaskBuilder(int width, int height);

  void append(std::int64_t start, std::int64_t length);
  void append_row_span(int y, int x_begin, int x_end);
  Mask build() &&;

 private:
  Mask mask_;
};

std::int64_t mask_intersection_area(const Mask& a, const Mask& b);
double mask_iou(const Mask& a, const Mask& b);
Mask mask_union(const Mask& a, const Mask& b);
Mask mask_intersection(const Mask& a, const Mask& b);
Mask mask_difference(const Mask& a, const Mask& b);

/// Tightest box containing every foreground pixel. Throws on an empty mask.
BBox mask_enclosing_bbox(const Mask& m);

/// Text form `w h n s1 l1 ... sn ln`.
std::string mask_to_rle_text(const Mask& m);
Mask mask_from_rle_text(std::string_view text);

}  // namespace crowdtrack
