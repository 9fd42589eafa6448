#pragma once

#include <cstdint>
#include <vector>

#include "slicecluster/voxelcore.hpp"

namespace slicecluster {

/// 2D label image of one slice, u-fastest.
struct SliceImage {
  std::int64_t u_len = 0;
  std::int64_t v_len = 0;
  std::vector<Label> pixels;

  Label at(std::int64_t u, std::int64_t v) const { return pixels[static_cast<std::size_t>(u + u_len * v)]; }
};

struct SliceGtBox {
  Axis axis = Axis::Z;
  std::int64_t slice_index = 0;
  int label = 1;
  BoundingBox2D box;

  friend bool operator==(const SliceGtBox&, const SliceGtBox&) = default;
};

SliceImage extract_slice(const LabeledVolume& volume, Axis axis, std::int64_t p);

/// Tight inclusive box per label present on slice p, sorted by label.
std::vector<SliceGtBox> gt_boxes_for_slice(const LabeledVolume& volume, Axis axis, std::int64_t p);

/// gt_boxes_for_slice over every slice along `axis`, in slice order.
std::vector<SliceGtBox> gt_boxes_for_axis(const LabeledVolume& volume, Axis axis);

}  // namespace slicecluster
