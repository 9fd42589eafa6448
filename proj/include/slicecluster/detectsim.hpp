#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "slicecluster/slicing.hpp"
#include "slicecluster/voxelcore.hpp"

namespace slicecluster {

struct Detection2D {
  Axis axis = Axis::Z;
  std::int64_t slice_index = 0;
  BoundingBox2D box;
  double score = 1.0;

  friend bool operator==(const Detection2D&, const Detection2D&) = default;
};

/// Canonical within-axis order: slice, u_min, v_min, then the remaining
/// fields so the order is total.
bool canonical_less(const Detection2D& a, const Detection2D& b);

/// Detections grouped by axis, each group kept in canonical order.
class DetectionSet {
 public:
  DetectionSet() = default;
  explicit DetectionSet(std::vector<Detection2D> detections);

  void add(const Detection2D& d);
  std::span<const Detection2D> group(Axis axis) const { return groups_[static_cast<int>(axis)]; }
  std::size_t size() const;
  bool empty() const { return size() == 0; }
  /// Every detection, axes in x, y, z order.
  std::vector<Detection2D> all() const;

  friend bool operator==(const DetectionSet&, const DetectionSet&) = default;

 private:
  std::array<std::vector<Detection2D>, 3> groups_;
};

struct NoiseModel {
  double sigma_center = 0.0;
  double sigma_size = 0.0;
  double p_miss = 0.0;
  double fp_rate = 0.0;
  double fp_size_min = 8.0;
  double fp_size_max = 28.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Corrupts ground-truth boxes into detections. Each axis in `axes` draws
/// from its own stream seeded with noise.seed ^ axis_seed_tag(axis); false
/// positives are added on every slice of every listed axis.
DetectionSet simulate_detections(std::span<const SliceGtBox> gt_boxes, const VolumeDims& dims,
                                 std::span<const Axis> axes, const NoiseModel& noise);

std::uint64_t axis_seed_tag(Axis axis);

/// Detections with score 1 taken straight from ground-truth boxes.
DetectionSet detections_from_gt(std::span<const SliceGtBox> gt_boxes);

/// IoU with inclusive pixel extents (width = u_max - u_min + 1).
double iou(const BoundingBox2D& a, const BoundingBox2D& b);

/// Greedy per-slice non-maximum suppression.
DetectionSet nms(const DetectionSet& detections, double iou_threshold);

/// JSON-lines reader. When dims are given, slice indices are range-checked.
DetectionSet load_detections(std::istream& in, const std::optional<VolumeDims>& dims = std::nullopt);
void save_detections(const DetectionSet& detections, std::ostream& out);

/// Shortest decimal that round-trips to the same double.
std::string format_number(double value);

}  // namespace slicecluster
