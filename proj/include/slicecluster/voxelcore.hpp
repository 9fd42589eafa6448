#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "slicecluster/error.hpp"

namespace slicecluster {

enum class Axis : std::uint8_t { X = 0, Y = 1, Z = 2 };

inline constexpr std::array<Axis, 3> kAllAxes{Axis::X, Axis::Y, Axis::Z};

/// Lower-case name used in every file format ("x", "y", "z").
std::string_view axis_name(Axis axis);
Axis parse_axis(std::string_view name);

/// Which world coordinate (0 = x, 1 = y, 2 = z) each slice coordinate reads.
struct SliceMapping {
  int u;
  int v;
  int index;
};

/// Z -> (u,v)=(x,y); X -> (u,v)=(y,z); Y -> (u,v)=(x,z).
constexpr SliceMapping slice_uv_mapping(Axis axis) {
  switch (axis) {
    case Axis::X:
      return {1, 2, 0};
    case Axis::Y:
      return {0, 2, 1};
    case Axis::Z:
    default:
      return {0, 1, 2};
  }
}

struct VolumeDims {
  std::int64_t x_len = 1;
  std::int64_t y_len = 1;
  std::int64_t z_len = 1;

  VolumeDims() = default;
  VolumeDims(std::int64_t x, std::int64_t y, std::int64_t z);

  std::int64_t operator[](int world_axis) const;
  std::size_t voxel_count() const;
  /// Number of slices along `axis`.
  std::int64_t extent(Axis axis) const { return (*this)[slice_uv_mapping(axis).index]; }
  /// (u, v) extents of one slice taken along `axis`.
  std::array<std::int64_t, 2> slice_extent(Axis axis) const;
  bool contains(std::int64_t x, std::int64_t y, std::int64_t z) const;
  /// x-fastest, then y, then z.
  std::size_t linear_index(std::int64_t x, std::int64_t y, std::int64_t z) const {
    return static_cast<std::size_t>(x + x_len * (y + y_len * z));
  }

  friend bool operator==(const VolumeDims&, const VolumeDims&) = default;
};

using Label = std::uint16_t;

/// Dense per-voxel instance labels; 0 is background.
class LabeledVolume {
 public:
  explicit LabeledVolume(VolumeDims dims);
  LabeledVolume(VolumeDims dims, std::vector<Label> labels);

  const VolumeDims& dims() const { return dims_; }
  std::span<const Label> labels() const { return labels_; }

  /// Bounds-checked read; throws OutOfBounds.
  Label voxel_at(std::int64_t x, std::int64_t y, std::int64_t z) const;
  Label at_unchecked(std::size_t linear) const { return labels_[linear]; }
  void set(std::size_t linear, Label label) { labels_[linear] = label; }

  /// Largest label present (K). Throws InvalidArgument unless the nonzero
  /// labels are exactly {1..K}.
  Label check_contiguous() const;

  friend bool operator==(const LabeledVolume&, const LabeledVolume&) = default;

 private:
  VolumeDims dims_;
  std::vector<Label> labels_;
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double operator[](int world_axis) const { return world_axis == 0 ? x : (world_axis == 1 ? y : z); }
  double& operator[](int world_axis) { return world_axis == 0 ? x : (world_axis == 1 ? y : z); }
  bool finite() const;

  friend bool operator==(const Point3&, const Point3&) = default;
};

/// Per-axis physical voxel size used when measuring distances.
struct Spacing {
  double x = 1.0;
  double y = 1.0;
  double z = 1.0;

  void validate() const;
};

double distance(const Point3& a, const Point3& b, const Spacing& spacing = {});

/// Inclusive pixel-center coordinates: a single pixel is (u,v,u,v).
struct BoundingBox2D {
  double u_min = 0.0;
  double v_min = 0.0;
  double u_max = 0.0;
  double v_max = 0.0;

  void validate() const;
  double center_u() const { return 0.5 * (u_min + u_max); }
  double center_v() const { return 0.5 * (v_min + v_max); }

  friend bool operator==(const BoundingBox2D&, const BoundingBox2D&) = default;
};

/// World point from slice coordinates (u, v) on slice `index` along `axis`.
Point3 from_slice_coords(Axis axis, double u, double v, double index);
/// Inverse of from_slice_coords: returns {u, v, index}.
std::array<double, 3> to_slice_coords(Axis axis, const Point3& p);

}  // namespace slicecluster
