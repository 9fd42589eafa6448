#include "slicecluster/voxelcore.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace slicecluster {

std::string_view axis_name(Axis axis) {
  switch (axis) {
    case Axis::X:
      return "x";
    case Axis::Y:
      return "y";
    case Axis::Z:
      return "z";
  }
  return "?";
}

Axis parse_axis(std::string_view name) {
  if (name == "x" || name == "X") return Axis::X;
  if (name == "y" || name == "Y") return Axis::Y;
  if (name == "z" || name == "Z") return Axis::Z;
  throw InvalidArgument("unknown axis '" + std::string(name) + "'");
}

VolumeDims::VolumeDims(std::int64_t x, std::int64_t y, std::int64_t z) : x_len(x), y_len(y), z_len(z) {
  if (x < 1 || y < 1 || z < 1) {
    throw InvalidArgument("volume dims must be >= 1, got " + std::to_string(x) + "x" + std::to_string(y) + "x" +
                          std::to_string(z));
  }
}

std::int64_t VolumeDims::operator[](int world_axis) const {
  return world_axis == 0 ? x_len : (world_axis == 1 ? y_len : z_len);
}

std::size_t VolumeDims::voxel_count() const {
  return static_cast<std::size_t>(x_len) * static_cast<std::size_t>(y_len) * static_cast<std::size_t>(z_len);
}

std::array<std::int64_t, 2> VolumeDims::slice_extent(Axis axis) const {
  const auto m = slice_uv_mapping(axis);
  return {(*this)[m.u], (*this)[m.v]};
}

bool VolumeDims::contains(std::int64_t x, std::int64_t y, std::int64_t z) const {
  return x >= 0 && y >= 0 && z >= 0 && x < x_len && y < y_len && z < z_len;
}

LabeledVolume::LabeledVolume(VolumeDims dims) : dims_(dims), labels_(dims.voxel_count(), 0) {}

LabeledVolume::LabeledVolume(VolumeDims dims, std::vector<Label> labels) : dims_(dims), labels_(std::move(labels)) {
  if (labels_.size() != dims_.voxel_count()) {
    throw InvalidArgument("label array has " + std::to_string(labels_.size()) + " entries, dims need " +
                          std::to_string(dims_.voxel_count()));
  }
}

Label LabeledVolume::voxel_at(std::int64_t x, std::int64_t y, std::int64_t z) const {
  if (!dims_.contains(x, y, z)) {
    throw OutOfBounds("voxel (" + std::to_string(x) + "," + std::to_string(y) + "," + std::to_string(z) +
                      ") outside volume");
  }
  return labels_[dims_.linear_index(x, y, z)];
}

Label LabeledVolume::check_contiguous() const {
  std::vector<bool> seen(65536, false);
  Label max_label = 0;
  for (Label l : labels_) {
    seen[l] = true;
    max_label = std::max(max_label, l);
  }
  for (std::size_t l = 1; l <= max_label; ++l) {
    if (!seen[l]) {
      throw InvalidArgument("labels not contiguous: " + std::to_string(l) + " missing below max " +
                            std::to_string(max_label));
    }
  }
  return max_label;
}

bool Point3::finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }

void Spacing::validate() const {
  if (!(x > 0.0 && y > 0.0 && z > 0.0) || !std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
    throw InvalidArgument("spacing components must be finite and > 0");
  }
}

double distance(const Point3& a, const Point3& b, const Spacing& spacing) {
  const double dx = (a.x - b.x) * spacing.x;
  const double dy = (a.y - b.y) * spacing.y;
  const double dz = (a.z - b.z) * spacing.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void BoundingBox2D::validate() const {
  if (!std::isfinite(u_min) || !std::isfinite(v_min) || !std::isfinite(u_max) || !std::isfinite(v_max)) {
    throw InvalidArgument("bounding box coordinates must be finite");
  }
  if (u_min > u_max) throw InvalidArgument("bounding box u_min > u_max");
  if (v_min > v_max) throw InvalidArgument("bounding box v_min > v_max");
}

Point3 from_slice_coords(Axis axis, double u, double v, double index) {
  const auto m = slice_uv_mapping(axis);
  Point3 p;
  p[m.u] = u;
  p[m.v] = v;
  p[m.index] = index;
  return p;
}

std::array<double, 3> to_slice_coords(Axis axis, const Point3& p) {
  const auto m = slice_uv_mapping(axis);
  return {p[m.u], p[m.v], p[m.index]};
}

}  // namespace slicecluster
