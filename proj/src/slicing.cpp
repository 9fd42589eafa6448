#include "slicecluster/slicing.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace slicecluster {

namespace {

void check_slice(const VolumeDims& dims, Axis axis, std::int64_t p) {
  if (p < 0 || p >= dims.extent(axis)) {
    throw OutOfBounds("slice " + std::to_string(p) + " out of range along axis " + std::string(axis_name(axis)));
  }
}

}  // namespace

SliceImage extract_slice(const LabeledVolume& volume, Axis axis, std::int64_t p) {
  const VolumeDims& dims = volume.dims();
  check_slice(dims, axis, p);
  const auto m = slice_uv_mapping(axis);
  const auto [u_len, v_len] = dims.slice_extent(axis);
  SliceImage img{u_len, v_len, std::vector<Label>(static_cast<std::size_t>(u_len * v_len))};
  std::array<std::int64_t, 3> c{};
  c[m.index] = p;
  for (std::int64_t v = 0; v < v_len; ++v) {
    c[m.v] = v;
    for (std::int64_t u = 0; u < u_len; ++u) {
      c[m.u] = u;
      img.pixels[static_cast<std::size_t>(u + u_len * v)] =
          volume.at_unchecked(dims.linear_index(c[0], c[1], c[2]));
    }
  }
  return img;
}

std::vector<SliceGtBox> gt_boxes_for_slice(const LabeledVolume& volume, Axis axis, std::int64_t p) {
  const SliceImage img = extract_slice(volume, axis, p);
  struct Extent {
    std::int64_t u0 = std::numeric_limits<std::int64_t>::max(), v0 = u0, u1 = -1, v1 = -1;
  };
  std::vector<Extent> ext;
  for (std::int64_t v = 0; v < img.v_len; ++v) {
    for (std::int64_t u = 0; u < img.u_len; ++u) {
      const Label l = img.at(u, v);
      if (l == 0) continue;
      if (ext.size() <= l) ext.resize(static_cast<std::size_t>(l) + 1);
      Extent& e = ext[l];
      e.u0 = std::min(e.u0, u);
      e.v0 = std::min(e.v0, v);
      e.u1 = std::max(e.u1, u);
      e.v1 = std::max(e.v1, v);
    }
  }
  std::vector<SliceGtBox> out;
  for (std::size_t l = 1; l < ext.size(); ++l) {
    const Extent& e = ext[l];
    if (e.u1 < 0) continue;
    out.push_back({axis, p, static_cast<int>(l),
                   {static_cast<double>(e.u0), static_cast<double>(e.v0), static_cast<double>(e.u1),
                    static_cast<double>(e.v1)}});
  }
  return out;
}

std::vector<SliceGtBox> gt_boxes_for_axis(const LabeledVolume& volume, Axis axis) {
  std::vector<SliceGtBox> out;
  for (std::int64_t p = 0; p < volume.dims().extent(axis); ++p) {
    auto boxes = gt_boxes_for_slice(volume, axis, p);
    out.insert(out.end(), boxes.begin(), boxes.end());
  }
  return out;
}

}  // namespace slicecluster
