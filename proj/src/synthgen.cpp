#include "slicecluster/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "slicecluster/rng.hpp"

namespace slicecluster {

namespace {

struct VoxelBox {
  std::array<std::int64_t, 3> lo;
  std::array<std::int64_t, 3> hi;

  bool intersects(const VoxelBox& o) const {
    for (int i = 0; i < 3; ++i) {
      if (hi[i] < o.lo[i] || o.hi[i] < lo[i]) return false;
    }
    return true;
  }
};

// Axis-aligned extent of the rotated ellipsoid, clipped to dims. Empty when
// any lo > hi.
VoxelBox bounding_voxels(const EllipsoidSpec& spec, const std::array<std::array<double, 3>, 3>& r,
                         const VolumeDims& dims) {
  VoxelBox box{};
  for (int i = 0; i < 3; ++i) {
    double e2 = 0.0;
    for (int j = 0; j < 3; ++j) {
      const double t = r[i][j] * spec.semi_axes[j];
      e2 += t * t;
    }
    const double e = std::sqrt(e2);
    box.lo[i] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(spec.center[i] - e)));
    box.hi[i] = std::min<std::int64_t>(dims[i] - 1, static_cast<std::int64_t>(std::floor(spec.center[i] + e)));
  }
  return box;
}

VoxelBox box_of(const VoxelSet& voxels, const VolumeDims& dims) {
  VoxelBox box{{dims.x_len, dims.y_len, dims.z_len}, {-1, -1, -1}};
  const auto plane = static_cast<std::size_t>(dims.x_len * dims.y_len);
  for (std::size_t idx : voxels) {
    const std::array<std::int64_t, 3> c{static_cast<std::int64_t>(idx % dims.x_len),
                                        static_cast<std::int64_t>((idx / dims.x_len) % dims.y_len),
                                        static_cast<std::int64_t>(idx / plane)};
    for (int i = 0; i < 3; ++i) {
      box.lo[i] = std::min(box.lo[i], c[i]);
      box.hi[i] = std::max(box.hi[i], c[i]);
    }
  }
  return box;
}

}  // namespace

void EllipsoidSpec::validate() const {
  if (!center.finite()) throw InvalidArgument("ellipsoid center must be finite");
  for (double a : semi_axes) {
    if (!std::isfinite(a) || a < 1.0) throw InvalidArgument("ellipsoid semi-axes must be finite and >= 1");
  }
  for (double t : rotation) {
    if (!std::isfinite(t)) throw InvalidArgument("ellipsoid rotation angles must be finite");
  }
  if (label < 1 || label > 65535) throw InvalidArgument("ellipsoid label must be in [1, 65535]");
}

void SynthConfig::validate() const {
  if (n_nuclei < 0 || n_nuclei > 65535) throw InvalidArgument("n_nuclei must be in [0, 65535]");
  if (!(a_min >= 1.0) || !(a_max >= a_min) || !std::isfinite(a_max)) {
    throw InvalidArgument("semi-axis range must satisfy 1 <= a_min <= a_max");
  }
  if (t_ov < 0) throw InvalidArgument("t_ov must be >= 0");
  if (max_attempts_per_nucleus < 1) throw InvalidArgument("max_attempts_per_nucleus must be >= 1");
  if (!(center_margin >= 0.0)) throw InvalidArgument("center_margin must be >= 0");
  for (int i = 0; i < 3; ++i) {
    if (2.0 * center_margin > static_cast<double>(dims[i] - 1)) {
      throw InvalidArgument("center_margin leaves no room for centers");
    }
  }
}

PlacementError::PlacementError(int nucleus_index, int attempts)
    : Error("could not place nucleus " + std::to_string(nucleus_index) + " within " + std::to_string(attempts) +
            " attempts"),
      nucleus_index_(nucleus_index),
      attempts_(attempts) {}

std::array<std::array<double, 3>, 3> rotation_matrix(const std::array<double, 3>& angles) {
  const double cx = std::cos(angles[0]), sx = std::sin(angles[0]);
  const double cy = std::cos(angles[1]), sy = std::sin(angles[1]);
  const double cz = std::cos(angles[2]), sz = std::sin(angles[2]);
  // Rz * Ry * Rx
  return {{{cz * cy, cz * sy * sx - sz * cx, cz * sy * cx + sz * sx},
           {sz * cy, sz * sy * sx + cz * cx, sz * sy * cx - cz * sx},
           {-sy, cy * sx, cy * cx}}};
}

VoxelSet rasterize_ellipsoid(const EllipsoidSpec& spec, const VolumeDims& dims) {
  spec.validate();
  const auto r = rotation_matrix(spec.rotation);
  const auto& a = spec.semi_axes;
  const bool sphere = a[0] == a[1] && a[1] == a[2];
  const VoxelBox box = bounding_voxels(spec, r, dims);

  VoxelSet out;
  const double r2 = a[0] * a[0];
  for (std::int64_t z = box.lo[2]; z <= box.hi[2]; ++z) {
    const double dz = static_cast<double>(z) - spec.center.z;
    for (std::int64_t y = box.lo[1]; y <= box.hi[1]; ++y) {
      const double dy = static_cast<double>(y) - spec.center.y;
      for (std::int64_t x = box.lo[0]; x <= box.hi[0]; ++x) {
        const double dx = static_cast<double>(x) - spec.center.x;
        bool inside;
        if (sphere) {
          // The sphere quadric ignores rotation; evaluating it without R
          // keeps the voxel set exactly rotation invariant.
          inside = dx * dx + dy * dy + dz * dz < r2;
        } else {
          // Body-frame offset R^T d.
          double q = 0.0;
          for (int j = 0; j < 3; ++j) {
            const double t = (r[0][j] * dx + r[1][j] * dy + r[2][j] * dz) / a[j];
            q += t * t;
          }
          inside = q < 1.0;
        }
        if (inside) out.push_back(dims.linear_index(x, y, z));
      }
    }
  }
  return out;  // z-major loop emits indices in ascending order
}

std::size_t intersection_size(const VoxelSet& a, const VoxelSet& b) {
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

Point3 mean_position(const VoxelSet& voxels, const VolumeDims& dims) {
  if (voxels.empty()) throw InvalidArgument("mean_position of an empty voxel set");
  std::int64_t sx = 0, sy = 0, sz = 0;
  const auto plane = static_cast<std::size_t>(dims.x_len * dims.y_len);
  for (std::size_t idx : voxels) {
    sx += static_cast<std::int64_t>(idx % dims.x_len);
    sy += static_cast<std::int64_t>((idx / dims.x_len) % dims.y_len);
    sz += static_cast<std::int64_t>(idx / plane);
  }
  const auto n = static_cast<double>(voxels.size());
  return {static_cast<double>(sx) / n, static_cast<double>(sy) / n, static_cast<double>(sz) / n};
}

std::pair<LabeledVolume, GroundTruth> place_nuclei(const SynthConfig& config) {
  config.validate();
  const VolumeDims& dims = config.dims;
  SeededRng rng(config.seed);
  LabeledVolume volume(dims);
  GroundTruth truth;

  std::vector<VoxelSet> placed;
  std::vector<VoxelBox> placed_boxes;
  // Voxels each label still owns after later overwrites, indexed by label.
  std::vector<std::size_t> live{0};

  for (int k = 1; k <= config.n_nuclei; ++k) {
    bool accepted = false;
    for (int attempt = 0; attempt < config.max_attempts_per_nucleus && !accepted; ++attempt) {
      EllipsoidSpec spec;
      spec.label = k;
      for (int i = 0; i < 3; ++i) {
        spec.center[i] =
            rng.uniform(config.center_margin, static_cast<double>(dims[i] - 1) - config.center_margin);
      }
      for (double& a : spec.semi_axes) a = rng.uniform(config.a_min, config.a_max);
      if (config.a_min == config.a_max) spec.semi_axes.fill(config.a_min);
      for (double& t : spec.rotation) t = rng.uniform(0.0, std::numbers::pi);

      VoxelSet voxels = rasterize_ellipsoid(spec, dims);
      if (voxels.empty()) continue;
      const VoxelBox box = box_of(voxels, dims);

      bool ok = true;
      for (std::size_t j = 0; j < placed.size() && ok; ++j) {
        if (!box.intersects(placed_boxes[j])) continue;
        if (intersection_size(voxels, placed[j]) > static_cast<std::size_t>(config.t_ov)) ok = false;
      }
      if (!ok) continue;

      // Reject candidates that would overwrite every remaining voxel of an
      // earlier nucleus; the label set must stay {1..K}.
      std::vector<std::size_t> taken(live.size(), 0);
      for (std::size_t idx : voxels) ++taken[volume.at_unchecked(idx)];
      for (std::size_t l = 1; l < live.size() && ok; ++l) {
        if (taken[l] > 0 && taken[l] == live[l]) ok = false;
      }
      if (!ok) continue;

      for (std::size_t idx : voxels) {
        --live[volume.at_unchecked(idx)];
        volume.set(idx, static_cast<Label>(k));
      }
      live[0] = 0;
      live.push_back(voxels.size());
      truth.centroids.push_back(mean_position(voxels, dims));
      truth.specs.push_back(spec);
      placed_boxes.push_back(box);
      placed.push_back(std::move(voxels));
      accepted = true;
    }
    if (!accepted) throw PlacementError(k, config.max_attempts_per_nucleus);
  }
  return {std::move(volume), std::move(truth)};
}

Point3 voxel_centroid(const LabeledVolume& volume, Label label) {
  const auto& dims = volume.dims();
  std::int64_t sx = 0, sy = 0, sz = 0, n = 0;
  std::size_t idx = 0;
  for (std::int64_t z = 0; z < dims.z_len; ++z) {
    for (std::int64_t y = 0; y < dims.y_len; ++y) {
      for (std::int64_t x = 0; x < dims.x_len; ++x, ++idx) {
        if (volume.at_unchecked(idx) == label) {
          sx += x;
          sy += y;
          sz += z;
          ++n;
        }
      }
    }
  }
  if (label == 0 || n == 0) throw InvalidArgument("label " + std::to_string(label) + " not present in volume");
  const auto d = static_cast<double>(n);
  return {static_cast<double>(sx) / d, static_cast<double>(sy) / d, static_cast<double>(sz) / d};
}

}  // namespace slicecluster
