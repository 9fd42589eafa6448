#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "slicecluster/voxelcore.hpp"

namespace slicecluster {

/// One synthetic nucleus. Rotation is R = Rz(tz) * Ry(ty) * Rx(tx).
struct EllipsoidSpec {
  Point3 center;
  std::array<double, 3> semi_axes{1.0, 1.0, 1.0};
  std::array<double, 3> rotation{0.0, 0.0, 0.0};
  int label = 1;

  void validate() const;
};

struct SynthConfig {
  VolumeDims dims{128, 128, 128};
  int n_nuclei = 0;
  double a_min = 4.0;
  double a_max = 8.0;
  /// Maximum shared voxels between any two accepted nuclei.
  std::int64_t t_ov = 5;
  int max_attempts_per_nucleus = 1000;
  /// Centers are drawn from [margin, len - 1 - margin] on each axis.
  double center_margin = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct GroundTruth {
  std::vector<EllipsoidSpec> specs;
  /// Mean voxel coordinate of each nucleus before overlap overwrites.
  std::vector<Point3> centroids;

  std::size_t count() const { return specs.size(); }
};

/// Sorted linear voxel indices (x-fastest order) inside the volume.
using VoxelSet = std::vector<std::size_t>;

std::array<std::array<double, 3>, 3> rotation_matrix(const std::array<double, 3>& angles);

/// Voxels whose centers satisfy the strict quadric test, clipped to dims.
VoxelSet rasterize_ellipsoid(const EllipsoidSpec& spec, const VolumeDims& dims);

std::size_t intersection_size(const VoxelSet& a, const VoxelSet& b);

Point3 mean_position(const VoxelSet& voxels, const VolumeDims& dims);

/// Sequential rejection sampling of nuclei under the pairwise overlap bound.
/// Throws PlacementError when a nucleus exhausts its attempt budget.
std::pair<LabeledVolume, GroundTruth> place_nuclei(const SynthConfig& config);

/// Mean coordinate of every voxel carrying `label`; throws if absent.
Point3 voxel_centroid(const LabeledVolume& volume, Label label);

class PlacementError : public Error {
 public:
  PlacementError(int nucleus_index, int attempts);
  int nucleus_index() const { return nucleus_index_; }
  int attempts() const { return attempts_; }

 private:
  int nucleus_index_;
  int attempts_;
};

}  // namespace slicecluster
