#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "slicecluster/detectsim.hpp"
#include "slicecluster/voxelcore.hpp"

namespace slicecluster {

/// A 2D detection lifted to 3D: box center in-plane, slice index on the
/// slice axis.
struct PseudoPoint3D {
  Point3 position;
  Axis source_axis = Axis::Z;
  std::int64_t source_slice = 0;
};

std::vector<PseudoPoint3D> lift(const DetectionSet& detections, Axis axis);

/// Upper-triangular pairwise distances without the diagonal.
class CondensedMatrix {
 public:
  CondensedMatrix() = default;
  explicit CondensedMatrix(std::size_t n) : n_(n), data_(n < 2 ? 0 : n * (n - 1) / 2, 0.0) {}

  std::size_t size() const { return n_; }
  /// i != j; order does not matter.
  double operator()(std::size_t i, std::size_t j) const { return data_[offset(i, j)]; }
  double& at(std::size_t i, std::size_t j) { return data_[offset(i, j)]; }
  std::span<const double> condensed() const { return data_; }

 private:
  std::size_t offset(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    return i * (2 * n_ - i - 1) / 2 + (j - i - 1);
  }

  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Euclidean distances after scaling each coordinate by `spacing`.
CondensedMatrix pairwise_distances(std::span<const Point3> points, const Spacing& spacing = {});

/// Lance-Williams coefficients for merging clusters of sizes n_i and n_j.
struct LinkageScheme {
  double alpha_i;
  double alpha_j;
  double beta;
  double gamma;

  static LinkageScheme average(std::size_t n_i, std::size_t n_j);
  /// L(i u j, e) from L(i, e), L(j, e) and L(i, j).
  double update(double d_ie, double d_je, double d_ij) const;
};

struct Merge {
  std::size_t a;  // a < b
  std::size_t b;
  double height;
  std::size_t size;

  friend bool operator==(const Merge&, const Merge&) = default;
};

/// Leaves are 0..n-1; merge m creates cluster id n + m.
struct Dendrogram {
  std::size_t n_points = 0;
  std::vector<Merge> merges;
};

/// Average-linkage AHC. Among minimal pairs the lexicographically smallest
/// (id_a, id_b) merges first.
Dendrogram ahc_average_linkage(const CondensedMatrix& distances);

/// Undo the last k-1 merges. Clusters are numbered by their smallest member.
std::vector<int> cut(const Dendrogram& dendrogram, std::size_t k);

enum class SilhouetteVariant {
  /// b(i) averages the mean distance over every other cluster.
  MeanOfClusters,
  /// b(i) is the mean distance to the nearest other cluster.
  NearestCluster,
};

/// Mean silhouette over all points. Singletons score 0; throws when fewer
/// than two clusters are present.
double silhouette(const CondensedMatrix& distances, std::span<const int> labels,
                  SilhouetteVariant variant = SilhouetteVariant::MeanOfClusters);

struct KRange {
  std::size_t k_min = 2;
  std::size_t k_max = 2;
};

struct ClusterResult {
  std::optional<Axis> axis;
  std::size_t k = 0;
  std::vector<int> labels;
  std::vector<Point3> centroids;
  /// Empty when k == 1.
  std::optional<double> silhouette;
};

std::vector<Point3> cluster_means(std::span<const Point3> points, std::span<const int> labels, std::size_t k);

/// Sweeps k over the range by cutting one dendrogram; the highest score wins
/// and ties go to the smaller k.
ClusterResult select_k(const Dendrogram& dendrogram, const CondensedMatrix& distances,
                       std::span<const Point3> points, KRange range,
                       SilhouetteVariant variant = SilhouetteVariant::MeanOfClusters);

/// Lift, cluster and select k for one axis. k_max is clipped to the number
/// of points. Centroids are reported in voxel coordinates.
ClusterResult cluster_axis(const DetectionSet& detections, Axis axis, const Spacing& spacing, KRange range,
                           SilhouetteVariant variant = SilhouetteVariant::MeanOfClusters);

struct FusionResult {
  std::vector<Point3> centroids;
  /// Sorted contributing axes per centroid.
  std::vector<std::vector<Axis>> support;
  /// Score of the k chosen for the pooled centroids, or the input's score on
  /// pass-through.
  std::optional<double> silhouette;

  std::size_t count() const { return centroids.size(); }
};

/// Majority voting across per-axis results with a second AHC over the pooled
/// centroids. A single result passes through unchanged.
FusionResult fuse_axes(std::span<const ClusterResult> results, std::size_t margin = 5, const Spacing& spacing = {},
                       SilhouetteVariant variant = SilhouetteVariant::MeanOfClusters);

}  // namespace slicecluster
