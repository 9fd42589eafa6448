#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "slicecluster/voxelcore.hpp"

namespace slicecluster {

struct MatchPair {
  std::size_t gt_index;
  std::size_t est_index;
  double distance;
};

struct Matching {
  std::vector<MatchPair> pairs;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  double precision() const;
  double recall() const;
};

/// Mean absolute percentage error of counts, in percent.
double mape(std::span<const std::size_t> estimated_counts, std::span<const std::size_t> gt_counts);

/// One-to-one matching: all pairs closer than t_dist, accepted in order of
/// (distance, gt index, est index).
Matching greedy_match(std::span<const Point3> estimated, std::span<const Point3> gt, double t_dist,
                      const Spacing& spacing = {});

/// With uniform confidences the precision/recall curve is one operating
/// point, so AP = precision * recall. Empty gt and empty estimates give 1.
double ap_at(std::span<const Point3> estimated, std::span<const Point3> gt, double t_dist,
             const Spacing& spacing = {});

double map_over(std::span<const Point3> estimated, std::span<const Point3> gt, std::span<const double> t_set,
                const Spacing& spacing = {});

struct VolumeEval {
  std::size_t estimated_count = 0;
  std::size_t gt_count = 0;
  /// Keyed by threshold.
  std::map<double, double> precision;
  std::map<double, double> recall;
  std::map<double, double> ap;
};

struct EvalReport {
  double mape = 0.0;
  /// Mean over volumes of each volume's AP at the threshold.
  std::map<double, double> ap_by_t;
  double map_score = 0.0;
  std::vector<VolumeEval> per_volume;
};

struct VolumeCentroids {
  std::vector<Point3> estimated;
  std::vector<Point3> gt;
};

EvalReport evaluate(std::span<const VolumeCentroids> volumes, std::span<const double> t_set,
                    const Spacing& spacing = {});

}  // namespace slicecluster
