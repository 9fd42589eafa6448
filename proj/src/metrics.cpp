#include "slicecluster/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

namespace slicecluster {

double Matching::precision() const {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double Matching::recall() const {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double mape(std::span<const std::size_t> estimated_counts, std::span<const std::size_t> gt_counts) {
  if (estimated_counts.size() != gt_counts.size()) throw InvalidArgument("mape: count lists differ in length");
  if (gt_counts.empty()) throw InvalidArgument("mape: no volumes");
  double sum = 0.0;
  for (std::size_t i = 0; i < gt_counts.size(); ++i) {
    if (gt_counts[i] == 0) throw InvalidArgument("mape: ground-truth count of volume " + std::to_string(i) + " is 0");
    const double gt = static_cast<double>(gt_counts[i]);
    sum += std::abs(static_cast<double>(estimated_counts[i]) - gt) / gt;
  }
  return 100.0 * sum / static_cast<double>(gt_counts.size());
}

Matching greedy_match(std::span<const Point3> estimated, std::span<const Point3> gt, double t_dist,
                      const Spacing& spacing) {
  if (!(t_dist > 0.0)) throw InvalidArgument("greedy_match: t_dist must be > 0");
  spacing.validate();
  std::vector<MatchPair> candidates;
  for (std::size_t g = 0; g < gt.size(); ++g) {
    for (std::size_t e = 0; e < estimated.size(); ++e) {
      const double d = distance(gt[g], estimated[e], spacing);
      if (d < t_dist) candidates.push_back({g, e, d});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const MatchPair& a, const MatchPair& b) {
    return std::tie(a.distance, a.gt_index, a.est_index) < std::tie(b.distance, b.gt_index, b.est_index);
  });

  Matching m;
  std::vector<bool> gt_used(gt.size(), false), est_used(estimated.size(), false);
  for (const auto& c : candidates) {
    if (gt_used[c.gt_index] || est_used[c.est_index]) continue;
    gt_used[c.gt_index] = est_used[c.est_index] = true;
    m.pairs.push_back(c);
  }
  m.tp = m.pairs.size();
  m.fp = estimated.size() - m.tp;
  m.fn = gt.size() - m.tp;
  return m;
}

double ap_at(std::span<const Point3> estimated, std::span<const Point3> gt, double t_dist, const Spacing& spacing) {
  if (!(t_dist > 0.0)) throw InvalidArgument("ap_at: t_dist must be > 0");
  if (gt.empty()) return estimated.empty() ? 1.0 : 0.0;
  if (estimated.empty()) return 0.0;
  const Matching m = greedy_match(estimated, gt, t_dist, spacing);
  return m.precision() * m.recall();
}

double map_over(std::span<const Point3> estimated, std::span<const Point3> gt, std::span<const double> t_set,
                const Spacing& spacing) {
  if (t_set.empty()) throw InvalidArgument("map_over: empty threshold set");
  double sum = 0.0;
  for (double t : t_set) sum += ap_at(estimated, gt, t, spacing);
  return sum / static_cast<double>(t_set.size());
}

EvalReport evaluate(std::span<const VolumeCentroids> volumes, std::span<const double> t_set,
                    const Spacing& spacing) {
  if (volumes.empty()) throw InvalidArgument("evaluate: no volumes");
  if (t_set.empty()) throw InvalidArgument("evaluate: empty threshold set");
  for (std::size_t i = 0; i < t_set.size(); ++i) {
    if (!(t_set[i] > 0.0)) throw InvalidArgument("evaluate: thresholds must be > 0");
    if (std::find(t_set.begin(), t_set.begin() + static_cast<std::ptrdiff_t>(i), t_set[i]) !=
        t_set.begin() + static_cast<std::ptrdiff_t>(i)) {
      throw InvalidArgument("evaluate: duplicate threshold " + std::to_string(t_set[i]));
    }
  }
  EvalReport report;
  std::vector<std::size_t> est_counts, gt_counts;
  for (const auto& v : volumes) {
    VolumeEval ve;
    ve.estimated_count = v.estimated.size();
    ve.gt_count = v.gt.size();
    for (double t : t_set) {
      const Matching m = greedy_match(v.estimated, v.gt, t, spacing);
      ve.precision[t] = m.precision();
      ve.recall[t] = m.recall();
      ve.ap[t] = ap_at(v.estimated, v.gt, t, spacing);
      report.ap_by_t[t] += ve.ap[t];
    }
    est_counts.push_back(ve.estimated_count);
    gt_counts.push_back(ve.gt_count);
    report.per_volume.push_back(std::move(ve));
  }
  for (auto& [t, ap] : report.ap_by_t) ap /= static_cast<double>(volumes.size());
  double sum = 0.0;
  for (const auto& [t, ap] : report.ap_by_t) sum += ap;
  report.map_score = sum / static_cast<double>(report.ap_by_t.size());
  report.mape = mape(est_counts, gt_counts);
  return report;
}

}  // namespace slicecluster
