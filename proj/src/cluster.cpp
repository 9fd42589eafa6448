#include "slicecluster/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>
#include <utility>

namespace slicecluster {

std::vector<PseudoPoint3D> lift(const DetectionSet& detections, Axis axis) {
  std::vector<PseudoPoint3D> out;
  const auto group = detections.group(axis);
  out.reserve(group.size());
  for (const auto& d : group) {
    out.push_back({from_slice_coords(axis, d.box.center_u(), d.box.center_v(), static_cast<double>(d.slice_index)),
                   axis, d.slice_index});
  }
  return out;
}

CondensedMatrix pairwise_distances(std::span<const Point3> points, const Spacing& spacing) {
  spacing.validate();
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].finite()) throw InvalidArgument("point " + std::to_string(i) + " has non-finite coordinates");
  }
  CondensedMatrix d(points.size());
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) d.at(i, j) = distance(points[i], points[j], spacing);
  }
  return d;
}

LinkageScheme LinkageScheme::average(std::size_t n_i, std::size_t n_j) {
  const double total = static_cast<double>(n_i + n_j);
  return {static_cast<double>(n_i) / total, static_cast<double>(n_j) / total, 0.0, 0.0};
}

double LinkageScheme::update(double d_ie, double d_je, double d_ij) const {
  double out = alpha_i * d_ie + alpha_j * d_je;
  if (beta != 0.0) out += beta * d_ij;
  if (gamma != 0.0) out += gamma * std::abs(d_ie - d_je);
  return out;
}

namespace {

// Merge priority: dissimilarity, then the (smaller id, larger id) pair.
struct PairKey {
  double dist;
  std::size_t lo;
  std::size_t hi;

  bool operator<(const PairKey& o) const { return std::tie(dist, lo, hi) < std::tie(o.dist, o.lo, o.hi); }
};

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

}  // namespace

Dendrogram ahc_average_linkage(const CondensedMatrix& distances) {
  const std::size_t n = distances.size();
  Dendrogram tree{n, {}};
  if (n < 2) return tree;
  tree.merges.reserve(n - 1);

  // Clusters live in "slots"; a merge keeps the lower slot and retires the
  // higher one. nn[i] caches the best partner among active slots j > i.
  CondensedMatrix d = distances;
  std::vector<std::size_t> cluster_id(n), size(n, 1);
  std::iota(cluster_id.begin(), cluster_id.end(), 0);
  std::vector<std::size_t> active(n);
  std::iota(active.begin(), active.end(), 0);
  std::vector<std::size_t> nn(n, kNone);
  std::vector<PairKey> nn_key(n);

  const auto key = [&](std::size_t i, std::size_t j) {
    const std::size_t a = cluster_id[i], b = cluster_id[j];
    return PairKey{d(i, j), std::min(a, b), std::max(a, b)};
  };
  // Position in `active` of the first slot after i.
  const auto after = [&](std::size_t i) { return std::upper_bound(active.begin(), active.end(), i); };
  const auto refresh = [&](std::size_t i) {
    nn[i] = kNone;
    for (auto it = after(i); it != active.end(); ++it) {
      const PairKey k = key(i, *it);
      if (nn[i] == kNone || k < nn_key[i]) {
        nn[i] = *it;
        nn_key[i] = k;
      }
    }
  };
  for (std::size_t i = 0; i < n; ++i) refresh(i);

  for (std::size_t m = 0; m + 1 < n; ++m) {
    std::size_t best = kNone;
    for (std::size_t i : active) {
      if (nn[i] != kNone && (best == kNone || nn_key[i] < nn_key[best])) best = i;
    }
    const std::size_t a = best;
    const std::size_t b = nn[a];
    const PairKey merged = nn_key[a];
    tree.merges.push_back({merged.lo, merged.hi, merged.dist, size[a] + size[b]});

    const auto scheme = LinkageScheme::average(size[a], size[b]);
    for (std::size_t e : active) {
      if (e == a || e == b) continue;
      d.at(a, e) = scheme.update(d(a, e), d(b, e), merged.dist);
    }
    active.erase(std::lower_bound(active.begin(), active.end(), b));
    nn[b] = kNone;
    size[a] += size[b];
    cluster_id[a] = n + m;

    refresh(a);
    for (std::size_t i : active) {
      if (i >= b) break;
      if (i == a) continue;
      if (nn[i] == a || nn[i] == b) {
        refresh(i);
      } else if (i < a) {
        const PairKey k = key(i, a);
        if (k < nn_key[i]) {
          nn[i] = a;
          nn_key[i] = k;
        }
      }
    }
  }
  return tree;
}

std::vector<int> cut(const Dendrogram& dendrogram, std::size_t k) {
  const std::size_t n = dendrogram.n_points;
  if (k < 1 || k > n) {
    throw InvalidArgument("cut: k = " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  if (dendrogram.merges.size() + 1 != n) throw InvalidArgument("cut: dendrogram must hold n - 1 merges");
  std::vector<std::size_t> parent(2 * n - 1);
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t m = 0; m < n - k; ++m) {
    parent[dendrogram.merges[m].a] = n + m;
    parent[dendrogram.merges[m].b] = n + m;
  }
  const auto root = [&](std::size_t x) {
    std::size_t r = x;
    while (parent[r] != r) r = parent[r];
    while (parent[x] != r) x = std::exchange(parent[x], r);
    return r;
  };
  std::vector<int> label_of_root(2 * n - 1, -1);
  std::vector<int> labels(n);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    int& l = label_of_root[root(i)];
    if (l < 0) l = next++;
    labels[i] = l;
  }
  return labels;
}

double silhouette(const CondensedMatrix& distances, std::span<const int> labels, SilhouetteVariant variant) {
  const std::size_t n = distances.size();
  if (labels.size() != n) throw InvalidArgument("silhouette: one label per point required");
  int max_label = -1;
  for (int l : labels) {
    if (l < 0) throw InvalidArgument("silhouette: negative label");
    max_label = std::max(max_label, l);
  }
  const auto k = static_cast<std::size_t>(max_label + 1);
  std::vector<std::size_t> count(k, 0);
  for (int l : labels) ++count[static_cast<std::size_t>(l)];
  if (std::find(count.begin(), count.end(), 0) != count.end()) {
    throw InvalidArgument("silhouette: labels must cover 0..k-1");
  }
  if (k < 2) throw InvalidArgument("silhouette: undefined for fewer than 2 clusters");

  // sums[i * k + c] = total distance from point i to members of cluster c.
  std::vector<double> sums(n * k, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const auto li = static_cast<std::size_t>(labels[i]);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dij = distances(i, j);
      sums[i * k + static_cast<std::size_t>(labels[j])] += dij;
      sums[j * k + li] += dij;
    }
  }

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    if (count[c] == 1) continue;
    const double a = sums[i * k + c] / static_cast<double>(count[c] - 1);
    double b = variant == SilhouetteVariant::NearestCluster ? std::numeric_limits<double>::infinity() : 0.0;
    for (std::size_t q = 0; q < k; ++q) {
      if (q == c) continue;
      const double mean_q = sums[i * k + q] / static_cast<double>(count[q]);
      if (variant == SilhouetteVariant::NearestCluster) {
        b = std::min(b, mean_q);
      } else {
        b += mean_q;
      }
    }
    if (variant == SilhouetteVariant::MeanOfClusters) b /= static_cast<double>(k - 1);
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

std::vector<Point3> cluster_means(std::span<const Point3> points, std::span<const int> labels, std::size_t k) {
  std::vector<Point3> sums(k);
  std::vector<std::size_t> count(k, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    sums[c].x += points[i].x;
    sums[c].y += points[i].y;
    sums[c].z += points[i].z;
    ++count[c];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (count[c] == 0) throw InvalidArgument("cluster_means: empty cluster " + std::to_string(c));
    const auto m = static_cast<double>(count[c]);
    sums[c] = {sums[c].x / m, sums[c].y / m, sums[c].z / m};
  }
  return sums;
}

ClusterResult select_k(const Dendrogram& dendrogram, const CondensedMatrix& distances,
                       std::span<const Point3> points, KRange range, SilhouetteVariant variant) {
  const std::size_t n = dendrogram.n_points;
  if (n < 2) throw InvalidArgument("select_k: need at least 2 points");
  if (distances.size() != n || points.size() != n) throw InvalidArgument("select_k: inputs disagree on point count");
  if (range.k_min < 2 || range.k_min > range.k_max || range.k_max > n) {
    throw InvalidArgument("select_k: k range [" + std::to_string(range.k_min) + ", " + std::to_string(range.k_max) +
                          "] must satisfy 2 <= k_min <= k_max <= " + std::to_string(n));
  }
  ClusterResult best;
  for (std::size_t k = range.k_min; k <= range.k_max; ++k) {
    std::vector<int> labels = cut(dendrogram, k);
    const double score = silhouette(distances, labels, variant);
    if (!best.silhouette || score > *best.silhouette) {
      best.k = k;
      best.labels = std::move(labels);
      best.silhouette = score;
    }
  }
  best.centroids = cluster_means(points, best.labels, best.k);
  return best;
}

ClusterResult cluster_axis(const DetectionSet& detections, Axis axis, const Spacing& spacing, KRange range,
                           SilhouetteVariant variant) {
  const auto lifted = lift(detections, axis);
  if (lifted.size() < 2) {
    throw InvalidArgument("axis " + std::string(axis_name(axis)) + ": clustering needs at least 2 detections, got " +
                          std::to_string(lifted.size()));
  }
  std::vector<Point3> points;
  points.reserve(lifted.size());
  for (const auto& p : lifted) points.push_back(p.position);

  range.k_max = std::min(range.k_max, points.size());
  const CondensedMatrix d = pairwise_distances(points, spacing);
  const Dendrogram tree = ahc_average_linkage(d);
  ClusterResult result = select_k(tree, d, points, range, variant);
  result.axis = axis;
  return result;
}

FusionResult fuse_axes(std::span<const ClusterResult> results, std::size_t margin, const Spacing& spacing,
                       SilhouetteVariant variant) {
  if (results.empty()) throw InvalidArgument("fuse_axes: no cluster results to fuse");
  for (const auto& r : results) {
    if (!r.axis) throw InvalidArgument("fuse_axes: every cluster result must carry its axis");
  }
  FusionResult out;
  if (results.size() == 1) {
    out.centroids = results[0].centroids;
    out.support.assign(out.centroids.size(), {*results[0].axis});
    out.silhouette = results[0].silhouette;
    return out;
  }

  std::vector<Point3> pool;
  std::vector<Axis> tags;
  std::vector<std::size_t> counts;
  for (const auto& r : results) {
    pool.insert(pool.end(), r.centroids.begin(), r.centroids.end());
    tags.insert(tags.end(), r.centroids.size(), *r.axis);
    counts.push_back(r.centroids.size());
  }
  if (pool.size() < 2) return out;

  std::sort(counts.begin(), counts.end());
  const std::size_t mid = counts.size() / 2;
  const std::size_t median = counts.size() % 2 == 1 ? counts[mid] : (counts[mid - 1] + counts[mid]) / 2;
  KRange range;
  range.k_max = std::clamp<std::size_t>(median + margin, 2, pool.size());
  range.k_min = median >= margin + 2 ? median - margin : 2;
  range.k_min = std::min(range.k_min, range.k_max);

  const CondensedMatrix d = pairwise_distances(pool, spacing);
  const Dendrogram tree = ahc_average_linkage(d);
  const ClusterResult pooled = select_k(tree, d, pool, range, variant);
  out.silhouette = pooled.silhouette;

  std::vector<std::vector<Axis>> axes_of(pooled.k);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    auto& s = axes_of[static_cast<std::size_t>(pooled.labels[i])];
    if (std::find(s.begin(), s.end(), tags[i]) == s.end()) s.push_back(tags[i]);
  }
  for (std::size_t c = 0; c < pooled.k; ++c) {
    if (axes_of[c].size() < 2) continue;
    std::sort(axes_of[c].begin(), axes_of[c].end());
    out.centroids.push_back(pooled.centroids[c]);
    out.support.push_back(std::move(axes_of[c]));
  }
  return out;
}

}  // namespace slicecluster
