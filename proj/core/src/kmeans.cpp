// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <limits>
#include <random>

#include "homeseq/timefeatures.hpp"

namespace homeseq {

namespace {

double sq_dist(const FeaturePoint& a, const FeaturePoint& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  return dx * dx + dy * dy;
}

/// Nearest centroid, ties to the lowest index.
std::size_t nearest(const FeaturePoint& p, const std::vector<FeaturePoint>& centroids) {
  std::size_t best = 0;
  double best_d = sq_dist(p, centroids[0]);
  for (std::size_t c = 1; c < centroids.size(); ++c) {
    const double d = sq_dist(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

double min_sq_dist(const FeaturePoint& p, const std::vector<FeaturePoint>& centroids) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : centroids) best = std::min(best, sq_dist(p, c));
  return best;
}

std::size_t farthest_point(std::span<const FeaturePoint> points,
                           const std::vector<FeaturePoint>& centroids) {
  std::size_t best = 0;
  double best_d = -1.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double d = min_sq_dist(points[i], centroids);
    if (d > best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

double total_ssd(std::span<const FeaturePoint> points, const std::vector<FeaturePoint>& centroids,
                 const std::vector<std::size_t>& assignment) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) s += sq_dist(points[i], centroids[assignment[i]]);
  return s;
}

std::vector<std::size_t> assign_all(std::span<const FeaturePoint> points,
                                    const std::vector<FeaturePoint>& centroids) {
  std::vector<std::size_t> a(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) a[i] = nearest(points[i], centroids);
  return a;
}

/// Centroids become member means. An empty cluster is re-seeded at the point
/// farthest from its current centroid.
void update_centroids(std::span<const FeaturePoint> points, std::vector<FeaturePoint>& centroids,
                      std::vector<std::size_t>& assignment) {
  const std::size_t k = centroids.size();
  std::vector<FeaturePoint> sums(k, FeaturePoint{0.0, 0.0});
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    sums[assignment[i]][0] += points[i][0];
    sums[assignment[i]][1] += points[i][1];
    ++counts[assignment[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] > 0) {
      centroids[c] = {sums[c][0] / static_cast<double>(counts[c]),
                      sums[c][1] / static_cast<double>(counts[c])};
      continue;
    }
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (counts[assignment[i]] <= 1) continue;  // do not empty another cluster
      const double d = sq_dist(points[i], centroids[assignment[i]]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far_d < 0.0) continue;
    --counts[assignment[far]];
    assignment[far] = c;
    counts[c] = 1;
    centroids[c] = points[far];
  }
}

KMeansResult lloyd(std::span<const FeaturePoint> points, std::vector<FeaturePoint> centroids) {
  KMeansResult r;
  r.assignment = assign_all(points, centroids);
  r.ssd_trace.push_back(total_ssd(points, centroids, r.assignment));
  for (std::size_t it = 0; it < kMaxLloydIterations; ++it) {
    update_centroids(points, centroids, r.assignment);
    auto next = assign_all(points, centroids);
    r.ssd_trace.push_back(total_ssd(points, centroids, next));
    r.iterations = it + 1;
    const bool fixpoint = next == r.assignment;
    r.assignment = std::move(next);
    if (fixpoint) break;
  }
  update_centroids(points, centroids, r.assignment);
  r.centroids = std::move(centroids);
  r.ssd = total_ssd(points, r.centroids, r.assignment);
  return r;
}

}  // namespace

KMeansResult kmeans_fit(std::span<const FeaturePoint> points, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw ConfigError("kmeans_fit: K must be at least 1");
  if (k > points.size())
    throw ConfigError("kmeans_fit: K=" + std::to_string(k) + " exceeds " +
                      std::to_string(points.size()) + " points");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
  std::vector<FeaturePoint> centroids{points[pick(rng)]};
  while (centroids.size() < k) centroids.push_back(points[farthest_point(points, centroids)]);
  return lloyd(points, std::move(centroids));
}

std::vector<KMeansResult> kmeans_path(std::span<const FeaturePoint> points, std::size_t k_max,
                                      std::uint64_t seed) {
  k_max = std::min(k_max, points.size());
  std::vector<KMeansResult> path;
  for (std::size_t k = 1; k <= k_max; ++k) {
    KMeansResult fresh = kmeans_fit(points, k, seed);
    if (!path.empty()) {
      // Growing the previous solution by its farthest point cannot raise SSD.
      auto grown_init = path.back().centroids;
      grown_init.push_back(points[farthest_point(points, grown_init)]);
      KMeansResult grown = lloyd(points, std::move(grown_init));
      if (grown.ssd < fresh.ssd) fresh = std::move(grown);
    }
    path.push_back(std::move(fresh));
  }
  return path;
}

std::size_t elbow_select(std::span<const double> ssd_curve) {
  if (ssd_curve.size() < 3) throw ConfigError("elbow_select: need SSD for at least K=1..3");
  for (std::size_t i = 1; i < ssd_curve.size(); ++i) {
    const double tol = 1e-12 * std::max(1.0, std::abs(ssd_curve[i - 1]));
    if (ssd_curve[i] > ssd_curve[i - 1] + tol)
      throw ValidationError("elbow_select: SSD curve increases at K=" + std::to_string(i + 1));
  }
  std::size_t best_k = 2;
  double best = 0.0;
  for (std::size_t i = 1; i + 1 < ssd_curve.size(); ++i) {
    const double d2 = ssd_curve[i - 1] - 2.0 * ssd_curve[i] + ssd_curve[i + 1];
    if (d2 > best) {
      best = d2;
      best_k = i + 1;
    }
  }
  return best_k;
}

}  // namespace homeseq
