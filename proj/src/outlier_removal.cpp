#include <algorithm>
#include <cmath>

#include "stview/dynamic_renderer.hpp"
#include "stview/point_index.hpp"

namespace stview {

void OutlierConfig::validate() const {
  if (n_neighbors < 1 || !(deviation >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "outlier config: need n_neighbors >= 1, deviation >= 0");
  }
}

std::vector<double> mean_neighbor_distances(std::span<const Point3> points, int n_neighbors) {
  const std::size_t n = points.size();
  std::vector<double> means(n, 0.0);
  if (n < 2) return means;
  const int k = static_cast<int>(std::min<std::size_t>(n_neighbors, n - 1));
  const KdTree tree(points);
  for (std::size_t i = 0; i < n; ++i) {
    const auto nn = tree.knn_excluding(static_cast<std::uint32_t>(i), k);
    double sum = 0.0;
    for (const auto& nb : nn) sum += std::sqrt(nb.distance_sq);
    means[i] = sum / k;
  }
  return means;
}

std::vector<std::size_t> outlier_inliers(std::span<const Point3> points, const OutlierConfig& cfg) {
  cfg.validate();
  const std::size_t n = points.size();
  std::vector<std::size_t> keep;
  if (n == 0) return keep;
  const std::vector<double> means = mean_neighbor_distances(points, cfg.n_neighbors);

  std::vector<double> sorted = means;
  std::sort(sorted.begin(), sorted.end());
  const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  double mean = 0.0;
  for (double m : means) mean += m;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double m : means) var += (m - mean) * (m - mean);
  const double stddev = std::sqrt(var / static_cast<double>(n));

  const double threshold = median + cfg.deviation * stddev;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(means[i] > threshold)) keep.push_back(i);
  }
  return keep;
}

TargetCloud remove_outliers(const TargetCloud& cloud, const OutlierConfig& cfg) {
  const std::vector<Point3> positions = cloud.positions();
  TargetCloud out;
  for (std::size_t i : outlier_inliers(positions, cfg)) out.points.push_back(cloud.points[i]);
  return out;
}

}  // namespace stview
