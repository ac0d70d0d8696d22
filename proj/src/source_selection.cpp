#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "stview/static_renderer.hpp"

namespace stview {

void SourceSelectionConfig::validate() const {
  if (n_spatial < 1) throw Error(ErrorKind::kInvalidArgument, "n_spatial must be positive");
  if (strategy == SelectionStrategy::kCluster && n_cluster < n_spatial) {
    throw Error(ErrorKind::kInvalidArgument, "n_cluster must be >= n_spatial");
  }
  if (!(time_window >= 0.0)) throw Error(ErrorKind::kInvalidArgument, "time window must be >= 0");
}

namespace {

constexpr int kMaxIterations = 100;
constexpr double kShiftTolerance = 1e-6;

int nearest_center(const Point3& p, const std::vector<Point3>& centers) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double d = (p - centers[c]).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

}  // namespace

KMeansResult kmeans(std::span<const Point3> points, int k, std::uint64_t seed) {
  const std::size_t n = points.size();
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw Error(ErrorKind::kInsufficientFrames,
                "kmeans: need at least " + std::to_string(k) + " points, have " + std::to_string(n));
  }
  std::mt19937_64 rng(seed);
  KMeansResult res;

  // k-means++ seeding.
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  res.centers.push_back(points[pick(rng)]);
  std::vector<double> d2(n);
  while (static_cast<int>(res.centers.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : res.centers) best = std::min(best, (points[i] - c).squaredNorm());
      d2[i] = best;
      total += best;
    }
    std::size_t chosen = 0;
    if (total > 0.0) {
      const double target = std::uniform_real_distribution<double>(0.0, total)(rng);
      double run = 0.0;
      chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        run += d2[i];
        if (run > target && d2[i] > 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick(rng);
    }
    res.centers.push_back(points[chosen]);
  }

  res.assignment.assign(n, 0);
  for (res.iterations = 1; res.iterations <= kMaxIterations; ++res.iterations) {
    for (std::size_t i = 0; i < n; ++i) res.assignment[i] = nearest_center(points[i], res.centers);
    std::vector<Point3> sums(k, Point3::Zero());
    std::vector<int> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      sums[res.assignment[i]] += points[i];
      ++counts[res.assignment[i]];
    }
    double shift = 0.0;
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty clusters keep their center
      const Point3 next = sums[c] / counts[c];
      shift = std::max(shift, (next - res.centers[c]).norm());
      res.centers[c] = next;
    }
    if (shift < kShiftTolerance) break;
  }
  res.iterations = std::min(res.iterations, kMaxIterations);
  for (std::size_t i = 0; i < n; ++i) res.assignment[i] = nearest_center(points[i], res.centers);
  return res;
}

std::vector<int> select_source_views(std::span<const Point3> centers, std::span<const double> times,
                                     const Point3& target_center, double t_target,
                                     const SourceSelectionConfig& cfg) {
  cfg.validate();
  if (centers.size() != times.size()) {
    throw Error(ErrorKind::kInvalidArgument, "select_source_views: centers/times size mismatch");
  }
  const int n = static_cast<int>(centers.size());
  std::vector<int> selected;

  if (cfg.strategy == SelectionStrategy::kWindowNearest) {
    std::vector<int> candidates;
    for (int i = 0; i < n; ++i)
      if (std::abs(times[i] - t_target) <= cfg.time_window) candidates.push_back(i);
    if (static_cast<int>(candidates.size()) < cfg.n_spatial) {
      throw Error(ErrorKind::kInsufficientFrames,
                  "select_source_views: " + std::to_string(candidates.size()) +
                      " frames inside the time window, need " + std::to_string(cfg.n_spatial));
    }
    std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
      return (centers[a] - target_center).squaredNorm() < (centers[b] - target_center).squaredNorm();
    });
    candidates.resize(cfg.n_spatial);
    return candidates;
  }

  if (n < cfg.n_cluster) {
    throw Error(ErrorKind::kInsufficientFrames,
                "select_source_views: " + std::to_string(n) + " frames, need n_cluster=" +
                    std::to_string(cfg.n_cluster));
  }
  const KMeansResult km = kmeans(centers, cfg.n_cluster, cfg.rng_seed);
  std::vector<std::vector<int>> members(cfg.n_cluster);
  for (int i = 0; i < n; ++i) members[km.assignment[i]].push_back(i);
  std::vector<int> clusters;
  for (int c = 0; c < cfg.n_cluster; ++c)
    if (!members[c].empty()) clusters.push_back(c);
  if (static_cast<int>(clusters.size()) < cfg.n_spatial) {
    throw Error(ErrorKind::kInsufficientFrames, "select_source_views: only " +
                                                    std::to_string(clusters.size()) +
                                                    " non-empty clusters");
  }
  std::stable_sort(clusters.begin(), clusters.end(), [&](int a, int b) {
    return (km.centers[a] - target_center).squaredNorm() <
           (km.centers[b] - target_center).squaredNorm();
  });
  clusters.resize(cfg.n_spatial);
  for (int c : clusters) {
    int best = members[c].front();
    for (int m : members[c])
      if (std::abs(times[m] - t_target) < std::abs(times[best] - t_target)) best = m;
    selected.push_back(best);
  }
  return selected;
}

std::vector<int> select_source_views(const Scene& scene, const CameraModel& target, double t_target,
                                     const SourceSelectionConfig& cfg) {
  std::vector<Point3> centers;
  for (const auto& f : scene.frames) centers.push_back(f.camera.center());
  const auto times = scene.times();
  return select_source_views(centers, times, target.center(), t_target, cfg);
}

}  // namespace stview
