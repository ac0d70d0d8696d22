#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "stview/geometry.hpp"
#include "stview/raster.hpp"
#include "stview/scene_io.hpp"

namespace stview {

// ---- Temporal bracketing ----------------------------------------------------

struct TemporalNeighbors {
  int minus = 0;
  int plus = 0;
};

/// minus = max{i : t_i ≤ t}, plus = min{i : t_i ≥ t}. `times` ascending.
TemporalNeighbors select_temporal_neighbors(std::span<const double> times, double t_target);

// ---- Flow correspondence ----------------------------------------------------

struct CycleTolerance {
  double abs_px = 1.0;
  double rel = 0.05;
};

/// |f(u) + b(u + f(u))| ≤ max(abs, rel·|f(u)|).
bool check_cycle(const FlowField& forward, const FlowField& backward, PixelCoord u,
                 const CycleTolerance& tol = {});

// ---- Paired and target clouds ----------------------------------------------

struct GridIndex {
  int frame = 0;
  int row = 0;
  int col = 0;
  bool operator==(const GridIndex&) const = default;
};

struct PointPair {
  Point3 x1, x2;
  Rgb c1, c2;
  PixelCoord u1, u2;
  GridIndex grid;
};

struct PairedPointCloud {
  int frame_minus = 0;
  int frame_plus = 0;
  std::vector<PointPair> pairs;
  std::size_t size() const noexcept { return pairs.size(); }
};

struct CloudPoint {
  Point3 position;
  Rgb color;
  PixelCoord u1, u2;
  int frame1 = -1;
  int frame2 = -1;
  std::optional<GridIndex> grid;  // absent for track-derived points
};

struct TargetCloud {
  std::vector<CloudPoint> points;
  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  std::vector<Point3> positions() const;
};

/// Flow-paired lifting of dynamic content from two bracketing frames. The
/// flows may be null only when minus == plus.
PairedPointCloud build_paired_cloud(const FrameBundle& frame_minus, int index_minus,
                                    const FrameBundle& frame_plus, int index_plus,
                                    const FlowField* forward, const FlowField* backward,
                                    const CycleTolerance& tol = {});

/// Linear-motion interpolation to t_target, w = (t − t⁻)/(t⁺ − t⁻).
TargetCloud interpolate_cloud(const PairedPointCloud& cloud, double t_minus, double t_plus,
                              double t_target);

// ---- Statistical outlier removal --------------------------------------------

struct OutlierConfig {
  int n_neighbors = 50;
  double deviation = 0.1;
  void validate() const;
};

/// Mean distance from each point to its nearest neighbors (self excluded).
/// Each mean sums the neighbor distances in ascending order.
std::vector<double> mean_neighbor_distances(std::span<const Point3> points, int n_neighbors);

/// Indices kept by the median + δ·std rule (ascending).
std::vector<std::size_t> outlier_inliers(std::span<const Point3> points, const OutlierConfig& cfg);

TargetCloud remove_outliers(const TargetCloud& cloud, const OutlierConfig& cfg = {});

// ---- Renderers --------------------------------------------------------------

struct DynamicRender {
  ImageF rgb;     // H×W×3
  MaskU8 mask;    // H×W {0,1}
  ImageF weight;  // H×W accumulated coverage (kernel weight or alpha)
};

struct SplatConfig {
  double alpha = 100.0;
  double coverage_threshold = 1e-3;
  void validate() const;
};

struct PointRenderConfig {
  double radius = 0.01;  // in normalized screen units: 1 = half the shorter image side
  double coverage_threshold = 1e-3;
  double opacity_stop = 0.999;
  void validate() const;
  double radius_px(const CameraModel& camera) const;
};

struct MeshRenderConfig {
  double max_depth_ratio = 1.05;
};

/// Softmax forward splatting with bilinear kernel and importance −depth/median.
DynamicRender render_splat(const TargetCloud& cloud, const CameraModel& target,
                           const SplatConfig& cfg = {});

/// Screen-space disks composited front to back. The composited color is
/// divided by the accumulated alpha; `weight` holds that alpha.
DynamicRender render_points(const TargetCloud& cloud, const CameraModel& target,
                            const PointRenderConfig& cfg = {});

/// Triangulates the source-pixel lattice (two triangles per quad) and
/// z-buffers it. Points without grid topology are ignored.
DynamicRender render_mesh(const TargetCloud& cloud, const CameraModel& target,
                          const MeshRenderConfig& cfg = {});

}  // namespace stview
