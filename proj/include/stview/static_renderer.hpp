#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "stview/dynamic_renderer.hpp"
#include "stview/scene_io.hpp"

namespace stview {

// ---- Source view selection --------------------------------------------------

enum class SelectionStrategy { kWindowNearest, kCluster };

struct SourceSelectionConfig {
  int n_spatial = 10;
  SelectionStrategy strategy = SelectionStrategy::kWindowNearest;
  double time_window = 12.0;
  int n_cluster = 40;
  std::uint64_t rng_seed = 0;
  void validate() const;
};

struct KMeansResult {
  std::vector<Point3> centers;
  std::vector<int> assignment;
  int iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding; stops after 100 iterations or
/// when no center moves more than 1e-6.
KMeansResult kmeans(std::span<const Point3> points, int k, std::uint64_t seed);

std::vector<int> select_source_views(std::span<const Point3> centers, std::span<const double> times,
                                     const Point3& target_center, double t_target,
                                     const SourceSelectionConfig& cfg);

std::vector<int> select_source_views(const Scene& scene, const CameraModel& target, double t_target,
                                     const SourceSelectionConfig& cfg);

// ---- Backend A: aggregated static point cloud -------------------------------

struct StaticRender {
  ImageF rgb;
  MaskU8 coverage;
  std::vector<ImageF> diagnostics;  // backend B: one σ map per block
};

/// Static pixels (mask 0) of every selected frame, lifted and rendered as points.
TargetCloud static_point_cloud(const Scene& scene, std::span<const int> sources, int stride = 1);

StaticRender render_static_pointcloud(const Scene& scene, const CameraModel& target,
                                      std::span<const int> sources, int stride = 1,
                                      const PointRenderConfig& points = {});

// ---- Backend B: epipolar aggregation with masked view attention -------------

struct AggregatorConfig {
  int n_blocks = 2;
  int n_ray_samples = 64;
  int feature_dim = 16;
  std::uint64_t weight_seed = 0;
  bool auto_near_far = true;
  double near = 0.1;
  double far = 100.0;
  bool masked_attention = true;
  int threads = 1;
  void validate() const;
};

/// Uniform z-depths in [near, far] along the pixel ray (world positions).
std::vector<Point3> sample_ray(const CameraModel& target, PixelCoord pixel, double near, double far,
                               int n_samples);

/// 1st/99th percentile of finite source depths, scaled by 0.9 / 1.1.
std::pair<double, double> near_far_from_depths(const Scene& scene, std::span<const int> sources);

struct ViewFeature {
  Eigen::VectorXd feature;  // embedded RGB at the projection
  bool masked = false;      // interpolated dynamic mask > 0
  bool valid = false;       // in front of the camera and inside the image
};

struct ViewStep {
  Eigen::VectorXd output;
  std::vector<double> weights;  // per view, zero for excluded views
  std::vector<bool> included;
  bool all_masked = false;      // masking fell back to the vanilla computation
};

struct RayStep {
  std::vector<Eigen::VectorXd> features;
  std::vector<double> attention;  // aggregation-token row over samples
};

struct RayResult {
  Rgb rgb;
  std::vector<bool> sample_all_masked;
  std::vector<double> sigma;  // per block
  bool all_masked() const;    // every sample fell back
};

class EpipolarAggregator {
 public:
  explicit EpipolarAggregator(const AggregatorConfig& cfg);

  const AggregatorConfig& config() const noexcept { return cfg_; }

  /// Frozen d×3 embedding; the first three output channels are the raw RGB.
  Eigen::VectorXd embed_rgb(const Rgb& rgb) const;

  ViewFeature gather_feature(const Point3& position, const FrameBundle& view) const;
  std::vector<ViewFeature> gather_features(const Point3& position, const Scene& scene,
                                           std::span<const int> sources) const;

  /// Which views enter the softmax for one sample, before any fallback.
  std::vector<bool> included_views(std::span<const ViewFeature> views, bool use_mask,
                                   bool* all_masked) const;

  ViewStep view_transformer_step(int block, const Eigen::VectorXd& query,
                                 std::span<const ViewFeature> views, bool use_mask) const;
  RayStep ray_transformer_step(int block, std::span<const Eigen::VectorXd> features) const;

  /// Element-wise max over the views that enter block 1.
  Eigen::VectorXd initial_feature(std::span<const ViewFeature> views, bool use_mask) const;

  /// Runs every block on pre-gathered per-sample view features.
  RayResult aggregate(std::span<const std::vector<ViewFeature>> samples, bool use_mask) const;

  RayResult render_ray(const CameraModel& target, PixelCoord pixel, const Scene& scene,
                       std::span<const int> sources, double near, double far) const;

  /// Whole image. coverage = 0 where every sample of the ray fell back.
  StaticRender render(const CameraModel& target, const Scene& scene,
                      std::span<const int> sources) const;

  Eigen::MatrixXd key_projection(int block) const { return blocks_.at(block).view_k; }
  Eigen::MatrixXd value_projection(int block) const { return blocks_.at(block).view_v; }

 private:
  struct Block {
    Eigen::MatrixXd view_q, view_k, view_v;
    Eigen::MatrixXd ray_q, ray_k, ray_v;
  };

  AggregatorConfig cfg_;
  Eigen::MatrixXd embed_;
  std::vector<Block> blocks_;
  Eigen::MatrixXd to_rgb_;
  Eigen::Vector3d to_rgb_bias_;
};

/// Population std per feature dimension, averaged over dimensions.
double feature_stddev(std::span<const Eigen::VectorXd> features);

}  // namespace stview
