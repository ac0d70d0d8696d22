#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stview/geometry.hpp"
#include "stview/raster.hpp"
#include "stview/scene_io.hpp"

namespace stview {

/// Analytic scene: a textured background plane and a fronto-parallel textured
/// square translating at constant velocity, seen by a laterally moving
/// pinhole camera. Defaults make every per-frame flow an integer number of
/// pixels so flow lookups land on the lattice.
struct SyntheticConfig {
  int width = 256;
  int height = 256;
  int frames = 8;
  double focal = 200.0;
  double time_step = 1.0;
  double z_background = 10.0;
  double z_foreground = 5.0;
  double square_size = 1.5;
  Eigen::Vector2d square_start{-0.7, -0.2};  // center (x, y) at t = 0
  Eigen::Vector3d velocity{0.15, 0.05, 0.0}; // world units per unit time
  Eigen::Vector3d baseline{0.05, 0.0, 0.0};  // camera translation per unit time
  Eigen::Vector3d held_out_offset{0.0, 0.13, 0.0};
  double background_cell = 0.5;  // texture cell size in world units
  double foreground_cell = 0.25;
  std::uint64_t texture_seed = 7;
  int track_grid = 8;               // tracks per square side (0 disables)
  double track_dropout = 0.15;      // fraction of samples flagged invisible
  bool write_segments = true;

  void validate() const;
};

struct SyntheticView {
  ImageF rgb;
  ImageF depth;
  MaskU8 dynamic_mask;
};

struct TargetView {
  std::string name;
  double time = 0.0;
  CameraModel camera;
};

class SyntheticWorld {
 public:
  explicit SyntheticWorld(const SyntheticConfig& cfg);

  const SyntheticConfig& config() const noexcept { return cfg_; }
  Eigen::Matrix3d intrinsics() const;
  double frame_time(int i) const { return i * cfg_.time_step; }
  /// Camera on the capture path at time t (translation baseline·t).
  CameraModel path_camera(double t) const;
  /// Held-out camera: path camera at t shifted by held_out_offset.
  CameraModel held_out_camera(double t) const;
  Point3 square_center(double t) const;

  struct Hit {
    Point3 point;
    double depth = 0.0;
    bool on_square = false;
  };
  Hit trace(const CameraModel& camera, PixelCoord u, double t) const;
  Rgb shade(const Hit& hit, double t) const;
  /// Same surface point at another time (square points move with the square).
  Point3 advect(const Hit& hit, double t_from, double t_to) const;
  /// Whether a surface point is the front-most surface seen by camera at time t.
  bool visible(const CameraModel& camera, const Hit& hit, double t_hit, double t_view) const;

  SyntheticView render(const CameraModel& camera, double t) const;
  /// Exact correspondence flow from frame i to frame j.
  ImageF flow(int from, int to) const;

  Scene make_scene() const;
  std::vector<TargetView> held_out_targets() const;

 private:
  double noise(double x, double y, std::uint64_t channel_seed, double cell) const;

  SyntheticConfig cfg_;
};

/// Writes the bundle plus gt/targets.json, gt/rgb/*.png, gt/mask/*.png.
void write_synthetic(const std::filesystem::path& directory, const SyntheticConfig& cfg);

std::vector<TargetView> read_targets_json(const std::filesystem::path& path);
void write_targets_json(const std::filesystem::path& path, const std::vector<TargetView>& targets);

}  // namespace stview
