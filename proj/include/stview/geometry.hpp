#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>

#include <Eigen/Core>

#include "stview/error.hpp"
#include "stview/raster.hpp"

namespace stview {

/// Continuous pixel coordinate. The center of the pixel at column c, row r is
/// (c, r), so lattice samples are exact at integer coordinates.
struct PixelCoord {
  double x = 0.0;
  double y = 0.0;

  bool finite() const noexcept { return std::isfinite(x) && std::isfinite(y); }
  PixelCoord operator+(const PixelCoord& o) const noexcept { return {x + o.x, y + o.y}; }
  PixelCoord operator-(const PixelCoord& o) const noexcept { return {x - o.x, y - o.y}; }
  bool operator==(const PixelCoord&) const = default;
};

using Point3 = Eigen::Vector3d;
using Rgb = Eigen::Vector3d;

struct Projection {
  PixelCoord pixel;
  double depth = 0.0;  // camera-frame z
  bool in_front() const noexcept { return depth > 0.0; }
};

/// Pinhole camera. Extrinsics map world to camera; depth is camera-frame z.
class CameraModel {
 public:
  CameraModel(const Eigen::Matrix3d& intrinsics, const Eigen::Matrix4d& extrinsics,
              int width, int height);

  const Eigen::Matrix3d& intrinsics() const noexcept { return intrinsics_; }
  const Eigen::Matrix4d& extrinsics() const noexcept { return extrinsics_; }
  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  Eigen::Matrix3d rotation() const { return extrinsics_.topLeftCorner<3, 3>(); }
  Eigen::Vector3d translation() const { return extrinsics_.topRightCorner<3, 1>(); }
  /// Camera center in world coordinates.
  const Point3& center() const noexcept { return center_; }

  Point3 lift(const PixelCoord& u, double depth) const;
  Projection project(const Point3& world) const noexcept;
  /// Camera-frame z of a world point.
  double depth_of(const Point3& world) const noexcept;
  /// Unit-z direction (camera z component 1) of the ray through u, in world frame.
  Eigen::Vector3d ray_direction(const PixelCoord& u) const noexcept;

  bool contains(const PixelCoord& u) const noexcept {
    return u.x >= 0.0 && u.y >= 0.0 && u.x <= width_ - 1.0 && u.y <= height_ - 1.0;
  }

 private:
  Eigen::Matrix3d intrinsics_;
  Eigen::Matrix4d extrinsics_;
  Eigen::Matrix3d k_inv_;
  Eigen::Matrix3d r_;
  Eigen::Vector3d t_;
  Point3 center_;
  int width_;
  int height_;
};

Point3 lift(const CameraModel& camera, const PixelCoord& u, double depth);
Projection project(const CameraModel& camera, const Point3& world) noexcept;

/// Bilinear sample of channel `channel` with clamp-to-edge addressing.
template <typename T>
double sample_bilinear(const Raster<T>& raster, PixelCoord u, int channel = 0) {
  const double x = std::clamp(u.x, 0.0, raster.width() - 1.0);
  const double y = std::clamp(u.y, 0.0, raster.height() - 1.0);
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, raster.width() - 1);
  const int y1 = std::min(y0 + 1, raster.height() - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = (1.0 - fx) * static_cast<double>(raster.at(x0, y0, channel)) +
                     fx * static_cast<double>(raster.at(x1, y0, channel));
  const double bottom = (1.0 - fx) * static_cast<double>(raster.at(x0, y1, channel)) +
                        fx * static_cast<double>(raster.at(x1, y1, channel));
  return (1.0 - fy) * top + fy * bottom;
}

/// All channels at u; `out` must hold raster.channels() values.
template <typename T>
void interpolate_bilinear(const Raster<T>& raster, PixelCoord u, std::span<double> out) {
  if (raster.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "interpolate_bilinear: empty raster");
  }
  if (!u.finite()) {
    throw Error(ErrorKind::kInvalidArgument, "interpolate_bilinear: non-finite coordinate");
  }
  if (out.size() < static_cast<std::size_t>(raster.channels())) {
    throw Error(ErrorKind::kInvalidArgument, "interpolate_bilinear: output too small");
  }
  for (int c = 0; c < raster.channels(); ++c) out[c] = sample_bilinear(raster, u, c);
}

inline Rgb sample_rgb(const ImageF& image, PixelCoord u) {
  return {sample_bilinear(image, u, 0), sample_bilinear(image, u, 1),
          sample_bilinear(image, u, 2)};
}

}  // namespace stview
