#include "stview/geometry.hpp"

#include <limits>

#include <Eigen/LU>

namespace stview {

namespace {

constexpr double kOrthoTol = 1e-6;

}  // namespace

CameraModel::CameraModel(const Eigen::Matrix3d& intrinsics, const Eigen::Matrix4d& extrinsics,
                         int width, int height)
    : intrinsics_(intrinsics), extrinsics_(extrinsics), width_(width), height_(height) {
  if (width <= 0 || height <= 0) {
    throw Error(ErrorKind::kInvalidArgument, "camera: image size must be positive");
  }
  if (!intrinsics.allFinite() || !extrinsics.allFinite()) {
    throw Error(ErrorKind::kInvalidArgument, "camera: non-finite matrix entry");
  }
  if (intrinsics(2, 0) != 0.0 || intrinsics(2, 1) != 0.0 || intrinsics(2, 2) != 1.0 ||
      intrinsics(1, 0) != 0.0) {
    throw Error(ErrorKind::kInvalidArgument, "camera: intrinsics must be upper-triangular with last row (0,0,1)");
  }
  if (intrinsics(0, 0) <= 0.0 || intrinsics(1, 1) <= 0.0) {
    throw Error(ErrorKind::kInvalidArgument, "camera: focal lengths must be positive");
  }
  r_ = extrinsics.topLeftCorner<3, 3>();
  t_ = extrinsics.topRightCorner<3, 1>();
  if (extrinsics(3, 0) != 0.0 || extrinsics(3, 1) != 0.0 || extrinsics(3, 2) != 0.0 ||
      extrinsics(3, 3) != 1.0) {
    throw Error(ErrorKind::kInvalidArgument, "camera: extrinsics last row must be (0,0,0,1)");
  }
  if (!(r_.transpose() * r_).isApprox(Eigen::Matrix3d::Identity(), kOrthoTol) ||
      std::abs(r_.determinant() - 1.0) > kOrthoTol) {
    throw Error(ErrorKind::kInvalidArgument, "camera: rotation block is not a proper rotation");
  }
  k_inv_ = intrinsics.inverse();
  center_ = -r_.transpose() * t_;
}

Point3 CameraModel::lift(const PixelCoord& u, double depth) const {
  if (!u.finite() || !std::isfinite(depth)) {
    throw Error(ErrorKind::kInvalidArgument, "lift: non-finite input");
  }
  if (depth <= 0.0) {
    throw Error(ErrorKind::kInvalidArgument, "lift: depth must be positive");
  }
  const Eigen::Vector3d cam = depth * (k_inv_ * Eigen::Vector3d(u.x, u.y, 1.0));
  return r_.transpose() * (cam - t_);
}

double CameraModel::depth_of(const Point3& world) const noexcept {
  return r_.row(2).dot(world) + t_.z();
}

Projection CameraModel::project(const Point3& world) const noexcept {
  const Eigen::Vector3d cam = r_ * world + t_;
  const Eigen::Vector3d img = intrinsics_ * cam;
  Projection p;
  p.depth = cam.z();
  if (cam.z() != 0.0) {
    p.pixel = {img.x() / cam.z(), img.y() / cam.z()};
  } else {
    p.pixel = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  }
  return p;
}

Eigen::Vector3d CameraModel::ray_direction(const PixelCoord& u) const noexcept {
  return r_.transpose() * (k_inv_ * Eigen::Vector3d(u.x, u.y, 1.0));
}

Point3 lift(const CameraModel& camera, const PixelCoord& u, double depth) {
  return camera.lift(u, depth);
}

Projection project(const CameraModel& camera, const Point3& world) noexcept {
  return camera.project(world);
}

}  // namespace stview
