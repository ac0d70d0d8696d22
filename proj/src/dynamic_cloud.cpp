#include <algorithm>
#include <cmath>
#include <string>

#include "stview/dynamic_renderer.hpp"

namespace stview {

TemporalNeighbors select_temporal_neighbors(std::span<const double> times, double t_target) {
  if (times.empty()) throw Error(ErrorKind::kInsufficientFrames, "no frame times");
  if (!std::isfinite(t_target)) {
    throw Error(ErrorKind::kInvalidArgument, "target time is not finite");
  }
  if (t_target < times.front() || t_target > times.back()) {
    throw Error(ErrorKind::kOutOfRange, "target time " + std::to_string(t_target) +
                                            " outside [" + std::to_string(times.front()) + ", " +
                                            std::to_string(times.back()) + "]");
  }
  const auto upper = std::upper_bound(times.begin(), times.end(), t_target);
  const auto lower = std::lower_bound(times.begin(), times.end(), t_target);
  return {static_cast<int>(upper - times.begin()) - 1, static_cast<int>(lower - times.begin())};
}

bool check_cycle(const FlowField& forward, const FlowField& backward, PixelCoord u,
                 const CycleTolerance& tol) {
  const PixelCoord f = forward.displacement_at(u);
  const PixelCoord b = backward.displacement_at(u + f);
  const double err = std::hypot(f.x + b.x, f.y + b.y);
  return err <= std::max(tol.abs_px, tol.rel * std::hypot(f.x, f.y));
}

std::vector<Point3> TargetCloud::positions() const {
  std::vector<Point3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.position);
  return out;
}

PairedPointCloud build_paired_cloud(const FrameBundle& frame_minus, int index_minus,
                                    const FrameBundle& frame_plus, int index_plus,
                                    const FlowField* forward, const FlowField* backward,
                                    const CycleTolerance& tol) {
  PairedPointCloud cloud;
  cloud.frame_minus = index_minus;
  cloud.frame_plus = index_plus;
  const bool identical = index_minus == index_plus;
  if (!identical && (forward == nullptr || backward == nullptr)) {
    throw Error(ErrorKind::kMissingFlow, "build_paired_cloud: missing flow pair " +
                                             std::to_string(index_minus) + "<->" +
                                             std::to_string(index_plus));
  }
  if (!identical && (!forward->flow.same_shape(frame_minus.image) ||
                     !backward->flow.same_shape(frame_plus.image))) {
    throw Error(ErrorKind::kDimensionMismatch, "build_paired_cloud: flow size differs from frame");
  }

  const int w = frame_minus.width();
  const int h = frame_minus.height();
  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      if (!frame_minus.dynamic_mask.at(col, row)) continue;
      const PixelCoord u1{static_cast<double>(col), static_cast<double>(row)};
      const double d1 = frame_minus.depth.at(col, row);
      if (!(std::isfinite(d1) && d1 > 0.0)) continue;

      PointPair pair;
      pair.u1 = u1;
      pair.grid = {index_minus, row, col};
      pair.x1 = frame_minus.camera.lift(u1, d1);
      pair.c1 = sample_rgb(frame_minus.image, u1);
      if (identical) {
        pair.u2 = u1;
        pair.x2 = pair.x1;
        pair.c2 = pair.c1;
        cloud.pairs.push_back(pair);
        continue;
      }

      const PixelCoord u2 = u1 + forward->displacement_at(u1);
      if (!u2.finite() || !frame_plus.camera.contains(u2)) continue;
      if (!(sample_bilinear(frame_plus.dynamic_mask, u2) > 0.0)) continue;
      if (!check_cycle(*forward, *backward, u1, tol)) continue;
      const double d2 = sample_bilinear(frame_plus.depth, u2);
      if (!(std::isfinite(d2) && d2 > 0.0)) continue;
      pair.u2 = u2;
      pair.x2 = frame_plus.camera.lift(u2, d2);
      pair.c2 = sample_rgb(frame_plus.image, u2);
      cloud.pairs.push_back(pair);
    }
  }
  return cloud;
}

TargetCloud interpolate_cloud(const PairedPointCloud& cloud, double t_minus, double t_plus,
                              double t_target) {
  if (!(t_minus <= t_target && t_target <= t_plus)) {
    throw Error(ErrorKind::kOutOfRange, "interpolate_cloud: target time " +
                                            std::to_string(t_target) + " outside [" +
                                            std::to_string(t_minus) + ", " +
                                            std::to_string(t_plus) + "]");
  }
  TargetCloud out;
  out.points.reserve(cloud.size());
  const bool degenerate = t_minus == t_plus;
  const double span = t_plus - t_minus;
  const double w2 = degenerate ? 0.0 : (t_target - t_minus) / span;
  const double w1 = degenerate ? 1.0 : (t_plus - t_target) / span;
  for (const auto& p : cloud.pairs) {
    CloudPoint q;
    if (degenerate) {
      q.position = p.x1;
      q.color = p.c1;
    } else {
      q.position = w2 * p.x2 + w1 * p.x1;
      q.color = w2 * p.c2 + w1 * p.c1;
    }
    q.u1 = p.u1;
    q.u2 = p.u2;
    q.frame1 = cloud.frame_minus;
    q.frame2 = cloud.frame_plus;
    q.grid = p.grid;
    out.points.push_back(q);
  }
  return out;
}

}  // namespace stview
