#include <cmath>

#include "stview/static_renderer.hpp"

namespace stview {

TargetCloud static_point_cloud(const Scene& scene, std::span<const int> sources, int stride) {
  if (stride < 1) throw Error(ErrorKind::kInvalidArgument, "static point cloud stride must be >= 1");
  TargetCloud cloud;
  for (int s : sources) {
    const FrameBundle& f = scene.frames.at(s);
    for (int row = 0; row < f.height(); row += stride) {
      for (int col = 0; col < f.width(); col += stride) {
        if (f.dynamic_mask.at(col, row)) continue;
        const double d = f.depth.at(col, row);
        if (!(std::isfinite(d) && d > 0.0)) continue;
        const PixelCoord u{static_cast<double>(col), static_cast<double>(row)};
        CloudPoint p;
        p.position = f.camera.lift(u, d);
        p.color = {f.image.at(col, row, 0), f.image.at(col, row, 1), f.image.at(col, row, 2)};
        p.u1 = p.u2 = u;
        p.frame1 = p.frame2 = s;
        p.grid = GridIndex{s, row, col};
        cloud.points.push_back(p);
      }
    }
  }
  return cloud;
}

StaticRender render_static_pointcloud(const Scene& scene, const CameraModel& target,
                                      std::span<const int> sources, int stride,
                                      const PointRenderConfig& points) {
  const TargetCloud cloud = static_point_cloud(scene, sources, stride);
  DynamicRender r = render_points(cloud, target, points);
  return {std::move(r.rgb), std::move(r.mask), {}};
}

}  // namespace stview
