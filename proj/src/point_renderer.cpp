#include <algorithm>
#include <cmath>

#include "stview/dynamic_renderer.hpp"

namespace stview {

void PointRenderConfig::validate() const {
  if (!(radius > 0.0)) throw Error(ErrorKind::kInvalidArgument, "point radius must be positive");
}

double PointRenderConfig::radius_px(const CameraModel& camera) const {
  return radius * 0.5 * std::min(camera.width(), camera.height());
}

namespace {

struct Fragment {
  std::uint32_t pixel;
  std::uint32_t point;
  double depth;
  double alpha;
};

}  // namespace

DynamicRender render_points(const TargetCloud& cloud, const CameraModel& target,
                            const PointRenderConfig& cfg) {
  cfg.validate();
  const int w = target.width();
  const int h = target.height();
  DynamicRender out{ImageF(w, h, 3), MaskU8(w, h, 1), ImageF(w, h, 1)};
  const double r = cfg.radius_px(target);
  const double r2 = r * r;

  std::vector<Fragment> frags;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i].position;
    if (!p.allFinite()) continue;
    const Projection proj = target.project(p);
    if (!proj.in_front() || !proj.pixel.finite()) continue;
    const double px = proj.pixel.x;
    const double py = proj.pixel.y;
    const int x_lo = std::max(0, static_cast<int>(std::ceil(px - r)));
    const int x_hi = std::min(w - 1, static_cast<int>(std::floor(px + r)));
    const int y_lo = std::max(0, static_cast<int>(std::ceil(py - r)));
    const int y_hi = std::min(h - 1, static_cast<int>(std::floor(py + r)));
    for (int y = y_lo; y <= y_hi; ++y) {
      for (int x = x_lo; x <= x_hi; ++x) {
        const double rho2 = (x - px) * (x - px) + (y - py) * (y - py);
        if (rho2 >= r2) continue;
        frags.push_back({static_cast<std::uint32_t>(y * w + x), static_cast<std::uint32_t>(i),
                         proj.depth, 1.0 - rho2 / r2});
      }
    }
  }
  std::sort(frags.begin(), frags.end(), [](const Fragment& a, const Fragment& b) {
    if (a.pixel != b.pixel) return a.pixel < b.pixel;
    if (a.depth != b.depth) return a.depth < b.depth;
    // Equal depth: the disk centered closer to the pixel goes first.
    if (a.alpha != b.alpha) return a.alpha > b.alpha;
    return a.point < b.point;
  });

  std::size_t i = 0;
  while (i < frags.size()) {
    const std::uint32_t pix = frags[i].pixel;
    double transmittance = 1.0;
    Rgb color = Rgb::Zero();
    for (; i < frags.size() && frags[i].pixel == pix; ++i) {
      if (1.0 - transmittance >= cfg.opacity_stop) continue;
      const double a = frags[i].alpha;
      color += transmittance * a * cloud.points[frags[i].point].color;
      transmittance *= 1.0 - a;
    }
    const double coverage = 1.0 - transmittance;
    const int x = static_cast<int>(pix % w);
    const int y = static_cast<int>(pix / w);
    out.weight.at(x, y) = static_cast<float>(coverage);
    if (coverage > cfg.coverage_threshold) {
      out.mask.at(x, y) = 1;
      for (int c = 0; c < 3; ++c) out.rgb.at(x, y, c) = static_cast<float>(color[c] / coverage);
    }
  }
  return out;
}

}  // namespace stview
