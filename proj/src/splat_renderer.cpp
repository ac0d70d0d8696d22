#include <algorithm>
#include <cmath>
#include <limits>

#include "stview/dynamic_renderer.hpp"

namespace stview {

void SplatConfig::validate() const {
  if (!(alpha > 0.0)) throw Error(ErrorKind::kInvalidArgument, "splat alpha must be positive");
}

namespace {

struct Footprint {
  int x0, y0;
  double fx, fy;
  double depth;
};

double median_of(std::vector<double> values) {
  const std::size_t n = values.size();
  std::nth_element(values.begin(), values.begin() + n / 2, values.end());
  const double hi = values[n / 2];
  if (n % 2 == 1) return hi;
  return 0.5 * (*std::max_element(values.begin(), values.begin() + n / 2) + hi);
}

}  // namespace

DynamicRender render_splat(const TargetCloud& cloud, const CameraModel& target,
                           const SplatConfig& cfg) {
  cfg.validate();
  const int w = target.width();
  const int h = target.height();
  DynamicRender out{ImageF(w, h, 3), MaskU8(w, h, 1), ImageF(w, h, 1)};

  std::vector<Footprint> feet(cloud.size());
  std::vector<bool> active(cloud.size(), false);
  std::vector<double> depths;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i].position;
    if (!p.allFinite()) continue;
    const Projection proj = target.project(p);
    if (!proj.in_front() || !proj.pixel.finite()) continue;
    const double fx0 = std::floor(proj.pixel.x);
    const double fy0 = std::floor(proj.pixel.y);
    if (fx0 < -1.0 || fy0 < -1.0 || fx0 > w - 1.0 || fy0 > h - 1.0) continue;
    feet[i] = {static_cast<int>(fx0), static_cast<int>(fy0), proj.pixel.x - fx0,
               proj.pixel.y - fy0, proj.depth};
    active[i] = true;
    depths.push_back(proj.depth);
  }
  if (depths.empty()) return out;
  const double depth_scale = median_of(depths);

  auto for_each_tap = [&](const Footprint& f, auto&& fn) {
    const double kx[2] = {1.0 - f.fx, f.fx};
    const double ky[2] = {1.0 - f.fy, f.fy};
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx) {
        const int x = f.x0 + dx;
        const int y = f.y0 + dy;
        const double k = kx[dx] * ky[dy];
        if (k <= 0.0 || x < 0 || y < 0 || x >= w || y >= h) continue;
        fn(static_cast<std::size_t>(y) * w + x, k);
      }
    }
  };

  // Softmax is shifted per pixel by its smallest normalized depth so exp()
  // never underflows for the dominant contribution.
  const std::size_t npix = static_cast<std::size_t>(w) * h;
  std::vector<double> nearest(npix, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < feet.size(); ++i) {
    if (!active[i]) continue;
    const double z = feet[i].depth / depth_scale;
    for_each_tap(feet[i], [&](std::size_t pix, double) { nearest[pix] = std::min(nearest[pix], z); });
  }

  std::vector<double> accum(npix * 3, 0.0), weight(npix, 0.0), kernel(npix, 0.0);
  for (std::size_t i = 0; i < feet.size(); ++i) {
    if (!active[i]) continue;
    const double z = feet[i].depth / depth_scale;
    const Rgb& c = cloud.points[i].color;
    for_each_tap(feet[i], [&](std::size_t pix, double k) {
      const double wgt = k * std::exp(-cfg.alpha * (z - nearest[pix]));
      accum[pix * 3 + 0] += wgt * c.x();
      accum[pix * 3 + 1] += wgt * c.y();
      accum[pix * 3 + 2] += wgt * c.z();
      weight[pix] += wgt;
      kernel[pix] += k;
    });
  }

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t pix = static_cast<std::size_t>(y) * w + x;
      out.weight.at(x, y) = static_cast<float>(kernel[pix]);
      if (kernel[pix] > cfg.coverage_threshold && weight[pix] > 0.0) {
        out.mask.at(x, y) = 1;
        for (int c = 0; c < 3; ++c)
          out.rgb.at(x, y, c) = static_cast<float>(accum[pix * 3 + c] / weight[pix]);
      }
    }
  }
  return out;
}

}  // namespace stview
