#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "stview/dynamic_renderer.hpp"

namespace stview {

namespace {

std::uint64_t lattice_key(int row, int col) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(row)) << 32) |
         static_cast<std::uint32_t>(col);
}

constexpr double kEdgeSlack = 1e-9;

struct Vertex {
  double x, y, depth;
  Rgb color;
};

double edge(const Vertex& a, const Vertex& b, double px, double py) {
  return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
}

void rasterize(const std::array<Vertex, 3>& v, std::vector<double>& zbuf, DynamicRender& out) {
  const int w = out.rgb.width();
  const int h = out.rgb.height();
  const double area = edge(v[0], v[1], v[2].x, v[2].y);
  if (area == 0.0 || !std::isfinite(area)) return;
  constexpr double pad = 1e-6;
  const int x_lo = std::max(0, static_cast<int>(std::ceil(std::min({v[0].x, v[1].x, v[2].x}) - pad)));
  const int x_hi = std::min(w - 1, static_cast<int>(std::floor(std::max({v[0].x, v[1].x, v[2].x}) + pad)));
  const int y_lo = std::max(0, static_cast<int>(std::ceil(std::min({v[0].y, v[1].y, v[2].y}) - pad)));
  const int y_hi = std::min(h - 1, static_cast<int>(std::floor(std::max({v[0].y, v[1].y, v[2].y}) + pad)));
  for (int y = y_lo; y <= y_hi; ++y) {
    for (int x = x_lo; x <= x_hi; ++x) {
      // Barycentrics normalized so they are non-negative inside regardless of winding;
      // the small slack keeps pixels on an edge when vertices carry projection round-off.
      const double b0 = edge(v[1], v[2], x, y) / area;
      const double b1 = edge(v[2], v[0], x, y) / area;
      const double b2 = edge(v[0], v[1], x, y) / area;
      if (b0 < -kEdgeSlack || b1 < -kEdgeSlack || b2 < -kEdgeSlack) continue;
      const double z = b0 * v[0].depth + b1 * v[1].depth + b2 * v[2].depth;
      const std::size_t pix = static_cast<std::size_t>(y) * w + x;
      if (!(z < zbuf[pix])) continue;
      zbuf[pix] = z;
      const Rgb c = b0 * v[0].color + b1 * v[1].color + b2 * v[2].color;
      for (int ch = 0; ch < 3; ++ch) out.rgb.at(x, y, ch) = static_cast<float>(c[ch]);
      out.mask.at(x, y) = 1;
      out.weight.at(x, y) = 1.0f;
    }
  }
}

}  // namespace

DynamicRender render_mesh(const TargetCloud& cloud, const CameraModel& target,
                          const MeshRenderConfig& cfg) {
  const int w = target.width();
  const int h = target.height();
  DynamicRender out{ImageF(w, h, 3), MaskU8(w, h, 1), ImageF(w, h, 1)};

  std::unordered_map<std::uint64_t, std::size_t> lattice;
  int lattice_frame = -1;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& g = cloud.points[i].grid;
    if (!g) continue;
    if (lattice_frame < 0) lattice_frame = g->frame;
    if (g->frame != lattice_frame) continue;
    lattice.emplace(lattice_key(g->row, g->col), i);
  }
  if (lattice.empty()) return out;

  // Quads are visited in ascending lattice order so z ties resolve the same way every run.
  std::vector<std::pair<std::uint64_t, std::size_t>> ordered(lattice.begin(), lattice.end());
  std::sort(ordered.begin(), ordered.end());

  auto vertex = [&](std::size_t idx, Vertex& v) {
    const CloudPoint& p = cloud.points[idx];
    if (!p.position.allFinite()) return false;
    const Projection proj = target.project(p.position);
    if (!proj.in_front() || !proj.pixel.finite()) return false;
    v = {proj.pixel.x, proj.pixel.y, proj.depth, p.color};
    return true;
  };
  auto find = [&](int row, int col) -> std::optional<std::size_t> {
    const auto it = lattice.find(lattice_key(row, col));
    if (it == lattice.end()) return std::nullopt;
    return it->second;
  };

  std::vector<double> zbuf(static_cast<std::size_t>(w) * h, std::numeric_limits<double>::infinity());
  for (const auto& [key, idx] : ordered) {
    const GridIndex& g = *cloud.points[idx].grid;
    const auto right = find(g.row, g.col + 1);
    const auto down = find(g.row + 1, g.col);
    const auto diag = find(g.row + 1, g.col + 1);
    if (!right || !down || !diag) continue;
    std::array<Vertex, 4> quad;
    if (!vertex(idx, quad[0]) || !vertex(*right, quad[1]) || !vertex(*down, quad[2]) ||
        !vertex(*diag, quad[3])) {
      continue;
    }
    for (const auto& tri : {std::array<Vertex, 3>{quad[0], quad[1], quad[2]},
                            std::array<Vertex, 3>{quad[1], quad[3], quad[2]}}) {
      const double zmin = std::min({tri[0].depth, tri[1].depth, tri[2].depth});
      const double zmax = std::max({tri[0].depth, tri[1].depth, tri[2].depth});
      if (zmax > cfg.max_depth_ratio * zmin) continue;
      rasterize(tri, zbuf, out);
    }
  }
  return out;
}

}  // namespace stview
