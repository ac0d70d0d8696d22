#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "stview/dynamic_renderer.hpp"
#include "stview/synthetic.hpp"

using namespace stview;

namespace {

CameraModel pinhole(int w, int h, double f) {
  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  K(0, 0) = K(1, 1) = f;
  K(0, 2) = (w - 1) / 2.0;
  K(1, 2) = (h - 1) / 2.0;
  return CameraModel(K, Eigen::Matrix4d::Identity(), w, h);
}

FlowField const_flow(int s, int t, int w, int h, float dx, float dy) {
  FlowField f{s, t, ImageF(w, h, 2)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      f.flow.at(x, y, 0) = dx;
      f.flow.at(x, y, 1) = dy;
    }
  return f;
}

FrameBundle flat_frame(int w, int h, double depth, double time) {
  return {ImageF(w, h, 3, 0.5f), ImageF(w, h, 1, static_cast<float>(depth)), MaskU8(w, h, 1),
          pinhole(w, h, 50.0), time};
}

CloudPoint point_at(const Point3& p, const Rgb& c) {
  CloudPoint q;
  q.position = p;
  q.color = c;
  return q;
}

}  // namespace

TEST_CASE("temporal neighbors") {
  const std::vector<double> t{0, 1, 2};
  auto nb = select_temporal_neighbors(t, 1.0);
  CHECK(nb.minus == 1);
  CHECK(nb.plus == 1);
  nb = select_temporal_neighbors(t, 1.25);
  CHECK(nb.minus == 1);
  CHECK(nb.plus == 2);
  nb = select_temporal_neighbors(t, 0.0);
  CHECK(nb.minus == 0);
  CHECK(nb.plus == 0);
  CHECK_THROWS_AS(select_temporal_neighbors(t, 2.5), Error);
  CHECK_THROWS_AS(select_temporal_neighbors(t, -0.1), Error);
}

TEST_CASE("cycle check") {
  const FlowField f = const_flow(0, 1, 8, 8, 2.0f, 1.0f);
  const FlowField b = const_flow(1, 0, 8, 8, -2.0f, -1.0f);
  CHECK(check_cycle(f, b, {3, 3}));
  const FlowField z = const_flow(0, 1, 8, 8, 0, 0);
  CHECK(check_cycle(z, z, {3, 3}));
  FlowField bad = b;
  bad.flow.at(5, 4, 0) += 10.0f;  // u + f(u) = (5, 4)
  CHECK_FALSE(check_cycle(f, bad, {3, 3}));
  // |f| = 40 px allows up to 2 px of disagreement.
  const FlowField big = const_flow(0, 1, 64, 8, 40.0f, 0.0f);
  const FlowField back_ok = const_flow(1, 0, 64, 8, -38.5f, 0.0f);
  const FlowField back_bad = const_flow(1, 0, 64, 8, -37.5f, 0.0f);
  CHECK(check_cycle(big, back_ok, {2, 2}));
  CHECK_FALSE(check_cycle(big, back_bad, {2, 2}));
}

TEST_CASE("paired cloud: degenerate frame pair") {
  FrameBundle f = flat_frame(6, 6, 3.0, 0.0);
  for (int k = 0; k < 5; ++k) f.dynamic_mask.at(k, 2) = 1;
  const PairedPointCloud pc = build_paired_cloud(f, 0, f, 0, nullptr, nullptr);
  REQUIRE(pc.size() == 5);
  for (const auto& p : pc.pairs) CHECK(p.x1 == p.x2);
  const TargetCloud tc = interpolate_cloud(pc, 0.0, 0.0, 0.0);
  for (std::size_t i = 0; i < tc.size(); ++i) {
    CHECK(tc.points[i].position == pc.pairs[i].x1);
    CHECK(tc.points[i].color == pc.pairs[i].c1);
  }
}

TEST_CASE("paired cloud: correspondence on static region is dropped") {
  FrameBundle a = flat_frame(8, 8, 2.0, 0.0), b = flat_frame(8, 8, 2.0, 1.0);
  a.dynamic_mask.at(2, 2) = 1;
  a.dynamic_mask.at(4, 4) = 1;
  b.dynamic_mask.at(3, 2) = 1;  // only (2,2) lands on a dynamic pixel
  const FlowField f = const_flow(0, 1, 8, 8, 1, 0), bw = const_flow(1, 0, 8, 8, -1, 0);
  const PairedPointCloud pc = build_paired_cloud(a, 0, b, 1, &f, &bw);
  REQUIRE(pc.size() == 1);
  CHECK(pc.pairs[0].u1 == PixelCoord{2, 2});
  CHECK(pc.pairs[0].u2 == PixelCoord{3, 2});
  CHECK_THROWS_AS(build_paired_cloud(a, 0, b, 1, &f, nullptr), Error);
}

TEST_CASE("paired cloud on the analytic scene") {
  const SyntheticWorld world(SyntheticConfig{});
  const Scene scene = world.make_scene();
  const int i = 2, j = 3;
  const PairedPointCloud pc =
      build_paired_cloud(scene.frames[i], i, scene.frames[j], j, &scene.flow(i, j), &scene.flow(j, i));
  // Oracle: dynamic pixels of frame i whose exact correspondence is inside frame j, on the square,
  // and passes the cycle test.
  std::size_t expected = 0;
  const auto& fi = scene.frames[i];
  for (int y = 0; y < fi.height(); ++y)
    for (int x = 0; x < fi.width(); ++x) {
      if (!fi.dynamic_mask.at(x, y)) continue;
      const PixelCoord u2{x + 4.0, y + 2.0};
      if (!scene.frames[j].camera.contains(u2)) continue;
      if (!scene.frames[j].dynamic_mask.at(static_cast<int>(u2.x), static_cast<int>(u2.y))) continue;
      ++expected;
    }
  CHECK(pc.size() == expected);
  const Eigen::Vector3d disp = world.square_center(scene.frames[j].time) - world.square_center(fi.time);
  double worst = 0;
  for (const auto& p : pc.pairs) worst = std::max(worst, (p.x2 - p.x1 - disp).norm());
  CHECK(worst < 1e-5);
}

TEST_CASE("interpolate_cloud: endpoints and midpoint") {
  PairedPointCloud pc;
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int k = 0; k < 50; ++k) {
    PointPair p;
    p.x1 = Point3(u(rng), u(rng), 4 + u(rng));
    p.x2 = Point3(u(rng), u(rng), 4 + u(rng));
    p.c1 = Rgb(0.1, 0.2, 0.3);
    p.c2 = Rgb(0.5, 0.6, 0.7);
    pc.pairs.push_back(p);
  }
  const TargetCloud a = interpolate_cloud(pc, 2.0, 3.0, 2.0);
  const TargetCloud b = interpolate_cloud(pc, 2.0, 3.0, 3.0);
  const TargetCloud m = interpolate_cloud(pc, 2.0, 3.0, 2.5);
  for (std::size_t k = 0; k < pc.size(); ++k) {
    CHECK(a.points[k].position == pc.pairs[k].x1);
    CHECK(b.points[k].position == pc.pairs[k].x2);
    CHECK((m.points[k].position - 0.5 * (pc.pairs[k].x1 + pc.pairs[k].x2)).norm() < 1e-9);
    CHECK((m.points[k].color - Rgb(0.3, 0.4, 0.5)).norm() < 1e-12);
  }
  CHECK_THROWS_AS(interpolate_cloud(pc, 2.0, 3.0, 3.5), Error);
}

TEST_CASE("outlier removal: brute-force equivalence") {
  std::mt19937 rng(21);
  for (int trial = 0; trial < 8; ++trial) {
    std::uniform_int_distribution<int> size(2, 600);
    const int n = size(rng);
    std::normal_distribution<double> g(0, 1);
    std::vector<Point3> pts;
    for (int k = 0; k < n; ++k) pts.emplace_back(g(rng), 2 * g(rng), 0.5 * g(rng));
    // duplicates exercise tie-breaking
    if (n > 10) pts[3] = pts[7];
    const auto got = outlier_inliers(pts, OutlierConfig{});
    CHECK(got == oracle::outlier_inliers(pts, 50, 0.1));
  }
}

TEST_CASE("outlier removal: far point and degenerate clouds") {
  std::mt19937 rng(2);
  std::normal_distribution<double> g(0, 0.01);
  std::vector<Point3> pts;
  for (int k = 0; k < 500; ++k) pts.emplace_back(g(rng), g(rng), g(rng));
  pts.emplace_back(1.0, 0.0, 0.0);  // 100 sigma away
  const auto keep = outlier_inliers(pts, OutlierConfig{});
  CHECK(keep == oracle::outlier_inliers(pts, 50, 0.1));
  CHECK(std::find(keep.begin(), keep.end(), 500u) == keep.end());

  const std::vector<Point3> same(51, Point3(1, 2, 3));
  CHECK(outlier_inliers(same, OutlierConfig{}).size() == 51);
  const std::vector<Point3> few{Point3(0, 0, 0), Point3(1, 0, 0), Point3(0, 5, 0)};
  CHECK(outlier_inliers(few, OutlierConfig{}) == oracle::outlier_inliers(few, 50, 0.1));
  CHECK(outlier_inliers(std::vector<Point3>{}, OutlierConfig{}).empty());
  OutlierConfig bad;
  bad.n_neighbors = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("splat renderer") {
  const CameraModel cam = pinhole(9, 9, 10.0);
  TargetCloud one;
  one.points.push_back(point_at(cam.lift({3, 5}, 2.0), Rgb(0.2, 0.4, 0.6)));
  DynamicRender r = render_splat(one, cam);
  CHECK(r.mask.at(3, 5) == 1);
  CHECK(std::abs(r.rgb.at(3, 5, 0) - 0.2f) < 1e-6);
  CHECK(std::abs(r.rgb.at(3, 5, 2) - 0.6f) < 1e-6);
  CHECK(std::accumulate(r.mask.data().begin(), r.mask.data().end(), 0) == 1);

  TargetCloud two;
  two.points.push_back(point_at(cam.lift({4, 4}, 1.0), Rgb(1, 0, 0)));
  two.points.push_back(point_at(cam.lift({4, 4}, 2.0), Rgb(0, 0, 1)));
  r = render_splat(two, cam);
  CHECK(std::abs(r.rgb.at(4, 4, 0) - 1.0f) < 1e-6);
  CHECK(std::abs(r.rgb.at(4, 4, 2)) < 1e-6);
  CHECK(SplatConfig{}.alpha == 100.0);

  const DynamicRender empty = render_splat(TargetCloud{}, cam);
  CHECK(empty.mask == MaskU8(9, 9, 1));
}

TEST_CASE("splat renderer is order invariant") {
  const CameraModel cam = pinhole(32, 32, 30.0);
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u(0, 31), d(1, 3), c(0, 1);
  TargetCloud cloud;
  for (int k = 0; k < 400; ++k)
    cloud.points.push_back(point_at(cam.lift({u(rng), u(rng)}, d(rng)), Rgb(c(rng), c(rng), c(rng))));
  cloud.points.push_back(point_at(Point3(0, 0, -1), Rgb(1, 1, 1)));  // behind camera
  const DynamicRender a = render_splat(cloud, cam);
  std::shuffle(cloud.points.begin(), cloud.points.end(), rng);
  const DynamicRender b = render_splat(cloud, cam);
  CHECK(a.mask == b.mask);
  double worst = 0;
  for (std::size_t k = 0; k < a.rgb.data().size(); ++k)
    worst = std::max(worst, static_cast<double>(std::abs(a.rgb.data()[k] - b.rgb.data()[k])));
  CHECK(worst <= 1e-5);
}

TEST_CASE("point renderer") {
  const CameraModel cam = pinhole(64, 64, 60.0);
  PointRenderConfig cfg;
  cfg.radius = 0.2;  // 6.4 px
  CHECK(cfg.radius_px(cam) == doctest::Approx(6.4));

  TargetCloud one;
  one.points.push_back(point_at(cam.lift({20, 30}, 2.0), Rgb(0.3, 0.6, 0.9)));
  DynamicRender r = render_points(one, cam, cfg);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      const double rho2 = (x - 20.0) * (x - 20.0) + (y - 30.0) * (y - 30.0);
      const bool inside = 1.0 - rho2 / (6.4 * 6.4) > cfg.coverage_threshold;
      CHECK(r.mask.at(x, y) == (inside ? 1 : 0));
      if (inside) CHECK(std::abs(r.rgb.at(x, y, 1) - 0.6f) < 1e-6);
    }

  // Two-layer over: red at depth 1 in front of blue at depth 2.
  TargetCloud two;
  two.points.push_back(point_at(cam.lift({32, 32}, 2.0), Rgb(0, 0, 1)));
  two.points.push_back(point_at(cam.lift({30, 32}, 1.0), Rgb(1, 0, 0)));
  r = render_points(two, cam, cfg);
  const double R2 = 6.4 * 6.4;
  for (int y = 20; y < 44; ++y)
    for (int x = 20; x < 44; ++x) {
      const double ar = 1 - ((x - 30.0) * (x - 30.0) + (y - 32.0) * (y - 32.0)) / R2;
      const double ab = 1 - ((x - 32.0) * (x - 32.0) + (y - 32.0) * (y - 32.0)) / R2;
      if (ar <= 0 || ab <= 0) continue;
      const double cov = ar + (1 - ar) * ab;
      CHECK(std::abs(r.rgb.at(x, y, 0) - ar / cov) < 1e-5);
      if (ar >= 0.95) CHECK(r.rgb.at(x, y, 0) >= 0.95f);
    }
  // Where the red disk is opaque (its center) the result is red.
  CHECK(r.rgb.at(30, 32, 0) == 1.0f);

  const DynamicRender empty = render_points(TargetCloud{}, cam, cfg);
  CHECK(empty.mask == MaskU8(64, 64, 1));
  CHECK(empty.rgb == ImageF(64, 64, 3));
  CHECK(PointRenderConfig{}.radius == 0.01);
}

TEST_CASE("mesh renderer") {
  const CameraModel cam = pinhole(32, 32, 30.0);
  auto grid_point = [&](int row, int col, double px, double py, double depth) {
    CloudPoint q = point_at(cam.lift({px, py}, depth), Rgb(0.5, 0.5, 0.5));
    q.grid = GridIndex{0, row, col};
    return q;
  };
  TargetCloud quad;
  quad.points.push_back(grid_point(0, 0, 10, 12, 2.0));
  quad.points.push_back(grid_point(0, 1, 20, 12, 2.0));
  quad.points.push_back(grid_point(1, 0, 10, 18, 2.0));
  quad.points.push_back(grid_point(1, 1, 20, 18, 2.0));
  DynamicRender r = render_mesh(quad, cam);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) {
      const bool inside = x >= 10 && x <= 20 && y >= 12 && y <= 18;
      CHECK(r.mask.at(x, y) == (inside ? 1 : 0));
    }

  TargetCloud step = quad;
  step.points[1] = grid_point(0, 1, 20, 12, 4.0);
  step.points[3] = grid_point(1, 1, 20, 18, 4.0);
  r = render_mesh(step, cam);
  CHECK(r.mask == MaskU8(32, 32, 1));

  TargetCloud loose = quad;
  for (auto& p : loose.points) p.grid.reset();
  CHECK(render_mesh(loose, cam).mask == MaskU8(32, 32, 1));
  CHECK(render_mesh(TargetCloud{}, cam).mask == MaskU8(32, 32, 1));
}

TEST_CASE("mesh coverage contains eroded point coverage on the analytic square") {
  const SyntheticWorld world(SyntheticConfig{});
  const Scene scene = world.make_scene();
  const PairedPointCloud pc = build_paired_cloud(scene.frames[3], 3, scene.frames[4], 4, &scene.flow(3, 4),
                                                 &scene.flow(4, 3));
  const TargetCloud cloud = interpolate_cloud(pc, scene.frames[3].time, scene.frames[4].time, 3.5);
  const CameraModel target = world.held_out_camera(3.5);
  const DynamicRender mesh = render_mesh(cloud, target);
  const DynamicRender pts = render_points(cloud, target);
  // Disks reach r = 1.28 px past the outermost lattice vertex, so erode by ceil(r) pixels.
  const int reach = static_cast<int>(std::ceil(PointRenderConfig{}.radius_px(target)));
  std::size_t violations = 0, covered = 0;
  for (int y = reach; y + reach < target.height(); ++y)
    for (int x = reach; x + reach < target.width(); ++x) {
      bool eroded = true;
      for (int dy = -reach; dy <= reach; ++dy)
        for (int dx = -reach; dx <= reach; ++dx) eroded = eroded && pts.mask.at(x + dx, y + dy);
      if (!eroded) continue;
      ++covered;
      if (!mesh.mask.at(x, y)) ++violations;
    }
  CHECK(covered > 1000);
  CHECK(violations == 0);
}
