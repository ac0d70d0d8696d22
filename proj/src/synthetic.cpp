#include "stview/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace stview {

namespace fs = std::filesystem;

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double lattice_value(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ static_cast<std::uint64_t>(ix));
  h = splitmix(h ^ static_cast<std::uint64_t>(iy) * 0x632BE59BD9B4E019ull);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

float quantize8(double v) {
  return static_cast<float>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)) / 255.0f;
}

}  // namespace

void SyntheticConfig::validate() const {
  if (width < 2 || height < 2 || frames < 2) {
    throw Error(ErrorKind::kInvalidArgument, "synthetic: need width, height >= 2 and frames >= 2");
  }
  if (!(z_foreground > 0.0 && z_foreground < z_background)) {
    throw Error(ErrorKind::kInvalidArgument, "synthetic: need 0 < z_foreground < z_background");
  }
  if (!(focal > 0.0 && time_step > 0.0 && square_size > 0.0 && background_cell > 0.0 &&
        foreground_cell > 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "synthetic: sizes and steps must be positive");
  }
}

SyntheticWorld::SyntheticWorld(const SyntheticConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

Eigen::Matrix3d SyntheticWorld::intrinsics() const {
  Eigen::Matrix3d k = Eigen::Matrix3d::Identity();
  k(0, 0) = k(1, 1) = cfg_.focal;
  k(0, 2) = (cfg_.width - 1) / 2.0;
  k(1, 2) = (cfg_.height - 1) / 2.0;
  return k;
}

CameraModel SyntheticWorld::path_camera(double t) const {
  Eigen::Matrix4d e = Eigen::Matrix4d::Identity();
  e.topRightCorner<3, 1>() = -(cfg_.baseline * t);
  return CameraModel(intrinsics(), e, cfg_.width, cfg_.height);
}

CameraModel SyntheticWorld::held_out_camera(double t) const {
  Eigen::Matrix4d e = Eigen::Matrix4d::Identity();
  e.topRightCorner<3, 1>() = -(cfg_.baseline * t + cfg_.held_out_offset);
  return CameraModel(intrinsics(), e, cfg_.width, cfg_.height);
}

Point3 SyntheticWorld::square_center(double t) const {
  return Point3(cfg_.square_start.x(), cfg_.square_start.y(), cfg_.z_foreground) + cfg_.velocity * t;
}

SyntheticWorld::Hit SyntheticWorld::trace(const CameraModel& camera, PixelCoord u, double t) const {
  const Point3& origin = camera.center();
  const Eigen::Vector3d dir = camera.ray_direction(u);
  const Point3 c = square_center(t);
  const double half = 0.5 * cfg_.square_size;
  Hit hit;
  if (dir.z() != 0.0) {
    const double s = (c.z() - origin.z()) / dir.z();
    if (s > 0.0) {
      const Point3 p = origin + s * dir;
      if (std::abs(p.x() - c.x()) < half && std::abs(p.y() - c.y()) < half) {
        hit.point = p;
        hit.depth = camera.depth_of(p);
        hit.on_square = true;
        return hit;
      }
    }
  }
  const double s = (cfg_.z_background - origin.z()) / dir.z();
  hit.point = origin + s * dir;
  hit.depth = camera.depth_of(hit.point);
  return hit;
}

double SyntheticWorld::noise(double x, double y, std::uint64_t channel_seed, double cell) const {
  const double gx = x / cell;
  const double gy = y / cell;
  const double fx0 = std::floor(gx);
  const double fy0 = std::floor(gy);
  const auto ix = static_cast<std::int64_t>(fx0);
  const auto iy = static_cast<std::int64_t>(fy0);
  const double sx = fade(gx - fx0);
  const double sy = fade(gy - fy0);
  const std::uint64_t seed = splitmix(cfg_.texture_seed * 131 + channel_seed);
  const double v00 = lattice_value(seed, ix, iy);
  const double v10 = lattice_value(seed, ix + 1, iy);
  const double v01 = lattice_value(seed, ix, iy + 1);
  const double v11 = lattice_value(seed, ix + 1, iy + 1);
  return (1 - sy) * ((1 - sx) * v00 + sx * v10) + sy * ((1 - sx) * v01 + sx * v11);
}

Rgb SyntheticWorld::shade(const Hit& hit, double t) const {
  Rgb c;
  if (hit.on_square) {
    const Point3 local = hit.point - square_center(t);
    for (int ch = 0; ch < 3; ++ch)
      c[ch] = 0.15 + 0.7 * noise(local.x(), local.y(), 3 + ch, cfg_.foreground_cell);
  } else {
    for (int ch = 0; ch < 3; ++ch)
      c[ch] = 0.15 + 0.7 * noise(hit.point.x(), hit.point.y(), ch, cfg_.background_cell);
  }
  return c;
}

Point3 SyntheticWorld::advect(const Hit& hit, double t_from, double t_to) const {
  return hit.on_square ? Point3(hit.point + cfg_.velocity * (t_to - t_from)) : hit.point;
}

bool SyntheticWorld::visible(const CameraModel& camera, const Hit& hit, double t_hit,
                             double t_view) const {
  const Point3 moved = advect(hit, t_hit, t_view);
  const Projection proj = camera.project(moved);
  if (!proj.in_front() || !camera.contains(proj.pixel)) return false;
  return trace(camera, proj.pixel, t_view).on_square == hit.on_square;
}

SyntheticView SyntheticWorld::render(const CameraModel& camera, double t) const {
  const int w = camera.width();
  const int h = camera.height();
  SyntheticView view{ImageF(w, h, 3), ImageF(w, h, 1), MaskU8(w, h, 1)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Hit hit = trace(camera, {double(x), double(y)}, t);
      const Rgb c = shade(hit, t);
      for (int ch = 0; ch < 3; ++ch) view.rgb.at(x, y, ch) = static_cast<float>(c[ch]);
      view.depth.at(x, y) = static_cast<float>(hit.depth);
      view.dynamic_mask.at(x, y) = hit.on_square ? 1 : 0;
    }
  }
  return view;
}

ImageF SyntheticWorld::flow(int from, int to) const {
  const double t0 = frame_time(from);
  const double t1 = frame_time(to);
  const CameraModel cam0 = path_camera(t0);
  const CameraModel cam1 = path_camera(t1);
  ImageF out(cfg_.width, cfg_.height, 2);
  for (int y = 0; y < cfg_.height; ++y) {
    for (int x = 0; x < cfg_.width; ++x) {
      const Hit hit = trace(cam0, {double(x), double(y)}, t0);
      // Differencing two projections (rather than subtracting x) makes a static
      // scene under a static camera produce exactly zero flow.
      const Projection p0 = cam0.project(hit.point);
      const Projection p1 = cam1.project(advect(hit, t0, t1));
      out.at(x, y, 0) = static_cast<float>(p1.pixel.x - p0.pixel.x);
      out.at(x, y, 1) = static_cast<float>(p1.pixel.y - p0.pixel.y);
    }
  }
  return out;
}

Scene SyntheticWorld::make_scene() const {
  Scene scene;
  for (int i = 0; i < cfg_.frames; ++i) {
    const double t = frame_time(i);
    const CameraModel cam = path_camera(t);
    SyntheticView v = render(cam, t);
    for (float& c : v.rgb.data()) c = quantize8(c);
    scene.frames.push_back({std::move(v.rgb), std::move(v.depth), std::move(v.dynamic_mask), cam, t});
  }
  for (int i = 0; i + 1 < cfg_.frames; ++i) {
    scene.flows.emplace(std::pair{i, i + 1}, FlowField{i, i + 1, flow(i, i + 1)});
    scene.flows.emplace(std::pair{i + 1, i}, FlowField{i + 1, i, flow(i + 1, i)});
  }

  if (cfg_.write_segments) {
    // Square is one segment; background is tiled into 32×32 blocks.
    for (const auto& f : scene.frames) {
      LabelMap labels(cfg_.width, cfg_.height, 1);
      const int tiles_x = (cfg_.width + 31) / 32;
      for (int y = 0; y < cfg_.height; ++y)
        for (int x = 0; x < cfg_.width; ++x)
          labels.at(x, y) = f.dynamic_mask.at(x, y) ? 0 : 1 + (y / 32) * tiles_x + (x / 32);
      scene.segments.push_back(std::move(labels));
    }
  }

  if (cfg_.track_grid > 0) {
    TrackSet tracks;
    const double half = 0.5 * cfg_.square_size;
    const double step = cfg_.square_size / cfg_.track_grid;
    int id = 0;
    for (int gy = 0; gy < cfg_.track_grid; ++gy) {
      for (int gx = 0; gx < cfg_.track_grid; ++gx, ++id) {
        const Eigen::Vector3d local(-half + (gx + 0.5) * step, -half + (gy + 0.5) * step, 0.0);
        Track track;
        track.id = id;
        for (int i = 0; i < cfg_.frames; ++i) {
          const double t = frame_time(i);
          const Projection p = scene.frames[i].camera.project(square_center(t) + local);
          const double r = lattice_value(cfg_.texture_seed + 99, id, i);
          const bool inside = p.in_front() && scene.frames[i].camera.contains(p.pixel);
          track.samples.push_back({i, p.pixel, inside && r >= cfg_.track_dropout});
        }
        tracks.tracks.push_back(std::move(track));
      }
    }
    scene.tracks = std::move(tracks);
  }
  return scene;
}

std::vector<TargetView> SyntheticWorld::held_out_targets() const {
  std::vector<TargetView> targets;
  for (int k = 0; k + 1 < cfg_.frames; ++k) {
    const double t = (k + 0.5) * cfg_.time_step;
    char name[32];
    std::snprintf(name, sizeof(name), "mid_%02d", k);
    targets.push_back({name, t, held_out_camera(t)});
  }
  return targets;
}

std::vector<TargetView> read_targets_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kMissingFile, "missing file '" + path.string() + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kHeaderMismatch, "cannot parse '" + path.string() + "': " + e.what());
  }
  std::vector<TargetView> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& rec = doc[i];
    try {
      const auto k = rec.at("K").get<std::vector<double>>();
      const auto e = rec.at("E").get<std::vector<double>>();
      if (k.size() != 9 || e.size() != 16) throw Error(ErrorKind::kHeaderMismatch, "bad K/E size");
      Eigen::Matrix3d km;
      Eigen::Matrix4d em;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) km(r, c) = k[r * 3 + c];
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) em(r, c) = e[r * 4 + c];
      std::string name = rec.contains("name") ? rec["name"].get<std::string>()
                                              : "target_" + std::to_string(i);
      out.push_back({std::move(name), rec.at("time").get<double>(),
                     CameraModel(km, em, rec.at("width").get<int>(), rec.at("height").get<int>())});
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorKind::kHeaderMismatch,
                  "target " + std::to_string(i) + " in '" + path.string() + "': " + ex.what());
    }
  }
  return out;
}

void write_targets_json(const fs::path& path, const std::vector<TargetView>& targets) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& t : targets) {
    std::vector<double> k(9), e(16);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) k[r * 3 + c] = t.camera.intrinsics()(r, c);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) e[r * 4 + c] = t.camera.extrinsics()(r, c);
    doc.push_back({{"name", t.name},
                   {"time", t.time},
                   {"K", k},
                   {"E", e},
                   {"width", t.camera.width()},
                   {"height", t.camera.height()}});
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

void write_synthetic(const fs::path& directory, const SyntheticConfig& cfg) {
  const SyntheticWorld world(cfg);
  save_scene(directory, world.make_scene());
  const auto targets = world.held_out_targets();
  write_targets_json(directory / "gt" / "targets.json", targets);
  for (const auto& t : targets) {
    const SyntheticView v = world.render(t.camera, t.time);
    write_rgb_png(directory / "gt" / "rgb" / (t.name + ".png"), v.rgb);
    write_mask_png(directory / "gt" / "mask" / (t.name + ".png"), v.dynamic_mask);
  }
}

}  // namespace stview
