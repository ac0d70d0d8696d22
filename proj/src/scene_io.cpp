#include <algorithm>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "stview/scene_io.hpp"

namespace stview {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string describe(const fs::path& path) { return "'" + path.string() + "'"; }

std::string dims(int w, int h) { return std::to_string(w) + "x" + std::to_string(h); }

void check_frame_dims(int index, std::string_view what, int w, int h, const FrameBundle& frame) {
  if (w != frame.width() || h != frame.height()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "frame " + std::to_string(index) + ": " + std::string(what) + " is " + dims(w, h) +
                    " but image is " + dims(frame.width(), frame.height()));
  }
}

}  // namespace

std::vector<double> Scene::times() const {
  std::vector<double> t;
  t.reserve(frames.size());
  for (const auto& f : frames) t.push_back(f.time);
  return t;
}

const FlowField& Scene::flow(int source, int target) const {
  const auto it = flows.find({source, target});
  if (it == flows.end()) {
    throw Error(ErrorKind::kMissingFlow,
                "missing flow " + std::to_string(source) + "->" + std::to_string(target));
  }
  return it->second;
}

std::string frame_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%05d", index);
  return buf;
}

std::string flow_name(int source, int target) {
  return frame_name(source) + "_" + frame_name(target);
}

std::vector<CameraRecord> read_cameras_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kMissingFile, "missing file " + describe(path));
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kHeaderMismatch, "cannot parse " + describe(path) + ": " + e.what());
  }
  if (!doc.is_array()) {
    throw Error(ErrorKind::kHeaderMismatch, describe(path) + " must hold an array of camera records");
  }
  std::vector<CameraRecord> records;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& rec = doc[i];
    try {
      const auto k = rec.at("K").get<std::vector<double>>();
      const auto e = rec.at("E").get<std::vector<double>>();
      if (k.size() != 9 || e.size() != 16) {
        throw Error(ErrorKind::kHeaderMismatch, "K needs 9 and E needs 16 entries");
      }
      Eigen::Matrix3d kmat;
      Eigen::Matrix4d emat;
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) kmat(r, c) = k[r * 3 + c];
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) emat(r, c) = e[r * 4 + c];
      records.push_back({rec.at("time").get<double>(),
                         CameraModel(kmat, emat, rec.at("width").get<int>(),
                                     rec.at("height").get<int>())});
    } catch (const json::exception& ex) {
      throw Error(ErrorKind::kHeaderMismatch,
                  "camera record " + std::to_string(i) + " in " + describe(path) + ": " + ex.what());
    } catch (const Error& ex) {
      throw Error(ex.kind() == ErrorKind::kInvalidArgument ? ErrorKind::kHeaderMismatch : ex.kind(),
                  "camera record " + std::to_string(i) + " in " + describe(path) + ": " + ex.what());
    }
  }
  return records;
}

void write_cameras_json(const fs::path& path, std::span<const CameraRecord> records) {
  json doc = json::array();
  for (const auto& rec : records) {
    std::vector<double> k(9), e(16);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) k[r * 3 + c] = rec.camera.intrinsics()(r, c);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) e[r * 4 + c] = rec.camera.extrinsics()(r, c);
    doc.push_back({{"time", rec.time},
                   {"K", k},
                   {"E", e},
                   {"width", rec.camera.width()},
                   {"height", rec.camera.height()}});
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + describe(path));
  out << doc.dump(2) << '\n';
}

TrackSet read_tracks_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kMissingFile, "missing file " + describe(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("track_id", 0) != 0) {
    throw Error(ErrorKind::kHeaderMismatch, "tracks header missing in " + describe(path));
  }
  std::map<int, Track> by_id;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    int id = 0, frame = 0, visible = 0;
    double x = 0, y = 0;
    if (!(row >> id >> frame >> x >> y >> visible) || (visible != 0 && visible != 1)) {
      throw Error(ErrorKind::kHeaderMismatch,
                  "bad track row at line " + std::to_string(line_no) + " in " + describe(path));
    }
    Track& track = by_id[id];
    track.id = id;
    for (const auto& s : track.samples) {
      if (s.frame_index == frame) {
        throw Error(ErrorKind::kInvalidArgument, "track " + std::to_string(id) +
                                                     " has two samples on frame " +
                                                     std::to_string(frame) + " in " + describe(path));
      }
    }
    track.samples.push_back({frame, {x, y}, visible == 1});
  }
  TrackSet set;
  for (auto& [id, track] : by_id) {
    std::sort(track.samples.begin(), track.samples.end(),
              [](const TrackSample& a, const TrackSample& b) { return a.frame_index < b.frame_index; });
    set.tracks.push_back(std::move(track));
  }
  return set;
}

void write_tracks_csv(const fs::path& path, const TrackSet& tracks) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + describe(path));
  out << "track_id,frame_index,x,y,visible\n";
  char buf[128];
  for (const auto& track : tracks.tracks) {
    for (const auto& s : track.samples) {
      std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%d\n", track.id, s.frame_index, s.pixel.x,
                    s.pixel.y, s.visible ? 1 : 0);
      out << buf;
    }
  }
}

Scene load_scene(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw Error(ErrorKind::kMissingFile, "scene directory " + describe(dir) + " does not exist");
  }
  auto records = read_cameras_json(dir / "cameras.json");
  if (records.empty()) {
    throw Error(ErrorKind::kInsufficientFrames, "no cameras in " + describe(dir / "cameras.json"));
  }
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (!(records[i].time > records[i - 1].time)) {
      throw Error(ErrorKind::kNonMonotonicTime,
                  "frame " + std::to_string(i) + ": time " + std::to_string(records[i].time) +
                      " does not exceed frame " + std::to_string(i - 1) + " time " +
                      std::to_string(records[i - 1].time));
    }
  }

  Scene scene;
  const int n = static_cast<int>(records.size());
  for (int i = 0; i < n; ++i) {
    const std::string name = frame_name(i);
    FrameBundle frame{read_rgb_png(dir / "rgb" / (name + ".png")),
                      read_raster(dir / "depth" / (name + ".pgdv"), RasterKind::kDepth),
                      read_mask_png(dir / "mask" / (name + ".png")), records[i].camera,
                      records[i].time};
    check_frame_dims(i, "camera", frame.camera.width(), frame.camera.height(), frame);
    check_frame_dims(i, "depth", frame.depth.width(), frame.depth.height(), frame);
    check_frame_dims(i, "mask", frame.dynamic_mask.width(), frame.dynamic_mask.height(), frame);
    for (float d : frame.depth.data()) {
      if (std::isfinite(d) && d <= 0.0f) {
        throw Error(ErrorKind::kInvalidArgument,
                    "frame " + std::to_string(i) + ": non-positive depth value");
      }
    }
    scene.frames.push_back(std::move(frame));
  }

  const fs::path flow_dir = dir / "flow";
  if (fs::is_directory(flow_dir)) {
    const std::regex pattern(R"((\d{5})_(\d{5})\.pgdv)");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(flow_dir)) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
      std::smatch m;
      const std::string fname = path.filename().string();
      if (!std::regex_match(fname, m, pattern)) continue;
      const int src = std::stoi(m[1]);
      const int dst = std::stoi(m[2]);
      if (src >= n || dst >= n) {
        throw Error(ErrorKind::kOutOfRange, "flow " + describe(path) + " references a missing frame");
      }
      ImageF flow = read_raster(path, RasterKind::kFlow);
      if (!flow.same_shape(scene.frames[src].image)) {
        throw Error(ErrorKind::kDimensionMismatch,
                    "frame " + std::to_string(src) + ": flow " + describe(path) + " is " +
                        dims(flow.width(), flow.height()) + " but image is " +
                        dims(scene.frames[src].width(), scene.frames[src].height()));
      }
      scene.flows.emplace(std::pair{src, dst}, FlowField{src, dst, std::move(flow)});
    }
  }
  for (int i = 0; i + 1 < n; ++i) {
    for (auto [a, b] : {std::pair{i, i + 1}, std::pair{i + 1, i}}) {
      if (!scene.has_flow(a, b)) {
        throw Error(ErrorKind::kMissingFlow,
                    "missing flow file " + describe(flow_dir / (flow_name(a, b) + ".pgdv")));
      }
    }
  }
  for (const auto& [key, _] : scene.flows) {
    if (!scene.has_flow(key.second, key.first)) {
      throw Error(ErrorKind::kMissingFlow,
                  "flow " + flow_name(key.first, key.second) + " has no reverse " +
                      flow_name(key.second, key.first));
    }
  }

  const fs::path seg_dir = dir / "segments";
  if (fs::is_directory(seg_dir)) {
    for (int i = 0; i < n; ++i) {
      LabelMap labels = read_label_png(seg_dir / (frame_name(i) + ".png"));
      check_frame_dims(i, "segment map", labels.width(), labels.height(), scene.frames[i]);
      scene.segments.push_back(std::move(labels));
    }
  }

  if (fs::exists(dir / "tracks.csv")) {
    TrackSet tracks = read_tracks_csv(dir / "tracks.csv");
    for (const auto& track : tracks.tracks) {
      for (const auto& s : track.samples) {
        if (s.frame_index < 0 || s.frame_index >= n) {
          throw Error(ErrorKind::kOutOfRange, "track " + std::to_string(track.id) +
                                                  " references missing frame " +
                                                  std::to_string(s.frame_index));
        }
      }
    }
    scene.tracks = std::move(tracks);
  }
  return scene;
}

void save_scene(const fs::path& dir, const Scene& scene) {
  fs::create_directories(dir);
  std::vector<CameraRecord> records;
  for (const auto& f : scene.frames) records.push_back({f.time, f.camera});
  write_cameras_json(dir / "cameras.json", records);
  for (std::size_t i = 0; i < scene.frames.size(); ++i) {
    const auto& f = scene.frames[i];
    const std::string name = frame_name(static_cast<int>(i));
    write_rgb_png(dir / "rgb" / (name + ".png"), f.image);
    write_raster(dir / "depth" / (name + ".pgdv"), RasterKind::kDepth, f.depth);
    write_mask_png(dir / "mask" / (name + ".png"), f.dynamic_mask);
  }
  for (const auto& [key, field] : scene.flows) {
    write_raster(dir / "flow" / (flow_name(key.first, key.second) + ".pgdv"), RasterKind::kFlow,
                 field.flow);
  }
  for (std::size_t i = 0; i < scene.segments.size(); ++i) {
    write_label_png(dir / "segments" / (frame_name(static_cast<int>(i)) + ".png"), scene.segments[i]);
  }
  if (scene.tracks) write_tracks_csv(dir / "tracks.csv", *scene.tracks);
}

}  // namespace stview
