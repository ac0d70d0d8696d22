#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stview/geometry.hpp"
#include "stview/raster.hpp"

namespace stview {

/// u_target = u_source + flow[u_source]; two channels (dx, dy) in pixels.
struct FlowField {
  int source_index = 0;
  int target_index = 0;
  ImageF flow;

  PixelCoord displacement_at(PixelCoord u) const {
    return {sample_bilinear(flow, u, 0), sample_bilinear(flow, u, 1)};
  }
};

struct TrackSample {
  int frame_index = 0;
  PixelCoord pixel;
  bool visible = false;
};

struct Track {
  int id = 0;
  std::vector<TrackSample> samples;  // sorted by frame_index, unique per frame
};

struct TrackSet {
  std::vector<Track> tracks;
};

struct FrameBundle {
  ImageF image;        // H×W×3 linear [0,1]
  ImageF depth;        // H×W camera z, NaN where unknown
  MaskU8 dynamic_mask; // H×W in {0,1}
  CameraModel camera;
  double time = 0.0;

  int width() const noexcept { return image.width(); }
  int height() const noexcept { return image.height(); }
};

struct Scene {
  std::vector<FrameBundle> frames;
  std::map<std::pair<int, int>, FlowField> flows;
  std::optional<TrackSet> tracks;
  std::vector<LabelMap> segments;  // empty or one per frame

  std::size_t size() const noexcept { return frames.size(); }
  std::vector<double> times() const;
  /// Throws kMissingFlow naming the pair if absent.
  const FlowField& flow(int source, int target) const;
  bool has_flow(int source, int target) const {
    return flows.contains({source, target});
  }
};

// ---- PGDV raster container -------------------------------------------------

enum class RasterKind { kDepth, kFlow, kFeat };

std::string_view to_string(RasterKind kind);

void write_raster(const std::filesystem::path& path, RasterKind kind, const ImageF& raster);
ImageF read_raster(const std::filesystem::path& path, RasterKind expected_kind);
/// Reads any kind; reports the stored kind through `kind`.
ImageF read_raster(const std::filesystem::path& path, RasterKind* kind);

// ---- PNG / JSON / CSV -------------------------------------------------------

ImageF read_rgb_png(const std::filesystem::path& path);
void write_rgb_png(const std::filesystem::path& path, const ImageF& rgb);
MaskU8 read_mask_png(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const MaskU8& mask);
LabelMap read_label_png(const std::filesystem::path& path);
void write_label_png(const std::filesystem::path& path, const LabelMap& labels);

struct CameraRecord {
  double time = 0.0;
  CameraModel camera;
};

std::vector<CameraRecord> read_cameras_json(const std::filesystem::path& path);
void write_cameras_json(const std::filesystem::path& path, std::span<const CameraRecord> records);

TrackSet read_tracks_csv(const std::filesystem::path& path);
void write_tracks_csv(const std::filesystem::path& path, const TrackSet& tracks);

// ---- Scene bundle -----------------------------------------------------------

std::string frame_name(int index);
std::string flow_name(int source, int target);

Scene load_scene(const std::filesystem::path& directory);
void save_scene(const std::filesystem::path& directory, const Scene& scene);

// ---- Depth alignment --------------------------------------------------------

struct ScaleShift {
  double scale = 1.0;
  double shift = 0.0;
};

/// Least-squares fit of ref ≈ scale·pred + shift.
ScaleShift align_depth_scale_shift(std::span<const double> predicted,
                                   std::span<const double> reference);
/// Applies scale·D + shift to every finite sample.
void apply_scale_shift(ImageF& depth, const ScaleShift& fit);

}  // namespace stview
