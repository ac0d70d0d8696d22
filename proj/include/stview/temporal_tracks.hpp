#pragma once

#include <optional>
#include <span>
#include <vector>

#include "stview/dynamic_renderer.hpp"
#include "stview/scene_io.hpp"

namespace stview {

struct TrajectorySample {
  double time = 0.0;
  Point3 position;
  int frame_index = 0;
  PixelCoord pixel;  // 2D location on frame_index, used for color lookup
};

/// Visible, dynamic samples of one track, strictly increasing in time.
struct Trajectory3D {
  int track_id = 0;
  std::vector<TrajectorySample> samples;
};

struct TrackConfig {
  int n_temporal = 6;  // frames nearest t_tgt whose samples are used
};

/// Lifts visible samples on dynamic content. `frames` restricts which frame
/// indices contribute (empty = all). Empty trajectories are dropped.
std::vector<Trajectory3D> lift_tracks(const TrackSet& tracks, const Scene& scene,
                                      std::span<const int> frames = {});

/// Two samples closest in time (ties to the earlier one), linearly
/// inter-/extrapolated; a single sample is returned unchanged.
std::optional<Point3> track_position_at(const Trajectory3D& trajectory, double t_target);

/// One point per trajectory with a defined position; color is sampled on the
/// temporally nearest visible frame.
TargetCloud build_track_cloud(std::span<const Trajectory3D> trajectories, const Scene& scene,
                              double t_target);

/// Indices of the n frames closest in time to t_target, ascending.
std::vector<int> temporal_window(std::span<const double> times, double t_target, int n);

TargetCloud merge_clouds(const TargetCloud& a, const TargetCloud& b);

}  // namespace stview
