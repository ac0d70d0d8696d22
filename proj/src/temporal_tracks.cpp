#include "stview/temporal_tracks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace stview {

std::vector<Trajectory3D> lift_tracks(const TrackSet& tracks, const Scene& scene,
                                      std::span<const int> frames) {
  std::vector<Trajectory3D> out;
  const int n = static_cast<int>(scene.size());
  for (const Track& track : tracks.tracks) {
    Trajectory3D traj;
    traj.track_id = track.id;
    for (const TrackSample& s : track.samples) {
      if (s.frame_index < 0 || s.frame_index >= n) {
        throw Error(ErrorKind::kOutOfRange, "track " + std::to_string(track.id) +
                                                " references missing frame " +
                                                std::to_string(s.frame_index));
      }
      if (!s.visible) continue;
      if (!frames.empty() && std::find(frames.begin(), frames.end(), s.frame_index) == frames.end())
        continue;
      const FrameBundle& f = scene.frames[s.frame_index];
      if (!s.pixel.finite() || !f.camera.contains(s.pixel)) continue;
      if (!(sample_bilinear(f.dynamic_mask, s.pixel) > 0.0)) continue;
      const double depth = sample_bilinear(f.depth, s.pixel);
      if (!(std::isfinite(depth) && depth > 0.0)) continue;
      traj.samples.push_back({f.time, f.camera.lift(s.pixel, depth), s.frame_index, s.pixel});
    }
    std::sort(traj.samples.begin(), traj.samples.end(),
              [](const TrajectorySample& a, const TrajectorySample& b) { return a.time < b.time; });
    if (!traj.samples.empty()) out.push_back(std::move(traj));
  }
  return out;
}

namespace {

/// Indices of the (up to) two samples closest to t, earlier first on ties.
std::vector<std::size_t> closest_two(const Trajectory3D& traj, double t) {
  std::vector<std::size_t> idx(traj.samples.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double da = std::abs(traj.samples[a].time - t);
    const double db = std::abs(traj.samples[b].time - t);
    if (da != db) return da < db;
    return traj.samples[a].time < traj.samples[b].time;
  });
  idx.resize(std::min<std::size_t>(2, idx.size()));
  return idx;
}

}  // namespace

std::optional<Point3> track_position_at(const Trajectory3D& trajectory, double t_target) {
  const auto idx = closest_two(trajectory, t_target);
  if (idx.empty()) return std::nullopt;
  if (idx.size() == 1) return trajectory.samples[idx[0]].position;
  const auto& a = trajectory.samples[std::min(idx[0], idx[1])];
  const auto& b = trajectory.samples[std::max(idx[0], idx[1])];
  const double s = (t_target - a.time) / (b.time - a.time);
  return a.position + s * (b.position - a.position);
}

TargetCloud build_track_cloud(std::span<const Trajectory3D> trajectories, const Scene& scene,
                              double t_target) {
  TargetCloud cloud;
  for (const Trajectory3D& traj : trajectories) {
    const auto position = track_position_at(traj, t_target);
    if (!position || !position->allFinite()) continue;
    const auto nearest = closest_two(traj, t_target);
    const TrajectorySample& ref = traj.samples[nearest.front()];
    CloudPoint p;
    p.position = *position;
    p.color = sample_rgb(scene.frames[ref.frame_index].image, ref.pixel);
    p.u1 = p.u2 = ref.pixel;
    p.frame1 = p.frame2 = ref.frame_index;
    cloud.points.push_back(p);
  }
  return cloud;
}

std::vector<int> temporal_window(std::span<const double> times, double t_target, int n) {
  std::vector<int> idx(times.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return std::abs(times[a] - t_target) < std::abs(times[b] - t_target);
  });
  idx.resize(std::min<std::size_t>(std::max(n, 0), idx.size()));
  std::sort(idx.begin(), idx.end());
  return idx;
}

TargetCloud merge_clouds(const TargetCloud& a, const TargetCloud& b) {
  TargetCloud out;
  out.points.reserve(a.size() + b.size());
  out.points.insert(out.points.end(), a.points.begin(), a.points.end());
  out.points.insert(out.points.end(), b.points.begin(), b.points.end());
  return out;
}

}  // namespace stview
