#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "stview/compositor.hpp"
#include "stview/config.hpp"
#include "stview/scene_io.hpp"
#include "stview/synthetic.hpp"

namespace stview {

/// Intermediate products of one target render, kept for inspection.
struct RenderTrace {
  TemporalNeighbors neighbors;
  std::size_t paired_points = 0;
  std::size_t track_points = 0;
  std::size_t points_after_outliers = 0;
  std::vector<int> static_sources;
};

/// Full pipeline for one space-time target: temporal bracketing, paired
/// cloud, interpolation, optional track merge, outlier removal, dynamic
/// render, static render, blend.
RenderOutput render_view(const Scene& scene, const CameraModel& target, double t_target,
                         const PipelineConfig& cfg, RenderTrace* trace = nullptr);

/// Static source views for a target, shrinking n_spatial / n_cluster to what
/// the scene can supply.
std::vector<int> static_sources_for(const Scene& scene, const CameraModel& target, double t_target,
                                    const SourceSelectionConfig& cfg);

struct RenderJob {
  std::filesystem::path scene;
  std::vector<TargetView> targets;
  PipelineConfig config;
  std::filesystem::path output;
};

/// Writes rgb/, dyn_mask/, hole_mask/ PNGs (and diag/*.pgdv when enabled).
void run_render_job(const RenderJob& job);
void write_render_output(const std::filesystem::path& dir, const std::string& name,
                         const RenderOutput& out, bool diagnostics);

/// Pairs rendered/rgb/NAME.png with truth/rgb/NAME.png for every truth frame;
/// truth/mask/NAME.png supplies the dynamic region when present.
std::vector<FrameMetrics> evaluate_directory(const std::string& scene_name,
                                             const std::filesystem::path& rendered,
                                             const std::filesystem::path& truth, bool use_coverage);

nlohmann::json report_to_json(const MetricReport& report);
void write_frames_csv(const std::filesystem::path& path, const MetricReport& report);

}  // namespace stview
