#include "stview/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace stview {

namespace fs = std::filesystem;

std::vector<int> static_sources_for(const Scene& scene, const CameraModel& target, double t_target,
                                    const SourceSelectionConfig& cfg) {
  SourceSelectionConfig eff = cfg;
  const int n = static_cast<int>(scene.size());
  if (eff.strategy == SelectionStrategy::kWindowNearest) {
    int in_window = 0;
    for (const auto& f : scene.frames)
      if (std::abs(f.time - t_target) <= eff.time_window) ++in_window;
    eff.n_spatial = std::max(1, std::min(eff.n_spatial, in_window));
  } else {
    eff.n_cluster = std::min(eff.n_cluster, n);
    eff.n_spatial = std::min(eff.n_spatial, eff.n_cluster);
  }
  return select_source_views(scene, target, t_target, eff);
}

RenderOutput render_view(const Scene& scene, const CameraModel& target, double t_target,
                         const PipelineConfig& cfg, RenderTrace* trace) {
  const auto times = scene.times();
  const TemporalNeighbors nb = select_temporal_neighbors(times, t_target);
  const FrameBundle& fm = scene.frames[nb.minus];
  const FrameBundle& fp = scene.frames[nb.plus];
  const FlowField* fwd = nb.minus == nb.plus ? nullptr : &scene.flow(nb.minus, nb.plus);
  const FlowField* bwd = nb.minus == nb.plus ? nullptr : &scene.flow(nb.plus, nb.minus);

  const PairedPointCloud paired = build_paired_cloud(fm, nb.minus, fp, nb.plus, fwd, bwd, cfg.cycle);
  TargetCloud cloud = interpolate_cloud(paired, fm.time, fp.time, t_target);

  std::size_t track_points = 0;
  if (cfg.use_tracks && scene.tracks) {
    const auto window = temporal_window(times, t_target, cfg.tracks.n_temporal);
    const auto trajectories = lift_tracks(*scene.tracks, scene, window);
    const TargetCloud extra = build_track_cloud(trajectories, scene, t_target);
    track_points = extra.size();
    cloud = merge_clouds(cloud, extra);
  }
  if (cfg.remove_outliers && !cloud.empty()) cloud = remove_outliers(cloud, cfg.outliers);

  DynamicRender dyn;
  switch (cfg.dyn_renderer) {
    case DynRendererKind::kSplat: dyn = render_splat(cloud, target, cfg.splat); break;
    case DynRendererKind::kPoints: dyn = render_points(cloud, target, cfg.points); break;
    case DynRendererKind::kMesh: dyn = render_mesh(cloud, target, cfg.mesh); break;
  }

  const std::vector<int> sources = static_sources_for(scene, target, t_target, cfg.selection);
  StaticRender stat;
  if (cfg.static_backend == StaticBackendKind::kPoints) {
    stat = render_static_pointcloud(scene, target, sources, cfg.static_stride, cfg.points);
  } else {
    AggregatorConfig agg = cfg.aggregator;
    agg.threads = cfg.threads;
    stat = EpipolarAggregator(agg).render(target, scene, sources);
  }

  RenderOutput out = blend(stat.rgb, stat.coverage, dyn.rgb, dyn.mask, cfg.background);
  if (cfg.emit_diagnostics) {
    out.diagnostics.emplace("dyn_weight", dyn.weight);
    for (std::size_t p = 0; p < stat.diagnostics.size(); ++p)
      out.diagnostics.emplace("sigma_block" + std::to_string(p + 1), stat.diagnostics[p]);
  }
  if (trace) {
    trace->neighbors = nb;
    trace->paired_points = paired.size();
    trace->track_points = track_points;
    trace->points_after_outliers = cloud.size();
    trace->static_sources = sources;
  }
  return out;
}

void write_render_output(const fs::path& dir, const std::string& name, const RenderOutput& out,
                         bool diagnostics) {
  write_rgb_png(dir / "rgb" / (name + ".png"), out.rgb);
  write_mask_png(dir / "dyn_mask" / (name + ".png"), out.dyn_mask);
  write_mask_png(dir / "hole_mask" / (name + ".png"), out.hole_mask);
  if (!diagnostics) return;
  for (const auto& [key, raster] : out.diagnostics)
    write_raster(dir / "diag" / (name + "_" + key + ".pgdv"), RasterKind::kFeat, raster);
}

void run_render_job(const RenderJob& job) {
  const Scene scene = load_scene(job.scene);
  for (const auto& target : job.targets) {
    RenderOutput out;
    try {
      out = render_view(scene, target.camera, target.time, job.config);
    } catch (const Error& e) {
      throw Error(e.kind(), "target '" + target.name + "': " + e.what());
    }
    write_render_output(job.output, target.name, out, job.config.emit_diagnostics);
  }
}

std::vector<FrameMetrics> evaluate_directory(const std::string& scene_name, const fs::path& rendered,
                                             const fs::path& truth, bool use_coverage) {
  const fs::path truth_rgb = truth / "rgb";
  if (!fs::is_directory(truth_rgb)) {
    throw Error(ErrorKind::kMissingFile, "missing directory '" + truth_rgb.string() + "'");
  }
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(truth_rgb))
    if (entry.path().extension() == ".png") names.push_back(entry.path().stem().string());
  std::sort(names.begin(), names.end());
  if (names.empty()) throw Error(ErrorKind::kMissingFile, "no frames in '" + truth_rgb.string() + "'");

  std::vector<FrameMetrics> out;
  for (const auto& name : names) {
    const ImageF gt = read_rgb_png(truth_rgb / (name + ".png"));
    const ImageF img = read_rgb_png(rendered / "rgb" / (name + ".png"));
    std::optional<MaskU8> dyn;
    if (fs::exists(truth / "mask" / (name + ".png"))) dyn = read_mask_png(truth / "mask" / (name + ".png"));
    std::optional<MaskU8> coverage;
    if (use_coverage) {
      const MaskU8 holes = read_mask_png(rendered / "hole_mask" / (name + ".png"));
      coverage = MaskU8(holes.width(), holes.height(), 1);
      for (int y = 0; y < holes.height(); ++y)
        for (int x = 0; x < holes.width(); ++x) coverage->at(x, y) = holes.at(x, y) ? 0 : 1;
    }
    try {
      out.push_back(evaluate_frame(scene_name, name, img, gt, dyn ? &*dyn : nullptr,
                                   coverage ? &*coverage : nullptr));
    } catch (const Error& e) {
      throw Error(e.kind(), "frame '" + name + "': " + e.what());
    }
  }
  return out;
}

nlohmann::json report_to_json(const MetricReport& report) {
  using nlohmann::json;
  json doc;
  doc["overall"] = report.overall;
  doc["lpips"] = "unavailable";
  json scenes = json::array();
  for (const auto& s : report.scenes) scenes.push_back({{"scene", s.scene}, {"frames", s.frames}, {"means", s.means}});
  doc["scenes"] = scenes;
  json frames = json::array();
  for (const auto& f : report.frames) {
    json row = {{"scene", f.scene}, {"frame", f.frame}, {"psnr", f.psnr_full}, {"ssim", f.ssim_full}};
    if (f.psnr_dynamic) row["psnr_dynamic"] = *f.psnr_dynamic;
    if (f.ssim_dynamic) row["ssim_dynamic"] = *f.ssim_dynamic;
    if (f.psnr_static) row["psnr_static"] = *f.psnr_static;
    if (f.ssim_static) row["ssim_static"] = *f.ssim_static;
    frames.push_back(row);
  }
  doc["frames"] = frames;
  return doc;
}

void write_frames_csv(const fs::path& path, const MetricReport& report) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path.string() + "'");
  out << "scene,frame,psnr,ssim,psnr_dynamic,ssim_dynamic,psnr_static,ssim_static\n";
  auto opt = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string(); };
  for (const auto& f : report.frames) {
    out << f.scene << ',' << f.frame << ',' << std::to_string(f.psnr_full) << ','
        << std::to_string(f.ssim_full) << ',' << opt(f.psnr_dynamic) << ',' << opt(f.ssim_dynamic)
        << ',' << opt(f.psnr_static) << ',' << opt(f.ssim_static) << '\n';
  }
}

}  // namespace stview
