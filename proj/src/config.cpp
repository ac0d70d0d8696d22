#include "stview/config.hpp"

#include <fstream>
#include <set>
#include <string>

namespace stview {

using nlohmann::json;

DynRendererKind parse_dyn_renderer(std::string_view name) {
  if (name == "splat") return DynRendererKind::kSplat;
  if (name == "points") return DynRendererKind::kPoints;
  if (name == "mesh") return DynRendererKind::kMesh;
  throw Error(ErrorKind::kInvalidArgument, "unknown dynamic renderer '" + std::string(name) + "'");
}

StaticBackendKind parse_static_backend(std::string_view name) {
  if (name == "points") return StaticBackendKind::kPoints;
  if (name == "epipolar") return StaticBackendKind::kEpipolar;
  throw Error(ErrorKind::kInvalidArgument, "unknown static backend '" + std::string(name) + "'");
}

SelectionStrategy parse_selection(std::string_view name) {
  if (name == "window") return SelectionStrategy::kWindowNearest;
  if (name == "cluster") return SelectionStrategy::kCluster;
  throw Error(ErrorKind::kInvalidArgument, "unknown selection strategy '" + std::string(name) + "'");
}

std::string_view to_string(DynRendererKind kind) {
  switch (kind) {
    case DynRendererKind::kSplat: return "splat";
    case DynRendererKind::kPoints: return "points";
    case DynRendererKind::kMesh: return "mesh";
  }
  return "splat";
}

std::string_view to_string(StaticBackendKind kind) {
  return kind == StaticBackendKind::kEpipolar ? "epipolar" : "points";
}

std::string_view to_string(SelectionStrategy kind) {
  return kind == SelectionStrategy::kCluster ? "cluster" : "window";
}

namespace {

template <typename T>
void read(const json& doc, const char* key, T& value, std::set<std::string>& seen) {
  if (!doc.contains(key)) return;
  seen.insert(key);
  try {
    value = doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidArgument, std::string("config key '") + key + "': " + e.what());
  }
}

}  // namespace

PipelineConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::kInvalidArgument, "config must be a JSON object");
  PipelineConfig cfg;
  std::set<std::string> seen;
  std::string dyn = std::string(to_string(cfg.dyn_renderer));
  std::string stat = std::string(to_string(cfg.static_backend));
  std::string select = std::string(to_string(cfg.selection.strategy));
  std::vector<double> background{0.0, 0.0, 0.0};

  read(doc, "dyn_renderer", dyn, seen);
  read(doc, "static_backend", stat, seen);
  read(doc, "select", select, seen);
  read(doc, "n_spatial", cfg.selection.n_spatial, seen);
  read(doc, "n_cluster", cfg.selection.n_cluster, seen);
  read(doc, "time_window", cfg.selection.time_window, seen);
  read(doc, "seed", cfg.selection.rng_seed, seen);
  read(doc, "n_blocks", cfg.aggregator.n_blocks, seen);
  read(doc, "n_ray_samples", cfg.aggregator.n_ray_samples, seen);
  read(doc, "feature_dim", cfg.aggregator.feature_dim, seen);
  read(doc, "weight_seed", cfg.aggregator.weight_seed, seen);
  read(doc, "masked_attention", cfg.aggregator.masked_attention, seen);
  read(doc, "remove_outliers", cfg.remove_outliers, seen);
  read(doc, "outlier_neighbors", cfg.outliers.n_neighbors, seen);
  read(doc, "outlier_deviation", cfg.outliers.deviation, seen);
  read(doc, "splat_alpha", cfg.splat.alpha, seen);
  read(doc, "point_radius", cfg.points.radius, seen);
  read(doc, "mesh_max_depth_ratio", cfg.mesh.max_depth_ratio, seen);
  read(doc, "cycle_abs_tol", cfg.cycle.abs_px, seen);
  read(doc, "cycle_rel_tol", cfg.cycle.rel, seen);
  read(doc, "mask_threshold", cfg.masks.history_threshold, seen);
  read(doc, "segment_overlap", cfg.masks.segment_overlap, seen);
  read(doc, "use_tracks", cfg.use_tracks, seen);
  read(doc, "n_temporal", cfg.tracks.n_temporal, seen);
  read(doc, "static_stride", cfg.static_stride, seen);
  read(doc, "emit_diagnostics", cfg.emit_diagnostics, seen);
  read(doc, "eval_coverage", cfg.eval_coverage, seen);
  read(doc, "background", background, seen);
  read(doc, "threads", cfg.threads, seen);

  for (const auto& [key, _] : doc.items()) {
    if (!seen.contains(key)) throw Error(ErrorKind::kInvalidArgument, "unknown config key '" + key + "'");
  }
  if (background.size() != 3) throw Error(ErrorKind::kInvalidArgument, "background needs 3 values");
  cfg.dyn_renderer = parse_dyn_renderer(dyn);
  cfg.static_backend = parse_static_backend(stat);
  cfg.selection.strategy = parse_selection(select);
  cfg.background = {background[0], background[1], background[2]};
  cfg.aggregator.threads = cfg.threads;
  return cfg;
}

json config_to_json(const PipelineConfig& cfg) {
  return {{"dyn_renderer", to_string(cfg.dyn_renderer)},
          {"static_backend", to_string(cfg.static_backend)},
          {"select", to_string(cfg.selection.strategy)},
          {"n_spatial", cfg.selection.n_spatial},
          {"n_cluster", cfg.selection.n_cluster},
          {"time_window", cfg.selection.time_window},
          {"seed", cfg.selection.rng_seed},
          {"n_blocks", cfg.aggregator.n_blocks},
          {"n_ray_samples", cfg.aggregator.n_ray_samples},
          {"feature_dim", cfg.aggregator.feature_dim},
          {"weight_seed", cfg.aggregator.weight_seed},
          {"masked_attention", cfg.aggregator.masked_attention},
          {"remove_outliers", cfg.remove_outliers},
          {"outlier_neighbors", cfg.outliers.n_neighbors},
          {"outlier_deviation", cfg.outliers.deviation},
          {"splat_alpha", cfg.splat.alpha},
          {"point_radius", cfg.points.radius},
          {"mesh_max_depth_ratio", cfg.mesh.max_depth_ratio},
          {"cycle_abs_tol", cfg.cycle.abs_px},
          {"cycle_rel_tol", cfg.cycle.rel},
          {"mask_threshold", cfg.masks.history_threshold},
          {"segment_overlap", cfg.masks.segment_overlap},
          {"use_tracks", cfg.use_tracks},
          {"n_temporal", cfg.tracks.n_temporal},
          {"static_stride", cfg.static_stride},
          {"emit_diagnostics", cfg.emit_diagnostics},
          {"eval_coverage", cfg.eval_coverage},
          {"background", {cfg.background.x(), cfg.background.y(), cfg.background.z()}},
          {"threads", cfg.threads}};
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kMissingFile, "missing config '" + path.string() + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidArgument, "cannot parse config '" + path.string() + "': " + e.what());
  }
  return config_from_json(doc);
}

}  // namespace stview
