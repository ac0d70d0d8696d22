#pragma once

#include <filesystem>

#include <json.hpp>

#include "stview/dynamic_renderer.hpp"
#include "stview/mask_pipeline.hpp"
#include "stview/static_renderer.hpp"
#include "stview/temporal_tracks.hpp"

namespace stview {

enum class DynRendererKind { kSplat, kPoints, kMesh };
enum class StaticBackendKind { kPoints, kEpipolar };

/// Every tunable of the render pipeline. Defaults carry the published
/// constants (δ_out 0.1, N_nn 50, α 100, radius 0.01, δ_mask 0.5, overlap
/// 0.10, N_spatial 10, N_cluster 40, window 12).
struct PipelineConfig {
  DynRendererKind dyn_renderer = DynRendererKind::kSplat;
  StaticBackendKind static_backend = StaticBackendKind::kPoints;
  SourceSelectionConfig selection;
  AggregatorConfig aggregator;
  bool remove_outliers = true;
  OutlierConfig outliers;
  SplatConfig splat;
  PointRenderConfig points;
  MeshRenderConfig mesh;
  CycleTolerance cycle;
  MaskConfig masks;
  bool use_tracks = false;
  TrackConfig tracks;
  int static_stride = 1;
  bool emit_diagnostics = false;
  bool eval_coverage = false;
  Rgb background = Rgb::Zero();
  int threads = 1;
};

DynRendererKind parse_dyn_renderer(std::string_view name);
StaticBackendKind parse_static_backend(std::string_view name);
SelectionStrategy parse_selection(std::string_view name);
std::string_view to_string(DynRendererKind kind);
std::string_view to_string(StaticBackendKind kind);
std::string_view to_string(SelectionStrategy kind);

/// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const PipelineConfig& cfg);
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace stview
