// Command-line front end. Errors are printed to stderr as one JSON object
// and the process exits with status 1 (2 for usage errors).

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "stview/config.hpp"
#include "stview/error.hpp"
#include "stview/mask_pipeline.hpp"
#include "stview/pipeline.hpp"
#include "stview/scene_io.hpp"
#include "stview/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace stview;

namespace {

struct RenderFlags {
  std::string config;
  std::string dyn_renderer;
  std::string static_backend;
  std::string select;
  std::optional<int> n_spatial;
  std::optional<std::uint64_t> seed;
  bool emit_diagnostics = false;
  bool use_tracks = false;
  bool no_outliers = false;
  std::optional<int> threads;
};

PipelineConfig resolve_config(const RenderFlags& f) {
  PipelineConfig cfg = f.config.empty() ? PipelineConfig{} : load_config(f.config);
  if (!f.dyn_renderer.empty()) cfg.dyn_renderer = parse_dyn_renderer(f.dyn_renderer);
  if (!f.static_backend.empty()) cfg.static_backend = parse_static_backend(f.static_backend);
  if (!f.select.empty()) cfg.selection.strategy = parse_selection(f.select);
  if (f.n_spatial) cfg.selection.n_spatial = *f.n_spatial;
  if (f.seed) {
    cfg.selection.rng_seed = *f.seed;
    cfg.aggregator.weight_seed = *f.seed;
  }
  if (f.emit_diagnostics) cfg.emit_diagnostics = true;
  if (f.use_tracks) cfg.use_tracks = true;
  if (f.no_outliers) cfg.remove_outliers = false;
  if (f.threads) cfg.threads = *f.threads;
  return cfg;
}

void write_json(const fs::path& path, const json& doc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

int fail(std::string_view kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space-time view synthesis for dynamic scene bundles"};
  app.require_subcommand(1);

  // gen-synthetic
  auto* gen = app.add_subcommand("gen-synthetic", "Write the analytic test scene");
  std::string gen_out;
  SyntheticConfig syn;
  gen->add_option("--out", gen_out, "Output scene directory")->required();
  gen->add_option("--width", syn.width);
  gen->add_option("--height", syn.height);
  gen->add_option("--frames", syn.frames);
  gen->add_option("--seed", syn.texture_seed, "Texture seed");

  // render
  auto* render = app.add_subcommand("render", "Render target views of a scene");
  RenderFlags rf;
  std::string scene_dir, targets_path, render_out;
  render->add_option("--scene", scene_dir)->required();
  render->add_option("--targets", targets_path, "Target list JSON (default: SCENE/gt/targets.json)");
  render->add_option("--out", render_out)->required();
  render->add_option("--config", rf.config, "JSON config; flags override it");
  render->add_option("--dyn-renderer", rf.dyn_renderer)->check(CLI::IsMember({"splat", "points", "mesh"}));
  render->add_option("--static-backend", rf.static_backend)->check(CLI::IsMember({"points", "epipolar"}));
  render->add_option("--select", rf.select)->check(CLI::IsMember({"window", "cluster"}));
  render->add_option("--n-spatial", rf.n_spatial);
  render->add_option("--seed", rf.seed);
  render->add_option("--threads", rf.threads);
  render->add_flag("--emit-diagnostics", rf.emit_diagnostics);
  render->add_flag("--use-tracks", rf.use_tracks);
  render->add_flag("--no-outlier-removal", rf.no_outliers);

  // evaluate
  auto* eval = app.add_subcommand("evaluate", "Score rendered views against ground truth");
  std::vector<std::string> rendered_dirs, truth_dirs, scene_names;
  std::string coverage = "off", report_path, csv_path, eval_config;
  eval->add_option("--rendered", rendered_dirs, "Rendered directory (repeat per scene)")->required();
  eval->add_option("--truth", truth_dirs, "Ground-truth directory (repeat per scene)")->required();
  eval->add_option("--name", scene_names, "Scene names (default: truth directory name)");
  eval->add_option("--eval-coverage", coverage)->check(CLI::IsMember({"on", "off"}));
  eval->add_option("--config", eval_config);
  eval->add_option("--report", report_path, "Write the JSON report here (default: stdout)");
  eval->add_option("--csv", csv_path, "Per-frame CSV");

  // propagate-masks
  auto* masks = app.add_subcommand("propagate-masks", "Refine dynamic masks into mask_refined/");
  std::string mask_scene, mask_config;
  std::optional<double> mask_threshold, mask_overlap;
  masks->add_option("--scene", mask_scene)->required();
  masks->add_option("--config", mask_config);
  masks->add_option("--threshold", mask_threshold);
  masks->add_option("--overlap", mask_overlap);

  // align-depth
  auto* align = app.add_subcommand("align-depth", "Fit scale and shift of a depth map to sparse reference depth");
  std::string pred_path, ref_path, aligned_path;
  align->add_option("--pred", pred_path, "Predicted depth (PGDV)")->required();
  align->add_option("--ref", ref_path, "Reference depth (PGDV; non-finite or <= 0 means no sample)")->required();
  align->add_option("--out", aligned_path, "Write the aligned depth here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << json{{"error", "usage"}, {"message", e.what()}}.dump() << '\n';
    return 2;
  }

  try {
    if (*gen) {
      write_synthetic(gen_out, syn);
      std::cout << json{{"scene", gen_out}, {"frames", syn.frames}}.dump() << '\n';
    } else if (*render) {
      RenderJob job;
      job.scene = scene_dir;
      job.config = resolve_config(rf);
      job.output = render_out;
      const fs::path tp = targets_path.empty() ? fs::path(scene_dir) / "gt" / "targets.json" : fs::path(targets_path);
      job.targets = read_targets_json(tp);
      run_render_job(job);
      std::cout << json{{"rendered", job.targets.size()}, {"out", render_out},
                        {"config", config_to_json(job.config)}}.dump() << '\n';
    } else if (*eval) {
      if (rendered_dirs.size() != truth_dirs.size())
        throw Error(ErrorKind::kInvalidArgument, "--rendered and --truth must be given the same number of times");
      if (!scene_names.empty() && scene_names.size() != truth_dirs.size())
        throw Error(ErrorKind::kInvalidArgument, "--name must be given once per scene");
      bool use_cov = coverage == "on";
      if (!eval_config.empty() && eval->count("--eval-coverage") == 0) use_cov = load_config(eval_config).eval_coverage;
      std::vector<FrameMetrics> frames;
      for (std::size_t s = 0; s < truth_dirs.size(); ++s) {
        const std::string name = scene_names.empty() ? fs::path(truth_dirs[s]).lexically_normal().parent_path().filename().string()
                                                     : scene_names[s];
        auto part = evaluate_directory(name.empty() ? "scene" + std::to_string(s) : name, rendered_dirs[s],
                                       truth_dirs[s], use_cov);
        frames.insert(frames.end(), part.begin(), part.end());
      }
      const MetricReport report = aggregate(frames);
      const json doc = report_to_json(report);
      if (!csv_path.empty()) write_frames_csv(csv_path, report);
      if (report_path.empty()) std::cout << doc.dump(2) << '\n';
      else write_json(report_path, doc);
    } else if (*masks) {
      PipelineConfig cfg = mask_config.empty() ? PipelineConfig{} : load_config(mask_config);
      if (mask_threshold) cfg.masks.history_threshold = *mask_threshold;
      if (mask_overlap) cfg.masks.segment_overlap = *mask_overlap;
      const Scene scene = load_scene(mask_scene);
      const auto refined = propagate_masks(scene, cfg.masks);
      for (std::size_t i = 0; i < refined.size(); ++i)
        write_mask_png(fs::path(mask_scene) / "mask_refined" / (frame_name(static_cast<int>(i)) + ".png"), refined[i]);
      std::cout << json{{"frames", refined.size()}, {"out", (fs::path(mask_scene) / "mask_refined").string()}}.dump() << '\n';
    } else if (*align) {
      ImageF pred = read_raster(pred_path, RasterKind::kDepth);
      const ImageF ref = read_raster(ref_path, RasterKind::kDepth);
      if (!pred.same_shape(ref))
        throw Error(ErrorKind::kDimensionMismatch, "'" + ref_path + "' does not match the shape of '" + pred_path + "'");
      std::vector<double> p, r;
      for (std::size_t k = 0; k < ref.data().size(); ++k) {
        const double rv = ref.data()[k], pv = pred.data()[k];
        if (std::isfinite(rv) && rv > 0.0 && std::isfinite(pv)) {
          p.push_back(pv);
          r.push_back(rv);
        }
      }
      ScaleShift fit;
      try {
        fit = align_depth_scale_shift(p, r);
      } catch (const Error& e) {
        throw Error(e.kind(), "'" + ref_path + "': " + e.what());
      }
      if (!aligned_path.empty()) {
        apply_scale_shift(pred, fit);
        write_raster(aligned_path, RasterKind::kDepth, pred);
      }
      std::cout << json{{"scale", fit.scale}, {"shift", fit.shift}, {"samples", p.size()}}.dump() << '\n';
    }
  } catch (const Error& e) {
    return fail(to_string(e.kind()), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
