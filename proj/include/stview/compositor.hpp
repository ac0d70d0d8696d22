#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stview/geometry.hpp"
#include "stview/raster.hpp"

namespace stview {

struct RenderOutput {
  ImageF rgb;
  MaskU8 dyn_mask;
  MaskU8 hole_mask;
  std::map<std::string, ImageF> diagnostics;
};

/// rgb = M·I_dy + (1−M)·I_st where static coverage exists; pixels covered by
/// neither branch take `background` and are flagged in hole_mask.
RenderOutput blend(const ImageF& static_rgb, const MaskU8& static_coverage, const ImageF& dynamic_rgb,
                   const MaskU8& dynamic_mask, const Rgb& background = Rgb::Zero());

// ---- Metrics ----------------------------------------------------------------

inline constexpr double kPsnrCap = 99.0;

/// PSNR over pixels selected by mask ∧ coverage (either may be null), for
/// images in [0,1]. Zero MSE reports kPsnrCap. Throws if no pixel is selected.
double psnr(const ImageF& a, const ImageF& b, const MaskU8* mask = nullptr,
            const MaskU8* coverage = nullptr);

double mse(const ImageF& a, const ImageF& b, const MaskU8* mask = nullptr,
           const MaskU8* coverage = nullptr);

/// SSIM map (11×11 Gaussian σ=1.5, K1=0.01, K2=0.03), channel-averaged.
/// Windows are truncated at the border and renormalized.
ImageF ssim_map(const ImageF& a, const ImageF& b);

/// Mean of the SSIM map over mask ∧ coverage pixels (all when null).
double ssim(const ImageF& a, const ImageF& b, const MaskU8* mask = nullptr,
            const MaskU8* coverage = nullptr);

struct FrameMetrics {
  std::string scene;
  std::string frame;
  double psnr_full = 0.0;
  double ssim_full = 0.0;
  std::optional<double> psnr_dynamic, ssim_dynamic;
  std::optional<double> psnr_static, ssim_static;
};

struct SceneSummary {
  std::string scene;
  std::size_t frames = 0;
  std::map<std::string, double> means;  // metric name → mean over frames that report it
};

struct MetricReport {
  std::vector<FrameMetrics> frames;
  std::vector<SceneSummary> scenes;
  std::map<std::string, double> overall;  // unweighted mean of scene means
};

/// Groups by scene (first-seen order), averages per scene, then across scenes.
MetricReport aggregate(const std::vector<FrameMetrics>& frames);

FrameMetrics evaluate_frame(const std::string& scene, const std::string& frame,
                            const ImageF& rendered, const ImageF& truth, const MaskU8* truth_dynamic,
                            const MaskU8* coverage);

}  // namespace stview
