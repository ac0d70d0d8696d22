#include <cmath>

#include "stview/scene_io.hpp"

namespace stview {

ScaleShift align_depth_scale_shift(std::span<const double> predicted,
                                   std::span<const double> reference) {
  if (predicted.size() != reference.size()) {
    throw Error(ErrorKind::kInvalidArgument, "align_depth: sample counts differ");
  }
  const std::size_t n = predicted.size();
  if (n < 2) throw Error(ErrorKind::kDegenerateFit, "align_depth: need at least 2 samples");

  // Centered normal equations.
  double mean_p = 0.0, mean_r = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean_p += predicted[i];
    mean_r += reference[i];
  }
  mean_p /= static_cast<double>(n);
  mean_r /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dp = predicted[i] - mean_p;
    sxx += dp * dp;
    sxy += dp * (reference[i] - mean_r);
  }
  if (!(sxx > 0.0) || !std::isfinite(sxx) || !std::isfinite(sxy)) {
    throw Error(ErrorKind::kDegenerateFit, "align_depth: predicted depths have zero variance");
  }
  const double scale = sxy / sxx;
  return {scale, mean_r - scale * mean_p};
}

void apply_scale_shift(ImageF& depth, const ScaleShift& fit) {
  for (float& d : depth.data()) {
    if (std::isfinite(d)) d = static_cast<float>(fit.scale * d + fit.shift);
  }
}

}  // namespace stview
