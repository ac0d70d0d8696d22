#include "stview/compositor.hpp"

namespace stview {

RenderOutput blend(const ImageF& static_rgb, const MaskU8& static_coverage, const ImageF& dynamic_rgb,
                   const MaskU8& dynamic_mask, const Rgb& background) {
  const int w = static_rgb.width();
  const int h = static_rgb.height();
  if (!static_coverage.same_shape(static_rgb) || !dynamic_rgb.same_shape(static_rgb) ||
      !dynamic_mask.same_shape(static_rgb) || static_rgb.channels() != 3 ||
      dynamic_rgb.channels() != 3) {
    throw Error(ErrorKind::kDimensionMismatch, "blend: branch rasters differ in shape");
  }
  RenderOutput out{ImageF(w, h, 3), MaskU8(w, h, 1), MaskU8(w, h, 1), {}};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (dynamic_mask.at(x, y)) {
        out.dyn_mask.at(x, y) = 1;
        for (int c = 0; c < 3; ++c) out.rgb.at(x, y, c) = dynamic_rgb.at(x, y, c);
      } else if (static_coverage.at(x, y)) {
        for (int c = 0; c < 3; ++c) out.rgb.at(x, y, c) = static_rgb.at(x, y, c);
      } else {
        out.hole_mask.at(x, y) = 1;
        for (int c = 0; c < 3; ++c) out.rgb.at(x, y, c) = static_cast<float>(background[c]);
      }
    }
  }
  return out;
}

}  // namespace stview
