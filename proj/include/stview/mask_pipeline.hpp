#pragma once

#include <optional>
#include <span>
#include <vector>

#include "stview/raster.hpp"
#include "stview/scene_io.hpp"

namespace stview {

/// Running count of how often each tracked pixel was classified dynamic.
struct MaskHistory {
  ImageF accumulator;  // H×W, 0 ≤ value ≤ frame_count
  int frame_count = 0; // frames folded into the accumulator so far
};

struct MaskConfig {
  double history_threshold = 0.5;
  double segment_overlap = 0.10;

  void validate() const;
};

/// Backward warp of the history: out(u) = prev(u + flow_{i→i−1}(u)), bilinear,
/// clamp-to-edge.
ImageF warp_history(const MaskHistory& prev, const FlowField& flow_to_prev);

/// Union of whole segments whose overlap fraction with `mask` is strictly
/// greater than `overlap`.
MaskU8 fuse_segments(const MaskU8& mask, const LabelMap& segments, double overlap);

/// Streaming refinement. `flows_to_prev[i]` is the i→i−1 flow for i ≥ 1
/// (index 0 ignored). `segments` is empty or one label map per frame.
std::vector<MaskU8> propagate_masks(std::span<const MaskU8> raw_masks,
                                    std::span<const FlowField* const> flows_to_prev,
                                    std::span<const LabelMap> segments, const MaskConfig& cfg);

/// Convenience: pulls raw masks, backward flows and segment maps from a scene.
std::vector<MaskU8> propagate_masks(const Scene& scene, const MaskConfig& cfg);

}  // namespace stview
