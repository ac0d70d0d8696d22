#include "stview/mask_pipeline.hpp"

#include <algorithm>
#include <string>
#include <unordered_map>

#include "stview/geometry.hpp"

namespace stview {

void MaskConfig::validate() const {
  if (!(history_threshold >= 0.0 && history_threshold <= 1.0) ||
      !(segment_overlap >= 0.0 && segment_overlap <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "mask config thresholds must lie in [0,1]");
  }
}

ImageF warp_history(const MaskHistory& prev, const FlowField& flow_to_prev) {
  const ImageF& acc = prev.accumulator;
  if (!flow_to_prev.flow.same_shape(acc)) {
    throw Error(ErrorKind::kDimensionMismatch,
                "warp_history: flow " + std::to_string(flow_to_prev.source_index) + "->" +
                    std::to_string(flow_to_prev.target_index) + " does not match history size");
  }
  ImageF out(acc.width(), acc.height(), 1);
  for (int y = 0; y < acc.height(); ++y) {
    for (int x = 0; x < acc.width(); ++x) {
      const PixelCoord src{x + static_cast<double>(flow_to_prev.flow.at(x, y, 0)),
                           y + static_cast<double>(flow_to_prev.flow.at(x, y, 1))};
      out.at(x, y) = static_cast<float>(sample_bilinear(acc, src));
    }
  }
  return out;
}

MaskU8 fuse_segments(const MaskU8& mask, const LabelMap& segments, double overlap) {
  if (!mask.same_shape(segments)) {
    throw Error(ErrorKind::kDimensionMismatch, "fuse_segments: mask and segment map differ in size");
  }
  struct Count {
    std::size_t area = 0;
    std::size_t hits = 0;
  };
  std::unordered_map<std::int32_t, Count> counts;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      Count& c = counts[segments.at(x, y)];
      ++c.area;
      if (mask.at(x, y)) ++c.hits;
    }
  }
  std::unordered_map<std::int32_t, bool> keep;
  for (const auto& [label, c] : counts) {
    // hits/area > overlap, without the division.
    keep[label] = static_cast<double>(c.hits) > overlap * static_cast<double>(c.area);
  }
  MaskU8 out(mask.width(), mask.height(), 1);
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) out.at(x, y) = keep[segments.at(x, y)] ? 1 : 0;
  return out;
}

std::vector<MaskU8> propagate_masks(std::span<const MaskU8> raw_masks,
                                    std::span<const FlowField* const> flows_to_prev,
                                    std::span<const LabelMap> segments, const MaskConfig& cfg) {
  cfg.validate();
  std::vector<MaskU8> refined;
  if (raw_masks.empty()) return refined;
  if (!segments.empty() && segments.size() != raw_masks.size()) {
    throw Error(ErrorKind::kInvalidArgument, "propagate_masks: need one segment map per frame");
  }
  const int w = raw_masks[0].width();
  const int h = raw_masks[0].height();

  MaskHistory history{ImageF(w, h, 1), 0};
  auto fold = [&](const MaskU8& final_mask) {
    auto acc = history.accumulator.data();
    auto m = final_mask.data();
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += m[k] ? 1.0f : 0.0f;
    ++history.frame_count;
  };

  for (std::size_t i = 0; i < raw_masks.size(); ++i) {
    const MaskU8& raw = raw_masks[i];
    if (!raw.same_shape(w, h)) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "propagate_masks: frame " + std::to_string(i) + " mask size differs");
    }
    MaskU8 mask = raw;
    if (i >= 1) {
      if (i >= flows_to_prev.size() || flows_to_prev[i] == nullptr) {
        throw Error(ErrorKind::kMissingFlow, "propagate_masks: missing flow " + std::to_string(i) +
                                                 "->" + std::to_string(i - 1));
      }
      // History at frame i holds frames 0..i−1 but is normalized by (i−1);
      // frame 1 divides by 1.
      history.accumulator = warp_history(history, *flows_to_prev[i]);
      const double divisor = static_cast<double>(std::max<std::size_t>(i - 1, 1));
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double ratio = history.accumulator.at(x, y) / divisor;
          mask.at(x, y) = (raw.at(x, y) && ratio >= cfg.history_threshold) ? 1 : 0;
        }
      }
    }
    if (!segments.empty()) mask = fuse_segments(mask, segments[i], cfg.segment_overlap);
    fold(mask);
    refined.push_back(std::move(mask));
  }
  return refined;
}

std::vector<MaskU8> propagate_masks(const Scene& scene, const MaskConfig& cfg) {
  std::vector<MaskU8> raw;
  std::vector<const FlowField*> flows(scene.size(), nullptr);
  for (std::size_t i = 0; i < scene.size(); ++i) {
    raw.push_back(scene.frames[i].dynamic_mask);
    if (i >= 1) flows[i] = &scene.flow(static_cast<int>(i), static_cast<int>(i) - 1);
  }
  return propagate_masks(raw, flows, scene.segments, cfg);
}

}  // namespace stview
