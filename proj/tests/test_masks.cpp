#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "stview/mask_pipeline.hpp"

using namespace stview;

namespace {

FlowField zero_flow(int i, int w, int h) { return {i, i - 1, ImageF(w, h, 2, 0.0f)}; }

MaskU8 mask_with(int w, int h, std::initializer_list<std::pair<int, int>> on) {
  MaskU8 m(w, h, 1);
  for (auto [x, y] : on) m.at(x, y) = 1;
  return m;
}

std::vector<MaskU8> run(const std::vector<MaskU8>& raw, const std::vector<FlowField>& flows,
                        const std::vector<LabelMap>& segments = {}, MaskConfig cfg = {}) {
  std::vector<const FlowField*> ptrs(raw.size(), nullptr);
  for (std::size_t i = 1; i < raw.size(); ++i) ptrs[i] = &flows[i];
  return propagate_masks(raw, ptrs, segments, cfg);
}

}  // namespace

TEST_CASE("warp_history: identity and translation") {
  MaskHistory h{ImageF(5, 3, 1), 2};
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 5; ++x) h.accumulator.at(x, y) = static_cast<float>((x + 2 * y) % 3);
  CHECK(warp_history(h, zero_flow(1, 5, 3)) == h.accumulator);

  FlowField shift = zero_flow(1, 5, 3);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 5; ++x) shift.flow.at(x, y, 0) = -1.0f;  // pixel x of frame i came from x-1
  const ImageF out = warp_history(h, shift);
  for (int y = 0; y < 3; ++y)
    for (int x = 1; x < 5; ++x) CHECK(out.at(x, y) == h.accumulator.at(x - 1, y));
}

TEST_CASE("warp_history: random smooth flow matches per-pixel oracle") {
  const int w = 40, h = 30;
  MaskHistory hist{ImageF(w, h, 1), 3};
  std::mt19937 rng(4);
  std::uniform_int_distribution<int> cnt(0, 3);
  for (float& v : hist.accumulator.data()) v = static_cast<float>(cnt(rng));
  FlowField f = zero_flow(3, w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      f.flow.at(x, y, 0) = static_cast<float>(3.0 * std::sin(0.1 * x + 0.2 * y));
      f.flow.at(x, y, 1) = static_cast<float>(2.0 * std::cos(0.15 * x - 0.05 * y));
    }
  const ImageF out = warp_history(hist, f);
  const ImageF ref = oracle::warp(hist.accumulator, f.flow);
  CHECK(out == ref);
  for (float v : out.data()) {
    CHECK(v >= 0.0f);
    CHECK(v <= 3.0f);
  }
  CHECK_THROWS_AS(warp_history(hist, zero_flow(1, 4, 4)), Error);
}

TEST_CASE("propagate_masks: base case and AND semantics") {
  const std::vector<MaskU8> one{mask_with(4, 4, {{1, 1}})};
  CHECK(run(one, {FlowField{}})[0] == one[0]);

  // Region dynamic in frames 0 and 1, raw mask drops it in frame 2.
  std::vector<MaskU8> raw{mask_with(4, 4, {{2, 2}}), mask_with(4, 4, {{2, 2}}), mask_with(4, 4, {})};
  std::vector<FlowField> flows{FlowField{}, zero_flow(1, 4, 4), zero_flow(2, 4, 4)};
  const auto out = run(raw, flows);
  CHECK(out[1].at(2, 2) == 1);
  CHECK(out[2].at(2, 2) == 0);
}

TEST_CASE("propagate_masks: identity flows and constant masks are a fixed point") {
  const MaskU8 m = mask_with(6, 5, {{1, 1}, {2, 1}, {4, 3}});
  std::vector<MaskU8> raw(5, m);
  std::vector<FlowField> flows{FlowField{}};
  for (int i = 1; i < 5; ++i) flows.push_back(zero_flow(i, 6, 5));
  for (const auto& r : run(raw, flows)) CHECK(r == m);
}

TEST_CASE("propagate_masks: history ratio threshold") {
  // Frame 3 compares the warped history of frames 0..2 against max(3-1,1) = 2.
  // Pixel A was kept in frames 0 and 1 (ratio 1), pixel B only in frame 0 (ratio 0.5),
  // pixel C never (ratio 0).
  const int w = 4, h = 1;
  std::vector<MaskU8> raw{mask_with(w, h, {{0, 0}, {1, 0}}), mask_with(w, h, {{0, 0}}), mask_with(w, h, {}),
                          mask_with(w, h, {{0, 0}, {1, 0}, {2, 0}})};
  std::vector<FlowField> flows{FlowField{}};
  for (int i = 1; i < 4; ++i) flows.push_back(zero_flow(i, w, h));
  const auto out = run(raw, flows);
  CHECK(out[3].at(0, 0) == 1);
  CHECK(out[3].at(1, 0) == 1);  // ratio 0.5 >= 0.5
  CHECK(out[3].at(2, 0) == 0);

  // Six frames: at frame 5 the divisor is 4, so two kept frames give 0.5 and one gives 0.25.
  std::vector<MaskU8> raw6{mask_with(w, h, {{0, 0}, {1, 0}}), mask_with(w, h, {{0, 0}}), mask_with(w, h, {}),
                           mask_with(w, h, {}), mask_with(w, h, {}), mask_with(w, h, {{0, 0}, {1, 0}})};
  std::vector<FlowField> flows6{FlowField{}};
  for (int i = 1; i < 6; ++i) flows6.push_back(zero_flow(i, w, h));
  const auto out6 = run(raw6, flows6);
  CHECK(out6[5].at(0, 0) == 1);
  CHECK(out6[5].at(1, 0) == 0);

  MaskConfig loose;
  loose.history_threshold = 0.25;
  CHECK(run(raw6, flows6, {}, loose)[5].at(1, 0) == 1);
}

TEST_CASE("propagate_masks: missing flow is reported with the frame") {
  std::vector<MaskU8> raw(3, mask_with(2, 2, {}));
  std::vector<const FlowField*> ptrs{nullptr, nullptr, nullptr};
  CHECK_THROWS_WITH_AS(propagate_masks(raw, ptrs, {}, MaskConfig{}), doctest::Contains("1->0"), Error);
}

TEST_CASE("fuse_segments: overlap boundary and whole-segment output") {
  LabelMap seg(20, 10, 1, 0);
  for (int y = 0; y < 10; ++y)
    for (int x = 10; x < 20; ++x) seg.at(x, y) = 7;  // label 7 covers exactly 100 pixels
  MaskU8 m(20, 10, 1);
  int placed = 0;
  for (int y = 0; y < 10 && placed < 10; ++y)
    for (int x = 10; x < 20 && placed < 10; ++x, ++placed) m.at(x, y) = 1;
  MaskU8 out = fuse_segments(m, seg, 0.10);
  for (int y = 0; y < 10; ++y)
    for (int x = 10; x < 20; ++x) CHECK(out.at(x, y) == 0);
  m.at(15, 5) = 1;  // 11 of 100
  out = fuse_segments(m, seg, 0.10);
  for (int y = 0; y < 10; ++y) {
    for (int x = 10; x < 20; ++x) CHECK(out.at(x, y) == 1);
    for (int x = 0; x < 10; ++x) CHECK(out.at(x, y) == 0);
  }

  MaskU8 inside(20, 10, 1);
  for (int y = 0; y < 10; ++y)
    for (int x = 10; x < 20; ++x) inside.at(x, y) = 1;
  CHECK(fuse_segments(inside, seg, 0.10) == inside);
  CHECK(fuse_segments(MaskU8(20, 10, 1), seg, 0.10) == MaskU8(20, 10, 1));
  CHECK_THROWS_AS(fuse_segments(m, LabelMap(3, 3, 1), 0.1), Error);
}

TEST_CASE("mask config validation") {
  MaskConfig c;
  c.history_threshold = 1.5;
  CHECK_THROWS_AS(c.validate(), Error);
}
