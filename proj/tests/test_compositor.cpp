#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "stview/compositor.hpp"

using namespace stview;

namespace {

ImageF random_image(std::mt19937& rng, int w, int h) {
  std::uniform_real_distribution<float> u(0, 1);
  ImageF img(w, h, 3);
  for (float& v : img.data()) v = u(rng);
  return img;
}

FrameMetrics with_psnr(const std::string& scene, double v) {
  FrameMetrics m;
  m.scene = scene;
  m.psnr_full = v;
  m.ssim_full = 1.0;
  return m;
}

}  // namespace

TEST_CASE("blend identities") {
  std::mt19937 rng(1);
  const ImageF s = random_image(rng, 12, 9), d = random_image(rng, 12, 9);
  const MaskU8 full(12, 9, 1, 1), none(12, 9, 1, 0);
  RenderOutput out = blend(s, full, d, none);
  CHECK(out.rgb == s);
  CHECK(out.hole_mask == none);
  out = blend(s, full, d, full);
  CHECK(out.rgb == d);
  CHECK(out.dyn_mask == full);

  MaskU8 checker(12, 9, 1), cov(12, 9, 1, 1);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 12; ++x) checker.at(x, y) = (x + y) % 2;
  cov.at(0, 0) = 0;  // (0,0) is static in the checkerboard, so it becomes a hole
  const Rgb bg(0.25, 0.5, 0.75);
  out = blend(s, cov, d, checker, bg);
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 12; ++x)
      for (int c = 0; c < 3; ++c) {
        const float expect = checker.at(x, y)  ? d.at(x, y, c)
                             : cov.at(x, y)    ? s.at(x, y, c)
                                               : static_cast<float>(bg[c]);
        CHECK(out.rgb.at(x, y, c) == expect);
      }
  CHECK(out.hole_mask.at(0, 0) == 1);
  CHECK(std::accumulate(out.hole_mask.data().begin(), out.hole_mask.data().end(), 0) == 1);
  CHECK_THROWS_AS(blend(s, full, ImageF(3, 3, 3), none), Error);
}

TEST_CASE("psnr") {
  std::mt19937 rng(2);
  const ImageF a = random_image(rng, 16, 16);
  CHECK(psnr(a, a) == kPsnrCap);
  ImageF zero(8, 8, 3, 0.0f), tenth(8, 8, 3, 0.1f);
  CHECK(std::abs(psnr(zero, tenth) - 20.0) < 1e-5);

  // Half mask equals PSNR of the cropped half.
  const ImageF b = random_image(rng, 16, 16);
  MaskU8 left(16, 16, 1);
  ImageF ca(8, 16, 3), cb(8, 16, 3);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 8; ++x) {
      left.at(x, y) = 1;
      for (int c = 0; c < 3; ++c) {
        ca.at(x, y, c) = a.at(x, y, c);
        cb.at(x, y, c) = b.at(x, y, c);
      }
    }
  CHECK(psnr(a, b, &left) == doctest::Approx(psnr(ca, cb)).epsilon(1e-12));
  const MaskU8 empty(16, 16, 1);
  CHECK_THROWS_AS(psnr(a, b, &empty), Error);
}

TEST_CASE("ssim") {
  std::mt19937 rng(3);
  const ImageF a = random_image(rng, 20, 20);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-9));

  const ImageF c1(20, 20, 3, 0.2f), c2(20, 20, 3, 0.7f);
  const double expect = oracle::ssim_constants(0.2f, 0.7f);
  CHECK(std::abs(ssim(c1, c2) - expect) < 1e-6);
  const ImageF map = ssim_map(c1, c2);
  for (float v : map.data()) CHECK(std::abs(v - expect) < 1e-6);

  const ImageF b = random_image(rng, 20, 20);
  const MaskU8 full(20, 20, 1, 1);
  CHECK(ssim(a, b, &full) == doctest::Approx(ssim(a, b)).epsilon(1e-12));
  CHECK(ssim(a, b) < 0.5);
}

TEST_CASE("aggregation is a mean over scene means") {
  std::vector<FrameMetrics> frames;
  for (int i = 0; i < 10; ++i) frames.push_back(with_psnr("a", i % 2 ? 31.0 : 29.0));
  frames.push_back(with_psnr("b", 19.0));
  frames.push_back(with_psnr("b", 21.0));
  const MetricReport r = aggregate(frames);
  CHECK(r.overall.at("psnr") == doctest::Approx(25.0).epsilon(1e-12));
  REQUIRE(r.scenes.size() == 2);
  CHECK(r.scenes[0].means.at("psnr") == doctest::Approx(30.0));
  CHECK(r.scenes[1].means.at("psnr") == doctest::Approx(20.0));

  const MetricReport one = aggregate({with_psnr("x", 12.0), with_psnr("x", 14.0)});
  CHECK(one.overall.at("psnr") == doctest::Approx(13.0));
  CHECK_THROWS_AS(aggregate({}), Error);
}

TEST_CASE("evaluate_frame: regions and coverage") {
  std::mt19937 rng(4);
  const ImageF truth = random_image(rng, 10, 10);
  ImageF rendered = truth;
  MaskU8 dyn(10, 10, 1);
  for (int x = 0; x < 10; ++x) dyn.at(x, 0) = 1;
  for (int c = 0; c < 3; ++c) rendered.at(5, 0, c) += 0.5f;  // error inside the dynamic region
  const FrameMetrics m = evaluate_frame("s", "f", rendered, truth, &dyn, nullptr);
  REQUIRE(m.psnr_dynamic);
  REQUIRE(m.psnr_static);
  CHECK(*m.psnr_static == kPsnrCap);
  // Dynamic region: 10 pixels, one off by 0.5 in every channel -> mse = 0.025.
  CHECK(std::abs(*m.psnr_dynamic - 10 * std::log10(1 / 0.025)) < 1e-4);
  CHECK(std::abs(m.psnr_full - 10 * std::log10(1 / 0.0025)) < 1e-4);

  MaskU8 cov(10, 10, 1, 1);
  cov.at(5, 0) = 0;
  const FrameMetrics c = evaluate_frame("s", "f", rendered, truth, &dyn, &cov);
  CHECK(c.psnr_full == kPsnrCap);
  CHECK(*c.psnr_dynamic == kPsnrCap);
}
