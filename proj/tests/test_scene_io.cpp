#include <doctest.h>

#include <cstring>
#include <random>

#include <opencv2/imgcodecs.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "stview/scene_io.hpp"
#include "stview/synthetic.hpp"

using namespace stview;
namespace fs = std::filesystem;

namespace {

ErrorKind load_error(const fs::path& dir, std::string* message = nullptr) {
  try {
    (void)load_scene(dir);
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.kind();
  }
  FAIL("load_scene accepted a corrupted bundle");
  return ErrorKind::kIo;
}

}  // namespace

TEST_CASE("raster: 1x1 zero file layout") {
  fixture::TempDir tmp("raster");
  write_raster(tmp / "z.pgdv", RasterKind::kDepth, ImageF(1, 1, 1, 0.0f));
  const auto bytes = fixture::read_bytes(tmp / "z.pgdv");
  const std::string expect = std::string("PGDV1\ndepth 1 1 1\n") + std::string(4, '\0');
  CHECK(std::string(bytes.begin(), bytes.end()) == expect);
}

TEST_CASE("raster: little-endian payload") {
  fixture::TempDir tmp("raster");
  write_raster(tmp / "one.pgdv", RasterKind::kFeat, ImageF(1, 1, 1, 1.0f));
  const auto bytes = fixture::read_bytes(tmp / "one.pgdv");
  // 1.0f is 0x3f800000
  const std::vector<unsigned char> tail(bytes.end() - 4, bytes.end());
  CHECK(tail == std::vector<unsigned char>{0x00, 0x00, 0x80, 0x3f});
}

TEST_CASE("raster: random 17x9x2 round trip is bitwise") {
  fixture::TempDir tmp("raster");
  std::mt19937 rng(5);
  std::uniform_int_distribution<std::uint32_t> bits;
  ImageF r(17, 9, 2);
  for (float& v : r.data()) {
    std::uint32_t b;
    do b = bits(rng);
    while ((b & 0x7f800000u) == 0x7f800000u);  // skip NaN/Inf patterns
    std::memcpy(&v, &b, 4);
  }
  write_raster(tmp / "r.pgdv", RasterKind::kFlow, r);
  const ImageF back = read_raster(tmp / "r.pgdv", RasterKind::kFlow);
  CHECK(std::memcmp(back.data().data(), r.data().data(), r.data().size_bytes()) == 0);
  RasterKind kind;
  (void)read_raster(tmp / "r.pgdv", &kind);
  CHECK(kind == RasterKind::kFlow);
}

TEST_CASE("raster: validation errors") {
  fixture::TempDir tmp("raster");
  ImageF flow(2, 2, 2, 0.0f);
  flow.at(1, 1, 0) = std::nanf("");
  CHECK_THROWS_AS(write_raster(tmp / "f.pgdv", RasterKind::kFlow, flow), Error);

  write_raster(tmp / "d.pgdv", RasterKind::kDepth, ImageF(3, 3, 1, 2.0f));
  auto bytes = fixture::read_bytes(tmp / "d.pgdv");
  auto corrupt = bytes;
  corrupt[0] = 'X';
  fixture::write_bytes(tmp / "bad.pgdv", corrupt);
  try {
    (void)read_raster(tmp / "bad.pgdv", RasterKind::kDepth);
    FAIL("accepted bad magic");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kBadMagic);
    CHECK(std::string(e.what()).find("bad.pgdv") != std::string::npos);
  }
  corrupt = bytes;
  corrupt.resize(corrupt.size() - 3);
  fixture::write_bytes(tmp / "short.pgdv", corrupt);
  CHECK_THROWS_WITH_AS(read_raster(tmp / "short.pgdv", RasterKind::kDepth), doctest::Contains("short.pgdv"), Error);
  try {
    (void)read_raster(tmp / "d.pgdv", RasterKind::kFlow);
    FAIL("accepted wrong kind");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kHeaderMismatch);
  }
}

TEST_CASE("png: rgb, mask and label round trips") {
  fixture::TempDir tmp("png");
  ImageF rgb(5, 4, 3);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x)
      for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = static_cast<float>(((x * 37 + y * 11 + c * 5) % 256) / 255.0);
  write_rgb_png(tmp / "a.png", rgb);
  CHECK(read_rgb_png(tmp / "a.png") == rgb);

  MaskU8 m(5, 4, 1);
  m.at(2, 1) = 1;
  write_mask_png(tmp / "m.png", m);
  CHECK(read_mask_png(tmp / "m.png") == m);

  LabelMap labels(5, 4, 1);
  labels.at(4, 3) = 65535;
  labels.at(0, 0) = 300;
  write_label_png(tmp / "l.png", labels);
  CHECK(read_label_png(tmp / "l.png") == labels);
}

TEST_CASE("depth alignment") {
  const std::vector<double> p{1, 2, 3, 4, 5};
  const ScaleShift id = align_depth_scale_shift(p, p);
  CHECK(id.scale == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(id.shift) < 1e-12);

  std::vector<double> r;
  for (double v : p) r.push_back(2 * v + 3);
  const ScaleShift aff = align_depth_scale_shift(p, r);
  CHECK(std::abs(aff.scale - 2) < 1e-9);
  CHECK(std::abs(aff.shift - 3) < 1e-9);

  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(0.5, 20), n(-0.3, 0.3);
  std::vector<double> pred, ref;
  for (int i = 0; i < 500; ++i) {
    pred.push_back(u(rng));
    ref.push_back(1.7 * pred.back() - 0.4 + n(rng));
  }
  const ScaleShift fit = align_depth_scale_shift(pred, ref);
  const auto [s, t] = oracle::normal_equations(pred, ref);
  CHECK(std::abs(fit.scale - s) < 1e-9);
  CHECK(std::abs(fit.shift - t) < 1e-9);

  auto residual = [&](double a, double b) {
    double e = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) e += (a * pred[i] + b - ref[i]) * (a * pred[i] + b - ref[i]);
    return e;
  };
  const double best = residual(fit.scale, fit.shift);
  std::normal_distribution<double> g(0, 0.05);
  bool optimal = true;
  for (int i = 0; i < 10000; ++i)
    if (residual(fit.scale + g(rng), fit.shift + g(rng)) < best) optimal = false;
  CHECK(optimal);

  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(align_depth_scale_shift(one, one), Error);
  const std::vector<double> flat{2, 2, 2};
  CHECK_THROWS_AS(align_depth_scale_shift(flat, std::span(p).subspan(0, 3)), Error);

  ImageF depth(2, 1, 1, 1.0f);
  depth.at(1, 0) = std::nanf("");
  apply_scale_shift(depth, {2, 1});
  CHECK(depth.at(0, 0) == 3.0f);
  CHECK(std::isnan(depth.at(1, 0)));
}

TEST_CASE("scene: synthetic bundle loads and round-trips") {
  fixture::TempDir tmp("scene");
  const SyntheticConfig cfg = fixture::small_synthetic();
  write_synthetic(tmp / "a", cfg);
  const Scene scene = load_scene(tmp / "a");
  CHECK(scene.size() == 4);
  CHECK(scene.flows.size() == 6);
  for (int i = 0; i + 1 < 4; ++i) {
    CHECK(scene.has_flow(i, i + 1));
    CHECK(scene.has_flow(i + 1, i));
  }
  REQUIRE(scene.tracks.has_value());
  CHECK(scene.segments.size() == 4);
  CHECK_THROWS_AS((void)scene.flow(0, 3), Error);

  save_scene(tmp / "b", scene);
  for (const auto& entry : fs::recursive_directory_iterator(tmp / "a")) {
    if (entry.path().extension() != ".pgdv") continue;
    const fs::path rel = fs::relative(entry.path(), tmp / "a");
    INFO(rel.string());
    CHECK(fixture::read_bytes(entry.path()) == fixture::read_bytes(tmp / "b" / rel));
  }
  const Scene again = load_scene(tmp / "b");
  CHECK(again.frames[2].image == scene.frames[2].image);
  CHECK(again.frames[2].dynamic_mask == scene.frames[2].dynamic_mask);
  CHECK(again.tracks->tracks.size() == scene.tracks->tracks.size());
}

TEST_CASE("scene: corrupted bundle corpus") {
  fixture::TempDir tmp("corpus");
  const SyntheticConfig cfg = fixture::small_synthetic();
  write_synthetic(tmp / "base", cfg);
  auto variant = [&](const std::string& name) {
    const fs::path dir = tmp / name;
    fs::copy(tmp / "base", dir, fs::copy_options::recursive);
    return dir;
  };
  std::string msg;

  {
    const fs::path d = variant("no_cameras");
    fs::remove(d / "cameras.json");
    CHECK(load_error(d, &msg) == ErrorKind::kMissingFile);
    CHECK(msg.find("cameras.json") != std::string::npos);
  }
  {
    const fs::path d = variant("no_rgb");
    fs::remove(d / "rgb" / "00002.png");
    CHECK(load_error(d, &msg) == ErrorKind::kMissingFile);
    CHECK(msg.find("00002.png") != std::string::npos);
  }
  {
    const fs::path d = variant("small_depth");
    write_raster(d / "depth" / "00003.pgdv", RasterKind::kDepth, ImageF(32, 32, 1, 5.0f));
    CHECK(load_error(d, &msg) == ErrorKind::kDimensionMismatch);
    CHECK(msg.find("frame 3") != std::string::npos);
  }
  {
    const fs::path d = variant("bad_magic");
    auto b = fixture::read_bytes(d / "depth" / "00001.pgdv");
    b[1] = 'Q';
    fixture::write_bytes(d / "depth" / "00001.pgdv", b);
    CHECK(load_error(d, &msg) == ErrorKind::kBadMagic);
    CHECK(msg.find("00001.pgdv") != std::string::npos);
  }
  {
    const fs::path d = variant("truncated");
    auto b = fixture::read_bytes(d / "flow" / "00001_00002.pgdv");
    b.resize(b.size() / 2);
    fixture::write_bytes(d / "flow" / "00001_00002.pgdv", b);
    CHECK(load_error(d, &msg) == ErrorKind::kTruncated);
    CHECK(msg.find("00001_00002.pgdv") != std::string::npos);
  }
  {
    const fs::path d = variant("wrong_kind");
    fs::copy_file(d / "flow" / "00000_00001.pgdv", d / "depth" / "00000.pgdv",
                  fs::copy_options::overwrite_existing);
    CHECK(load_error(d, &msg) == ErrorKind::kHeaderMismatch);
    CHECK(msg.find("00000.pgdv") != std::string::npos);
  }
  {
    const fs::path d = variant("time_order");
    auto recs = read_cameras_json(d / "cameras.json");
    std::swap(recs[1].time, recs[2].time);
    write_cameras_json(d / "cameras.json", recs);
    CHECK(load_error(d, &msg) == ErrorKind::kNonMonotonicTime);
    CHECK(msg.find('2') != std::string::npos);
  }
  {
    const fs::path d = variant("no_backward");
    fs::remove(d / "flow" / "00002_00001.pgdv");
    CHECK(load_error(d, &msg) == ErrorKind::kMissingFlow);
    CHECK(msg.find("00002_00001") != std::string::npos);
  }
  {
    const fs::path d = variant("mask_value");
    cv::Mat gray(cfg.height, cfg.width, CV_8UC1, cv::Scalar(0));
    gray.at<std::uint8_t>(5, 7) = 128;
    cv::imwrite((d / "mask" / "00000.png").string(), gray);
    CHECK(load_error(d, &msg) == ErrorKind::kBadMaskValue);
    CHECK(msg.find("00000.png") != std::string::npos);
  }
  {
    const fs::path d = variant("flow_size");
    write_raster(d / "flow" / "00000_00001.pgdv", RasterKind::kFlow, ImageF(8, 8, 2, 0.0f));
    CHECK(load_error(d, &msg) == ErrorKind::kDimensionMismatch);
    CHECK(msg.find("00000_00001") != std::string::npos);
  }
  {
    const fs::path d = variant("negative_depth");
    ImageF depth = read_raster(d / "depth" / "00001.pgdv", RasterKind::kDepth);
    depth.at(3, 3) = -1.0f;
    write_raster(d / "depth" / "00001.pgdv", RasterKind::kDepth, depth);
    CHECK(load_error(d, &msg) == ErrorKind::kInvalidArgument);
    CHECK(msg.find("frame 1") != std::string::npos);
  }
  {
    const fs::path d = variant("bad_camera");
    std::ofstream(d / "cameras.json") << "[{\"time\": 0, \"K\": [1,0,0], \"E\": [], \"width\": 4, \"height\": 4}]";
    CHECK(load_error(d, &msg) == ErrorKind::kHeaderMismatch);
    CHECK(msg.find("cameras.json") != std::string::npos);
  }
  {
    const fs::path d = variant("empty_dir");
    fs::remove_all(d);
    CHECK(load_error(d) == ErrorKind::kMissingFile);
  }
}
