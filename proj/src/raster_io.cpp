#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "stview/scene_io.hpp"

namespace stview {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kMagic = "PGDV1\n";

std::string describe(const fs::path& path) { return "'" + path.string() + "'"; }

std::optional<RasterKind> parse_kind(const std::string& token) {
  if (token == "depth") return RasterKind::kDepth;
  if (token == "flow") return RasterKind::kFlow;
  if (token == "feat") return RasterKind::kFeat;
  return std::nullopt;
}

bool channels_allowed(RasterKind kind, int channels) {
  switch (kind) {
    case RasterKind::kDepth: return channels == 1;
    case RasterKind::kFlow: return channels == 2;
    case RasterKind::kFeat: return channels >= 1 && channels <= 3;
  }
  return false;
}

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

cv::Mat read_image_any(const fs::path& path) {
  if (!fs::exists(path)) {
    throw Error(ErrorKind::kMissingFile, "missing file " + describe(path));
  }
  cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (mat.empty()) {
    throw Error(ErrorKind::kIo, "cannot decode image " + describe(path));
  }
  return mat;
}

void write_png(const fs::path& path, const cv::Mat& mat) {
  ensure_parent(path);
  const std::vector<int> params = {cv::IMWRITE_PNG_COMPRESSION, 6};
  if (!cv::imwrite(path.string(), mat, params)) {
    throw Error(ErrorKind::kIo, "cannot write image " + describe(path));
  }
}

}  // namespace

std::string_view to_string(RasterKind kind) {
  switch (kind) {
    case RasterKind::kDepth: return "depth";
    case RasterKind::kFlow: return "flow";
    case RasterKind::kFeat: return "feat";
  }
  return "feat";
}

void write_raster(const fs::path& path, RasterKind kind, const ImageF& raster) {
  if (raster.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "write_raster: empty raster for " + describe(path));
  }
  if (!channels_allowed(kind, raster.channels())) {
    throw Error(ErrorKind::kInvalidArgument,
                "write_raster: " + std::string(to_string(kind)) + " raster cannot have " +
                    std::to_string(raster.channels()) + " channels (" + describe(path) + ")");
  }
  if (kind == RasterKind::kFlow) {
    for (float v : raster.data()) {
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::kInvalidArgument,
                    "write_raster: non-finite flow value for " + describe(path));
      }
    }
  }
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot open " + describe(path) + " for writing");
  std::ostringstream header;
  header << kMagic << to_string(kind) << ' ' << raster.width() << ' ' << raster.height() << ' '
         << raster.channels() << '\n';
  const std::string head = header.str();
  out.write(head.data(), static_cast<std::streamsize>(head.size()));

  std::vector<char> payload(raster.data().size() * 4);
  std::size_t offset = 0;
  for (float v : raster.data()) {
    const auto bits = std::bit_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) payload[offset++] = static_cast<char>((bits >> (8 * b)) & 0xFFu);
  }
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw Error(ErrorKind::kIo, "short write to " + describe(path));
}

ImageF read_raster(const fs::path& path, RasterKind* kind_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kMissingFile, "missing file " + describe(path));
  std::string magic(kMagic.size(), '\0');
  in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  if (!in || magic != kMagic) {
    throw Error(ErrorKind::kBadMagic, "bad magic in " + describe(path));
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::kTruncated, "missing header line in " + describe(path));
  }
  std::istringstream header(line);
  std::string kind_token;
  int width = 0, height = 0, channels = 0;
  header >> kind_token >> width >> height >> channels;
  std::string trailing;
  const auto kind = parse_kind(kind_token);
  if (header.fail() || (header >> trailing) || !kind || width <= 0 || height <= 0 ||
      !channels_allowed(*kind, channels)) {
    throw Error(ErrorKind::kHeaderMismatch, "malformed header '" + line + "' in " + describe(path));
  }
  ImageF raster(width, height, channels);
  const std::size_t count = raster.data().size();
  std::vector<unsigned char> payload(count * 4);
  in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
  if (static_cast<std::size_t>(in.gcount()) != payload.size()) {
    throw Error(ErrorKind::kTruncated, "truncated payload in " + describe(path));
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw Error(ErrorKind::kHeaderMismatch, "payload longer than header declares in " + describe(path));
  }
  auto values = raster.data();
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(payload[i * 4 + b]) << (8 * b);
    values[i] = std::bit_cast<float>(bits);
  }
  if (kind_out) *kind_out = *kind;
  return raster;
}

ImageF read_raster(const fs::path& path, RasterKind expected_kind) {
  RasterKind kind{};
  ImageF raster = read_raster(path, &kind);
  if (kind != expected_kind) {
    throw Error(ErrorKind::kHeaderMismatch, "expected " + std::string(to_string(expected_kind)) +
                                                " raster, found " + std::string(to_string(kind)) +
                                                " in " + describe(path));
  }
  return raster;
}

ImageF read_rgb_png(const fs::path& path) {
  const cv::Mat mat = read_image_any(path);
  if (mat.depth() != CV_8U || mat.channels() != 3) {
    throw Error(ErrorKind::kHeaderMismatch, "expected 8-bit RGB PNG " + describe(path));
  }
  ImageF rgb(mat.cols, mat.rows, 3);
  for (int y = 0; y < mat.rows; ++y) {
    const auto* row = mat.ptr<cv::Vec3b>(y);
    for (int x = 0; x < mat.cols; ++x) {
      // OpenCV stores BGR.
      for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = row[x][2 - c] / 255.0f;
    }
  }
  return rgb;
}

void write_rgb_png(const fs::path& path, const ImageF& rgb) {
  if (rgb.channels() != 3) {
    throw Error(ErrorKind::kInvalidArgument, "write_rgb_png: need 3 channels for " + describe(path));
  }
  cv::Mat mat(rgb.height(), rgb.width(), CV_8UC3);
  for (int y = 0; y < rgb.height(); ++y) {
    auto* row = mat.ptr<cv::Vec3b>(y);
    for (int x = 0; x < rgb.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(static_cast<double>(rgb.at(x, y, c)), 0.0, 1.0);
        row[x][2 - c] = static_cast<unsigned char>(std::lround(v * 255.0));
      }
    }
  }
  write_png(path, mat);
}

MaskU8 read_mask_png(const fs::path& path) {
  const cv::Mat mat = read_image_any(path);
  if (mat.depth() != CV_8U || mat.channels() != 1) {
    throw Error(ErrorKind::kHeaderMismatch, "expected 8-bit grayscale mask " + describe(path));
  }
  MaskU8 mask(mat.cols, mat.rows, 1);
  for (int y = 0; y < mat.rows; ++y) {
    const auto* row = mat.ptr<unsigned char>(y);
    for (int x = 0; x < mat.cols; ++x) {
      if (row[x] != 0 && row[x] != 255) {
        throw Error(ErrorKind::kBadMaskValue, "mask value " + std::to_string(row[x]) + " at (" +
                                                  std::to_string(x) + "," + std::to_string(y) +
                                                  ") in " + describe(path));
      }
      mask.at(x, y) = row[x] ? 1 : 0;
    }
  }
  return mask;
}

void write_mask_png(const fs::path& path, const MaskU8& mask) {
  cv::Mat mat(mask.height(), mask.width(), CV_8UC1);
  for (int y = 0; y < mask.height(); ++y) {
    auto* row = mat.ptr<unsigned char>(y);
    for (int x = 0; x < mask.width(); ++x) row[x] = mask.at(x, y) ? 255 : 0;
  }
  write_png(path, mat);
}

LabelMap read_label_png(const fs::path& path) {
  const cv::Mat mat = read_image_any(path);
  if (mat.channels() != 1 || (mat.depth() != CV_16U && mat.depth() != CV_8U)) {
    throw Error(ErrorKind::kHeaderMismatch, "expected 16-bit label PNG " + describe(path));
  }
  cv::Mat wide;
  mat.convertTo(wide, CV_32S);
  LabelMap labels(mat.cols, mat.rows, 1);
  for (int y = 0; y < mat.rows; ++y) {
    const auto* row = wide.ptr<std::int32_t>(y);
    for (int x = 0; x < mat.cols; ++x) labels.at(x, y) = row[x];
  }
  return labels;
}

void write_label_png(const fs::path& path, const LabelMap& labels) {
  cv::Mat mat(labels.height(), labels.width(), CV_16UC1);
  for (int y = 0; y < labels.height(); ++y) {
    auto* row = mat.ptr<std::uint16_t>(y);
    for (int x = 0; x < labels.width(); ++x) {
      const int v = labels.at(x, y);
      if (v < 0 || v > 65535) {
        throw Error(ErrorKind::kInvalidArgument, "label out of 16-bit range for " + describe(path));
      }
      row[x] = static_cast<std::uint16_t>(v);
    }
  }
  write_png(path, mat);
}

}  // namespace stview
