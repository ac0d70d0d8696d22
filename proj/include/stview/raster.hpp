#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "stview/error.hpp"

namespace stview {

/// Dense row-major H×W×C raster with interleaved channels, top-left origin.
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height, int channels, T fill = T{})
      : width_(width), height_(height), channels_(channels) {
    if (width <= 0 || height <= 0 || channels <= 0) {
      throw Error(ErrorKind::kInvalidArgument, "raster dimensions must be positive");
    }
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * height_;
  }

  T& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  const T& at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  std::span<T> pixel(int x, int y) {
    return {data_.data() + index(x, y, 0), static_cast<std::size_t>(channels_)};
  }
  std::span<const T> pixel(int x, int y) const {
    return {data_.data() + index(x, y, 0), static_cast<std::size_t>(channels_)};
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }

  bool same_shape(int width, int height) const noexcept {
    return width_ == width && height_ == height;
  }
  template <typename U>
  bool same_shape(const Raster<U>& other) const noexcept {
    return same_shape(other.width(), other.height());
  }

  bool operator==(const Raster&) const = default;

 private:
  std::size_t index(int x, int y, int c) const noexcept {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<T> data_;
};

using ImageF = Raster<float>;
using MaskU8 = Raster<std::uint8_t>;
using LabelMap = Raster<std::int32_t>;

}  // namespace stview
