#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace asdscreen {

// 8-bit RGB image as decoded from disk. Row-major, 3 bytes per pixel.
struct RawImage {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> data;

  uint8_t at(int y, int x, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
};

// Unit-interval RGB tensor, the pipeline's common currency.
// Row-major [y][x][channel] layout, always 3 channels.
struct ImageTensor {
  static constexpr int kChannels = 3;

  int height = 0;
  int width = 0;
  std::vector<double> data;

  static ImageTensor filled(int height, int width, double value);

  size_t index(int y, int x, int c) const {
    return (static_cast<size_t>(y) * width + x) * kChannels + c;
  }
  double& at(int y, int x, int c) { return data[index(y, x, c)]; }
  double at(int y, int x, int c) const { return data[index(y, x, c)]; }

  bool empty() const { return data.empty(); }
  bool same_shape(const ImageTensor& other) const {
    return height == other.height && width == other.width;
  }
};

// Scales 0-255 intensities into [0, 1].
ImageTensor normalize(const RawImage& raw);

// Real-valued variant; any value outside [0, 255] raises ValueError.
ImageTensor normalize(const std::vector<double>& raw, int height, int width);

// Inverse map back to 8-bit, rounding to nearest; used when materializing
// tensors as image files.
RawImage to_raw(const ImageTensor& img);

}  // namespace asdscreen
