#include "asdscreen/image.hpp"

#include <cmath>
#include <string>

#include "asdscreen/errors.hpp"

namespace asdscreen {

ImageTensor ImageTensor::filled(int height, int width, double value) {
  ImageTensor t;
  t.height = height;
  t.width = width;
  t.data.assign(static_cast<size_t>(height) * width * kChannels, value);
  return t;
}

ImageTensor normalize(const RawImage& raw) {
  ImageTensor out;
  out.height = raw.height;
  out.width = raw.width;
  out.data.resize(raw.data.size());
  for (size_t i = 0; i < raw.data.size(); ++i) {
    out.data[i] = static_cast<double>(raw.data[i]) / 255.0;
  }
  return out;
}

ImageTensor normalize(const std::vector<double>& raw, int height, int width) {
  if (static_cast<size_t>(height) * width * ImageTensor::kChannels != raw.size()) {
    throw ShapeError("normalize: expected " +
                     std::to_string(static_cast<size_t>(height) * width * 3) +
                     " values, got " + std::to_string(raw.size()));
  }
  ImageTensor out;
  out.height = height;
  out.width = width;
  out.data.resize(raw.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    if (!(raw[i] >= 0.0 && raw[i] <= 255.0)) {
      throw ValueError("normalize: value " + std::to_string(raw[i]) + " at index " +
                       std::to_string(i) + " outside [0, 255]");
    }
    out.data[i] = raw[i] / 255.0;
  }
  return out;
}

RawImage to_raw(const ImageTensor& img) {
  RawImage out;
  out.height = img.height;
  out.width = img.width;
  out.data.resize(img.data.size());
  for (size_t i = 0; i < img.data.size(); ++i) {
    double v = img.data[i];
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
    out.data[i] = static_cast<uint8_t>(std::lround(v * 255.0));
  }
  return out;
}

}  // namespace asdscreen
