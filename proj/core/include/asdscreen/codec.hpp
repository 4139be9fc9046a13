#pragma once

#include <filesystem>

#include "asdscreen/image.hpp"

namespace asdscreen {

// PNG/JPEG decoding to 8-bit RGB. Grayscale and palette inputs are expanded
// to RGB; alpha is dropped. Any size is accepted; resizing happens later.
RawImage read_image(const std::filesystem::path& path);
RawImage read_png(const std::filesystem::path& path);
RawImage read_jpeg(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const RawImage& img);
void write_jpeg(const std::filesystem::path& path, const RawImage& img, int quality = 90);

// True for the extensions the corpus scanner treats as image frames.
bool is_image_file(const std::filesystem::path& path);

}  // namespace asdscreen
