#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace vista {

/// 8-bit RGB image, interleaved, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h * 3, 0) {}

  uint8_t* pixel(int x, int y) { return data.data() + (static_cast<size_t>(y) * width + x) * 3; }
  const uint8_t* pixel(int x, int y) const {
    return data.data() + (static_cast<size_t>(y) * width + x) * 3;
  }
};

/// Throws MissingInputError when the file is absent or cannot be decoded.
RgbImage read_image(const std::filesystem::path& path);

/// Format chosen from the extension (png, jpg, ppm, ...).
void write_image(const std::filesystem::path& path, const RgbImage& image);

}  // namespace vista
