#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "erobot/core.hpp"

namespace erobot {

/// RGB image with components in [0, 1]. `pixels` has one row per pixel in
/// row-major order (pixel (r, c) is row r * width + c) and three columns.
struct ImageTensor {
  int width = 0;
  int height = 0;
  Matrix pixels;

  void validate() const;
  static ImageTensor filled(int width, int height, double r, double g, double b);
};

// 8-bit PNG. Any input colour type is converted to RGB (alpha is dropped
// after compositing on black). Components map as v / 255 on read and
// floor(v * 255 + 0.5) on write.
ImageTensor read_png(const std::string& path);
void write_png(const std::string& path, const ImageTensor& image);
std::vector<std::uint8_t> encode_png(const ImageTensor& image);
ImageTensor decode_png(const std::vector<std::uint8_t>& bytes);

}  // namespace erobot
