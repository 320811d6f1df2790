#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "trackanno/core/geometry.hpp"

namespace trackanno {

/// 8-bit raster with an interleaved RGB plane and a derived luma plane.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> gray;  // width * height
  std::vector<std::uint8_t> rgb;   // width * height * 3

  bool empty() const { return width == 0 || height == 0; }
  std::uint8_t gray_at(int x, int y) const { return gray[static_cast<std::size_t>(y) * width + x]; }

  static Image from_gray(int width, int height, std::vector<std::uint8_t> gray);
  static Image from_rgb(int width, int height, std::vector<std::uint8_t> rgb);

  /// Frame extent as a box anchored at the origin.
  BoundingBox bounds() const { return {0.0, 0.0, static_cast<double>(width), static_cast<double>(height)}; }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Rec.601 luma, rounded to nearest.
std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b);

Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);
std::vector<std::uint8_t> encode_png(const Image& image);
Image decode_png(const std::vector<std::uint8_t>& bytes);

/// Integer pixel rectangle [x0, x1) x [y0, y1) copied out of `image`.
Image crop(const Image& image, int x0, int y0, int x1, int y1);

}  // namespace trackanno
