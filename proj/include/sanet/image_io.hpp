#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sanet/mask.hpp"

namespace sanet {

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;  // row-major

  GrayImage() = default;
  GrayImage(int w, int h) : width(w), height(h) {
    if (w <= 0 || h <= 0) throw DimensionError("GrayImage: extents must be positive");
    pixels.assign(static_cast<size_t>(w) * h, 0);
  }
  uint8_t at(int y, int x) const {
    return pixels[static_cast<size_t>(y) * width + x];
  }
  uint8_t& at(int y, int x) {
    return pixels[static_cast<size_t>(y) * width + x];
  }
  bool operator==(const GrayImage&) const = default;
};

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;  // row-major, 3 bytes per pixel

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h) {
    pixels.assign(static_cast<size_t>(w) * h * 3, 0);
  }
};

/// Mask/overlay colors: background black; classes 1-4 blue, green, red,
/// yellow.
constexpr std::array<std::array<uint8_t, 3>, 5> kClassPalette = {{
    {0, 0, 0},
    {0, 0, 255},
    {0, 255, 0},
    {255, 0, 0},
    {255, 255, 0},
}};

void write_png_gray(const std::string& path, const GrayImage& image);
GrayImage read_png_gray(const std::string& path);

/// Writes the mask as an 8-bit palette PNG whose stored byte values are
/// exactly the class indices.
void write_png_mask(const std::string& path, const ClassMask& mask);
/// Reads a mask from a palette PNG (raw indices) or an 8-bit gray PNG.
ClassMask read_png_mask(const std::string& path);

void write_png_rgb(const std::string& path, const RgbImage& image);

void write_pgm(const std::string& path, const GrayImage& image);
GrayImage read_pgm(const std::string& path);

/// Colored mask blended over the image: lane pixels take their palette
/// color, background keeps the grayscale value.
RgbImage make_overlay(const GrayImage& image, const ClassMask& mask);

}  // namespace sanet
