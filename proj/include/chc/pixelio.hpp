#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "chc/types.hpp"

namespace chc {

/// 8-bit interleaved RGB, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* pixel(int x, int y) { return data.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* pixel(int x, int y) const {
    return data.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  bool valid() const {
    return width >= 1 && height >= 1 && data.size() == static_cast<std::size_t>(width) * height * 3;
  }
  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Luma in [0,1] plus chroma in [-0.5,0.5], full-range BT.601.
struct PlanarImage {
  Plane y;
  Chroma chroma;

  int width() const { return static_cast<int>(y.cols()); }
  int height() const { return static_cast<int>(y.rows()); }
};

enum class ImageFormat { Png, Ppm };

/// Picks the format from the file extension (.png, .ppm, .pgm).
ImageFormat format_from_path(const std::filesystem::path& path);

RgbImage read_image(const std::filesystem::path& path, ImageFormat format);
RgbImage read_image(const std::filesystem::path& path);
void write_image(const RgbImage& img, const std::filesystem::path& path, ImageFormat format);
void write_image(const RgbImage& img, const std::filesystem::path& path);

/// Writes a single-channel 8-bit PNG (or P5 PGM) of the luma plane.
void write_gray(const Plane& luma, const std::filesystem::path& path);

/// Reads any supported image and returns its luma plane.
Plane read_gray(const std::filesystem::path& path);

PlanarImage rgb_to_ycbcr(const RgbImage& img);
RgbImage ycbcr_to_rgb(const PlanarImage& img);
RgbImage ycbcr_to_rgb(const Plane& luma, const Chroma& chroma);

/// Luma rounded to the 8-bit grid, i.e. exactly what a grayscale PNG stores.
Plane quantize_luma(const Plane& luma);

}  // namespace chc
