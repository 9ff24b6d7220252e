#include "chc/pixelio.hpp"

#include <png.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include "chc/error.hpp"

namespace chc {
namespace {

using FilePtr = std::unique_ptr<std::FILE, int (*)(std::FILE*)>;

// Full-range BT.601 forward matrix, rows (Y, Cb, Cr), columns (R, G, B).
const Eigen::Matrix3d& forward_matrix() {
  static const Eigen::Matrix3d m = (Eigen::Matrix3d() << 0.299, 0.587, 0.114,  //
                                    -0.168736, -0.331264, 0.5,                 //
                                    0.5, -0.418688, -0.081312)
                                       .finished();
  return m;
}

const Eigen::Matrix3d& inverse_matrix() {
  static const Eigen::Matrix3d inv = forward_matrix().inverse();
  return inv;
}

std::uint8_t to_byte(double v) {
  const double r = std::round(v * 255.0);  // half away from zero
  return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

// ---------------------------------------------------------------- PNM

int pnm_skip_ws(std::istream& in) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      return c;
    }
    c = in.get();
  }
  return c;
}

long pnm_read_uint(std::istream& in) {
  int c = pnm_skip_ws(in);
  if (c == EOF || !std::isdigit(c)) fail(ErrorCode::MalformedImage, "bad PNM header field");
  long v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    if (v > (1L << 30)) fail(ErrorCode::MalformedImage, "PNM header value too large");
    c = in.get();
  }
  if (c == EOF || !std::isspace(c)) fail(ErrorCode::MalformedImage, "PNM header not terminated");
  return v;
}

RgbImage read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  char magic[2] = {};
  if (!in.read(magic, 2) || magic[0] != 'P' || (magic[1] != '6' && magic[1] != '5'))
    fail(ErrorCode::MalformedImage, "not a binary PPM/PGM: " + path.string());
  const bool color = magic[1] == '6';
  const long w = pnm_read_uint(in);
  const long h = pnm_read_uint(in);
  const long maxval = pnm_read_uint(in);
  if (w < 1 || h < 1) fail(ErrorCode::MalformedImage, "empty PNM");
  if (maxval > 255) fail(ErrorCode::UnsupportedBitDepth, "PNM maxval > 255");
  if (maxval < 1) fail(ErrorCode::MalformedImage, "PNM maxval 0");

  const std::size_t n = static_cast<std::size_t>(w) * h * (color ? 3 : 1);
  std::vector<std::uint8_t> raw(n);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n)))
    fail(ErrorCode::MalformedImage, "truncated PNM data");

  RgbImage img(static_cast<int>(w), static_cast<int>(h));
  auto rescale = [maxval](std::uint8_t v) -> std::uint8_t {
    if (maxval == 255) return v;
    if (v > maxval) fail(ErrorCode::MalformedImage, "PNM sample exceeds maxval");
    return static_cast<std::uint8_t>(std::lround(v * 255.0 / maxval));
  };
  if (color) {
    std::transform(raw.begin(), raw.end(), img.data.begin(), rescale);
  } else {
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const auto v = rescale(raw[i]);
      img.data[3 * i] = img.data[3 * i + 1] = img.data[3 * i + 2] = v;
    }
  }
  return img;
}

void write_pnm(const std::filesystem::path& path, int w, int h, bool color,
               const std::uint8_t* bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out << (color ? "P6" : "P5") << '\n' << w << ' ' << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes),
            static_cast<std::streamsize>(static_cast<std::size_t>(w) * h * (color ? 3 : 1)));
  if (!out) fail(ErrorCode::IoError, "short write to " + path.string());
}

// ---------------------------------------------------------------- PNG

void png_error_fn(png_structp png, png_const_charp) { std::longjmp(png_jmpbuf(png), 1); }
void png_warning_fn(png_structp, png_const_charp) {}

RgbImage read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!fp) fail(ErrorCode::IoError, "cannot open " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    fail(ErrorCode::MalformedImage, "not a PNG: " + path.string());

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::IoError, "libpng init failed");
  }

  // Everything touched after setjmp lives outside the jump scope.
  RgbImage img;
  std::vector<png_bytep> rows;
  volatile int depth = 0;
  volatile bool ok = false;
  if (setjmp(png_jmpbuf(png)) == 0) {
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    depth = png_get_bit_depth(png, info);
    if (depth <= 8) {
      const int ctype = png_get_color_type(png, info);
      if (ctype == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
      if (ctype == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
      if (ctype == PNG_COLOR_TYPE_GRAY || ctype == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
      if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
      png_set_strip_alpha(png);
      png_read_update_info(png, info);
      img = RgbImage(static_cast<int>(png_get_image_width(png, info)),
                     static_cast<int>(png_get_image_height(png, info)));
      rows.resize(img.height);
      for (int y = 0; y < img.height; ++y) rows[y] = img.pixel(0, y);
      png_read_image(png, rows.data());
      png_read_end(png, nullptr);
      ok = true;
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (depth > 8) fail(ErrorCode::UnsupportedBitDepth, "16-bit PNG: " + path.string());
  if (!ok) fail(ErrorCode::MalformedImage, "corrupt PNG: " + path.string());
  return img;
}

void write_png(const std::filesystem::path& path, int w, int h, bool color, const std::uint8_t* bytes) {
  FilePtr fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) fail(ErrorCode::IoError, "cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::IoError, "libpng init failed");
  }
  const int channels = color ? 3 : 1;
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y)
    rows[y] = const_cast<png_bytep>(bytes + static_cast<std::size_t>(y) * w * channels);
  volatile bool ok = false;
  if (setjmp(png_jmpbuf(png)) == 0) {
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, w, h, 8, color ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    ok = true;
  }
  png_destroy_write_struct(&png, &info);
  if (!ok || std::fflush(fp.get()) != 0) fail(ErrorCode::IoError, "PNG write failed: " + path.string());
}

/// Writes to a sibling temp file and renames it over `path`.
template <typename Write>
void write_via_temp(const std::filesystem::path& path, Write&& write) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  try {
    write(tmp);
    std::filesystem::rename(tmp, path);
  } catch (...) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw;
  }
}

}  // namespace

ImageFormat format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") return ImageFormat::Ppm;
  return ImageFormat::Png;
}

RgbImage read_image(const std::filesystem::path& path, ImageFormat format) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::FileNotFound, path.string());
  return format == ImageFormat::Png ? read_png(path) : read_pnm(path);
}

RgbImage read_image(const std::filesystem::path& path) { return read_image(path, format_from_path(path)); }

void write_image(const RgbImage& img, const std::filesystem::path& path, ImageFormat format) {
  if (!img.valid()) fail(ErrorCode::IoError, "invalid image");
  write_via_temp(path, [&](const std::filesystem::path& tmp) {
    if (format == ImageFormat::Png)
      write_png(tmp, img.width, img.height, true, img.data.data());
    else
      write_pnm(tmp, img.width, img.height, true, img.data.data());
  });
}

void write_image(const RgbImage& img, const std::filesystem::path& path) {
  write_image(img, path, format_from_path(path));
}

void write_gray(const Plane& luma, const std::filesystem::path& path) {
  const int w = static_cast<int>(luma.cols());
  const int h = static_cast<int>(luma.rows());
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) bytes[static_cast<std::size_t>(y) * w + x] = to_byte(luma(y, x));
  const ImageFormat format = format_from_path(path);
  write_via_temp(path, [&](const std::filesystem::path& tmp) {
    if (format == ImageFormat::Png)
      write_png(tmp, w, h, false, bytes.data());
    else
      write_pnm(tmp, w, h, false, bytes.data());
  });
}

Plane read_gray(const std::filesystem::path& path) { return rgb_to_ycbcr(read_image(path)).y; }

PlanarImage rgb_to_ycbcr(const RgbImage& img) {
  PlanarImage out;
  out.y.resize(img.height, img.width);
  out.chroma.cb.resize(img.height, img.width);
  out.chroma.cr.resize(img.height, img.width);
  const auto& m = forward_matrix();
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const auto* p = img.pixel(x, y);
      const double r = p[0] / 255.0, g = p[1] / 255.0, b = p[2] / 255.0;
      // Differences against one channel: each row of the matrix sums to 1 (luma)
      // or 0 (chroma), so gray inputs land on y = v and cb = cr = 0 exactly.
      const double luma = b + m(0, 0) * (r - b) + m(0, 1) * (g - b);
      const double cb = m(1, 0) * (r - b) + m(1, 1) * (g - b);
      const double cr = m(2, 1) * (g - r) + m(2, 2) * (b - r);
      out.y(y, x) = std::clamp(luma, 0.0, 1.0);
      out.chroma.cb(y, x) = std::clamp(cb, kChromaMin, kChromaMax);
      out.chroma.cr(y, x) = std::clamp(cr, kChromaMin, kChromaMax);
    }
  }
  return out;
}

RgbImage ycbcr_to_rgb(const Plane& luma, const Chroma& chroma) {
  const int h = static_cast<int>(luma.rows());
  const int w = static_cast<int>(luma.cols());
  RgbImage img(w, h);
  const auto& inv = inverse_matrix();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Eigen::Vector3d ycc(luma(y, x), chroma.cb(y, x), chroma.cr(y, x));
      const Eigen::Vector3d rgb = inv * ycc;
      auto* p = img.pixel(x, y);
      p[0] = to_byte(rgb[0]);
      p[1] = to_byte(rgb[1]);
      p[2] = to_byte(rgb[2]);
    }
  }
  return img;
}

RgbImage ycbcr_to_rgb(const PlanarImage& img) { return ycbcr_to_rgb(img.y, img.chroma); }

Plane quantize_luma(const Plane& luma) {
  return luma.unaryExpr([](double v) { return to_byte(v) / 255.0; });
}

}  // namespace chc
