#include "chc/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "chc/error.hpp"

namespace chc {

double chroma_mse(const Chroma& a, const Chroma& b) {
  if (!a.same_shape(b) || a.cb.size() == 0) fail(ErrorCode::ShapeMismatch, "chroma planes differ in shape");
  const double sum = (a.cb - b.cb).squaredNorm() + (a.cr - b.cr).squaredNorm();
  return sum / (2.0 * static_cast<double>(a.cb.size())) * kEightBitScale;
}

double rgb_mse(const RgbImage& a, const RgbImage& b) {
  if (a.width != b.width || a.height != b.height || a.data.size() != b.data.size() || a.data.empty())
    fail(ErrorCode::ShapeMismatch, "images differ in size");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.data.size());
}

double rgb_psnr(const RgbImage& a, const RgbImage& b) {
  const double mse = rgb_mse(a, b);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = (0.01 * 255) * (0.01 * 255);
constexpr double kC2 = (0.03 * 255) * (0.03 * 255);
constexpr std::array<double, 5> kStandardWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

std::array<double, kWindow> gaussian_taps() {
  std::array<double, kWindow> taps{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    taps[i] = std::exp(-d * d / (2 * kSigma * kSigma));
    sum += taps[i];
  }
  for (auto& t : taps) t /= sum;
  return taps;
}

/// Separable Gaussian filter; taps falling outside the plane are dropped and
/// the remaining ones renormalized.
Plane gaussian_filter(const Plane& in) {
  static const auto taps = gaussian_taps();
  const int h = static_cast<int>(in.rows()), w = static_cast<int>(in.cols()), r = kWindow / 2;
  Plane tmp(h, w), out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0, norm = 0.0;
      for (int t = -r; t <= r; ++t) {
        const int xx = x + t;
        if (xx < 0 || xx >= w) continue;
        s += taps[t + r] * in(y, xx);
        norm += taps[t + r];
      }
      tmp(y, x) = s / norm;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0, norm = 0.0;
      for (int t = -r; t <= r; ++t) {
        const int yy = y + t;
        if (yy < 0 || yy >= h) continue;
        s += taps[t + r] * tmp(yy, x);
        norm += taps[t + r];
      }
      out(y, x) = s / norm;
    }
  }
  return out;
}

Plane downsample(const Plane& in) {
  const Eigen::Index h = in.rows() / 2, w = in.cols() / 2;
  Plane out(h, w);
  for (Eigen::Index y = 0; y < h; ++y)
    for (Eigen::Index x = 0; x < w; ++x)
      out(y, x) = (in(2 * y, 2 * x) + in(2 * y, 2 * x + 1) + in(2 * y + 1, 2 * x) + in(2 * y + 1, 2 * x + 1)) / 4.0;
  return out;
}

double ms_ssim_plane(Plane a, Plane b) {
  double weight_sum = 0.0;
  for (int s = 0; s < kMsSsimScales; ++s) weight_sum += kStandardWeights[s];
  double result = 1.0;
  for (int s = 0; s < kMsSsimScales; ++s) {
    // Negative structure agreement is floored at zero so the weighted power stays real.
    const double ssim = std::max(0.0, ssim_plane(a, b));
    result *= std::pow(ssim, kStandardWeights[s] / weight_sum);
    if (s + 1 < kMsSsimScales) {
      a = downsample(a);
      b = downsample(b);
    }
  }
  return result;
}

Plane channel_plane(const RgbImage& img, int c) {
  Plane p(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) p(y, x) = img.pixel(x, y)[c];
  return p;
}

Plane luma_plane(const RgbImage& img) {
  Plane p(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const auto* px = img.pixel(x, y);
      p(y, x) = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
    }
  return p;
}

}  // namespace

double ssim_plane(const Plane& a, const Plane& b) {
  const Plane mu_a = gaussian_filter(a), mu_b = gaussian_filter(b);
  const Plane e_aa = gaussian_filter(a.cwiseProduct(a));
  const Plane e_bb = gaussian_filter(b.cwiseProduct(b));
  const Plane e_ab = gaussian_filter(a.cwiseProduct(b));
  double total = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double ma = mu_a.data()[i], mb = mu_b.data()[i];
    const double va = e_aa.data()[i] - ma * ma;
    const double vb = e_bb.data()[i] - mb * mb;
    const double cov = e_ab.data()[i] - ma * mb;
    const double lum = (2 * ma * mb + kC1) / (ma * ma + mb * mb + kC1);
    const double cs = (2 * cov + kC2) / (va + vb + kC2);
    total += lum * cs;
  }
  return total / static_cast<double>(a.size());
}

double ms_ssim(const RgbImage& a, const RgbImage& b, SsimChannels channels) {
  if (a.width != b.width || a.height != b.height) fail(ErrorCode::ShapeMismatch, "images differ in size");
  if (a.width < kMsSsimMinSize || a.height < kMsSsimMinSize)
    fail(ErrorCode::ImageTooSmall, "MS-SSIM needs at least 32x32 pixels");
  if (channels == SsimChannels::Luma) return ms_ssim_plane(luma_plane(a), luma_plane(b));
  double sum = 0.0;
  for (int c = 0; c < 3; ++c) sum += ms_ssim_plane(channel_plane(a, c), channel_plane(b, c));
  return sum / 3.0;
}

}  // namespace chc
