#pragma once

#include "chc/pixelio.hpp"
#include "chc/types.hpp"

namespace chc {

/// Mean squared chroma error over both channels, in 8-bit units (x255^2).
double chroma_mse(const Chroma& a, const Chroma& b);

/// Mean squared error over all RGB samples, in 8-bit units.
double rgb_mse(const RgbImage& a, const RgbImage& b);

/// 10 log10(255^2 / MSE); +infinity for identical images.
double rgb_psnr(const RgbImage& a, const RgbImage& b);

/// Value reported in tables for an infinite PSNR.
inline constexpr double kPsnrSentinel = 100.0;

inline double psnr_for_table(double psnr) { return psnr > kPsnrSentinel ? kPsnrSentinel : psnr; }

enum class SsimChannels { Luma, Rgb };

inline constexpr int kMsSsimScales = 3;
inline constexpr int kMsSsimMinSize = 32;

/// Three-scale MS-SSIM with an 11-tap Gaussian window (sigma 1.5). Each
/// scale contributes its full SSIM (luminance x contrast-structure) raised to
/// the renormalized standard weight; the Luma mode scores the BT.601 luma of
/// both images, the Rgb mode averages the three channels.
double ms_ssim(const RgbImage& a, const RgbImage& b, SsimChannels channels = SsimChannels::Luma);

/// Single-scale mean SSIM of two planes in [0,255] (exposed for tests).
double ssim_plane(const Plane& a, const Plane& b);

}  // namespace chc
