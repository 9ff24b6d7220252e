#pragma once

#include <cstdint>
#include <vector>

#include "chc/net.hpp"
#include "chc/regions.hpp"
#include "chc/types.hpp"

namespace chc {

/// Per-pixel branch indices b(x,y) < K.
using BranchMap = IndexPlane;

/// Squared joint (cb, cr) error of a hypothesis at one pixel.
inline double joint_sq_error(double cb, double cr, double truth_cb, double truth_cr) {
  const double dcb = cb - truth_cb, dcr = cr - truth_cr;
  return dcb * dcb + dcr * dcr;
}

/// Best branch per pixel under joint (cb, cr) squared error; ties go to the
/// lowest index.
BranchMap pixel_oracle(const HypothesisSet& hyp, const Chroma& truth);

struct RegionChoice {
  std::vector<std::uint8_t> indices;  // one per region, canonical order
  BranchMap map;                      // materialized per pixel
};

/// Best branch per region by summed joint squared error over its pixels.
RegionChoice region_oracle(const HypothesisSet& hyp, const Chroma& truth, const RegionMap& regions);

/// Expands per-region indices onto the pixel grid.
BranchMap materialize(const RegionMap& regions, const std::vector<std::uint8_t>& indices);

/// Chroma taken from branch map(x,y) at every pixel.
Chroma assemble_chroma(const HypothesisSet& hyp, const BranchMap& map);

/// Chroma from choosing the best branch for cb and cr independently; only used
/// to measure what joint selection gives up.
Chroma separate_channel_oracle(const HypothesisSet& hyp, const Chroma& truth);

/// Per-channel affine map truth ~ scale * pred + offset.
struct CorrectionParams {
  double scale_cb = 1.0;
  double offset_cb = 0.0;
  double scale_cr = 1.0;
  double offset_cr = 0.0;

  static CorrectionParams identity() { return {}; }
  bool finite() const;
  friend bool operator==(const CorrectionParams&, const CorrectionParams&) = default;
};

/// Below this prediction variance the scale is pinned to 1.
inline constexpr double kCorrectionVarianceFloor = 1e-12;

CorrectionParams fit_correction(const Chroma& pred, const Chroma& truth);

/// scale * value + offset per channel, clamped to the chroma range unless
/// `clamp` is false.
Chroma apply_correction(const Chroma& pred, const CorrectionParams& params, bool clamp = true);

}  // namespace chc
