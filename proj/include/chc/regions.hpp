#pragma once

#include "chc/types.hpp"

namespace chc {

/// Dense labels in [0, R) in canonical first-occurrence raster order.
struct RegionMap {
  LabelPlane labels;
  int region_count = 0;

  int width() const { return static_cast<int>(labels.cols()); }
  int height() const { return static_cast<int>(labels.rows()); }
  friend bool operator==(const RegionMap& a, const RegionMap& b) {
    return a.region_count == b.region_count && a.labels == b.labels;
  }
};

struct GridParams {
  int cell_size = 8;
  friend bool operator==(const GridParams&, const GridParams&) = default;
};

struct SlicParams {
  int region_size = 16;
  double compactness = 10.0;
  friend bool operator==(const SlicParams&, const SlicParams&) = default;
};

struct QuickShiftParams {
  double ratio = 0.5;
  double kernel_size = 2.0;
  double max_dist = 4.0;
  friend bool operator==(const QuickShiftParams&, const QuickShiftParams&) = default;
};

inline constexpr int kSlicIterations = 10;
inline constexpr double kSlicIntensityScale = 100.0;
inline constexpr double kQuickShiftIntensityScale = 255.0;

/// Relabels arbitrary integer labels to first-occurrence raster order.
RegionMap canonicalize_labels(const LabelPlane& raw);

/// Fixed square cells anchored at (0,0); ragged cells on the right and bottom.
RegionMap grid_partition(int width, int height, const GridParams& p);

/// SLIC on the luma plane with fully specified tie-breaks and a 4-connectivity
/// post-pass; identical input always yields an identical map.
RegionMap slic_segment(const Plane& gray, const SlicParams& p);

/// QuickShift mode seeking on (ratio * intensity, x, y).
RegionMap quickshift_segment(const Plane& gray, const QuickShiftParams& p);

/// Pixel count of each region.
Eigen::VectorXi region_sizes(const RegionMap& map);

/// True when every region forms one 4-connected component.
bool regions_connected(const RegionMap& map);

}  // namespace chc
