#include "chc/regions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>
#include <vector>

#include "chc/error.hpp"

namespace chc {

RegionMap canonicalize_labels(const LabelPlane& raw) {
  RegionMap out;
  out.labels.resize(raw.rows(), raw.cols());
  std::unordered_map<std::int32_t, std::int32_t> remap;
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    auto [it, inserted] = remap.try_emplace(raw.data()[i], static_cast<std::int32_t>(remap.size()));
    out.labels.data()[i] = it->second;
  }
  out.region_count = static_cast<int>(remap.size());
  return out;
}

RegionMap grid_partition(int width, int height, const GridParams& p) {
  if (width < 1 || height < 1) fail(ErrorCode::InvalidParams, "empty image");
  if (p.cell_size < 1 || p.cell_size > std::max(width, height))
    fail(ErrorCode::InvalidParams, "cell size must be in [1, max(width, height)]");
  const int cols = (width + p.cell_size - 1) / p.cell_size;
  RegionMap out;
  out.labels.resize(height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) out.labels(y, x) = (y / p.cell_size) * cols + x / p.cell_size;
  out.region_count = cols * ((height + p.cell_size - 1) / p.cell_size);
  return out;
}

Eigen::VectorXi region_sizes(const RegionMap& map) {
  Eigen::VectorXi sizes = Eigen::VectorXi::Zero(map.region_count);
  for (Eigen::Index i = 0; i < map.labels.size(); ++i) ++sizes[map.labels.data()[i]];
  return sizes;
}

namespace {

constexpr int kDy[4] = {-1, 0, 0, 1};
constexpr int kDx[4] = {0, -1, 1, 0};

/// 4-connected components of equal labels, numbered in raster order of their
/// first pixel.
LabelPlane connected_components(const LabelPlane& labels, int& count) {
  const int h = static_cast<int>(labels.rows()), w = static_cast<int>(labels.cols());
  LabelPlane comp = LabelPlane::Constant(h, w, -1);
  std::vector<int> stack;
  count = 0;
  for (int start = 0; start < h * w; ++start) {
    if (comp.data()[start] >= 0) continue;
    const int id = count++;
    const int label = labels.data()[start];
    comp.data()[start] = id;
    stack.push_back(start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int py = p / w, px = p % w;
      for (int d = 0; d < 4; ++d) {
        const int ny = py + kDy[d], nx = px + kDx[d];
        if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
        const int q = ny * w + nx;
        if (comp.data()[q] < 0 && labels.data()[q] == label) {
          comp.data()[q] = id;
          stack.push_back(q);
        }
      }
    }
  }
  return comp;
}

/// Merges components smaller than `min_size` into the adjacent group whose
/// mean intensity is nearest (ties to the lowest group id). Groups are
/// processed in component order; a group keeps the id of its target.
LabelPlane merge_small_components(const LabelPlane& comp, int count, const Plane& intensity, int min_size) {
  const int h = static_cast<int>(comp.rows()), w = static_cast<int>(comp.cols());
  std::vector<int> parent(count);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int c) {
    while (parent[c] != c) c = parent[c] = parent[parent[c]];
    return c;
  };
  std::vector<long> size(count, 0);
  std::vector<double> sum(count, 0.0);
  std::vector<std::vector<int>> members(count);
  for (int p = 0; p < h * w; ++p) {
    const int c = comp.data()[p];
    ++size[c];
    sum[c] += intensity.data()[p];
    members[c].push_back(p);
  }

  for (int c = 0; c < count; ++c) {
    const int root = find(c);
    if (root != c || size[root] >= min_size) continue;
    std::set<int> neighbors;
    for (int p : members[root]) {
      const int py = p / w, px = p % w;
      for (int d = 0; d < 4; ++d) {
        const int ny = py + kDy[d], nx = px + kDx[d];
        if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
        const int other = find(comp(ny, nx));
        if (other != root) neighbors.insert(other);
      }
    }
    if (neighbors.empty()) continue;
    const double mean = sum[root] / static_cast<double>(size[root]);
    int best = -1;
    double best_diff = std::numeric_limits<double>::infinity();
    for (int n : neighbors) {  // ascending ids, strict < keeps the lowest on ties
      const double diff = std::abs(sum[n] / static_cast<double>(size[n]) - mean);
      if (diff < best_diff) {
        best_diff = diff;
        best = n;
      }
    }
    parent[root] = best;
    size[best] += size[root];
    sum[best] += sum[root];
    members[best].insert(members[best].end(), members[root].begin(), members[root].end());
    members[root].clear();
  }

  LabelPlane out(h, w);
  for (int p = 0; p < h * w; ++p) out.data()[p] = find(comp.data()[p]);
  return out;
}

}  // namespace

bool regions_connected(const RegionMap& map) {
  int count = 0;
  connected_components(map.labels, count);
  return count == map.region_count;
}

RegionMap slic_segment(const Plane& gray, const SlicParams& p) {
  const int h = static_cast<int>(gray.rows()), w = static_cast<int>(gray.cols());
  const int s = p.region_size;
  if (s < 2) fail(ErrorCode::InvalidParams, "SLIC region size must be >= 2");
  if (!(p.compactness > 0.0)) fail(ErrorCode::InvalidParams, "SLIC compactness must be > 0");
  if (w < s || h < s) fail(ErrorCode::ImageTooSmall, "image smaller than one SLIC region");

  const Plane intensity = gray * kSlicIntensityScale;

  // Centers sit at the middle of an S-spaced lattice of cells, so on a flat
  // image with S dividing the size the initial tiling is already a fixpoint.
  struct Center {
    double i, x, y;
  };
  const int nx = std::max(1, w / s), ny = std::max(1, h / s);
  const double step_x = static_cast<double>(w) / nx, step_y = static_cast<double>(h) / ny;
  std::vector<Center> centers;
  for (int cy = 0; cy < ny; ++cy) {
    for (int cx = 0; cx < nx; ++cx) {
      const double x = (cx + 0.5) * step_x - 0.5, y = (cy + 0.5) * step_y - 0.5;
      const int px = std::clamp(static_cast<int>(std::lround(x)), 0, w - 1);
      const int py = std::clamp(static_cast<int>(std::lround(y)), 0, h - 1);
      centers.push_back({intensity(py, px), x, y});
    }
  }

  const double spatial = (p.compactness / s) * (p.compactness / s);
  LabelPlane labels = LabelPlane::Constant(h, w, -1);
  Plane dist(h, w);
  for (int iter = 0; iter < kSlicIterations; ++iter) {
    dist.setConstant(std::numeric_limits<double>::infinity());
    labels.setConstant(-1);
    for (int k = 0; k < static_cast<int>(centers.size()); ++k) {
      const auto& c = centers[k];
      const int y0 = std::max(0, static_cast<int>(std::floor(c.y - s))), y1 = std::min(h - 1, static_cast<int>(std::ceil(c.y + s)));
      const int x0 = std::max(0, static_cast<int>(std::floor(c.x - s))), x1 = std::min(w - 1, static_cast<int>(std::ceil(c.x + s)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double di = intensity(y, x) - c.i, dx = x - c.x, dy = y - c.y;
          const double d = di * di + spatial * (dx * dx + dy * dy);
          if (d < dist(y, x)) {
            dist(y, x) = d;
            labels(y, x) = k;
          }
        }
      }
    }
    std::vector<Center> acc(centers.size(), {0.0, 0.0, 0.0});
    std::vector<long> count(centers.size(), 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int k = labels(y, x);
        if (k < 0) continue;
        acc[k].i += intensity(y, x);
        acc[k].x += x;
        acc[k].y += y;
        ++count[k];
      }
    }
    for (std::size_t k = 0; k < centers.size(); ++k) {
      if (count[k] == 0) continue;
      const double n = static_cast<double>(count[k]);
      centers[k] = {acc[k].i / n, acc[k].x / n, acc[k].y / n};
    }
  }

  // Pixels outside every search window become their own components and are
  // absorbed by the merge pass below.
  int next = static_cast<int>(centers.size());
  for (Eigen::Index i = 0; i < labels.size(); ++i)
    if (labels.data()[i] < 0) labels.data()[i] = next;

  int count = 0;
  const LabelPlane comp = connected_components(labels, count);
  const int min_size = std::max(1, (s * s) / 4);
  return canonicalize_labels(merge_small_components(comp, count, intensity, min_size));
}

RegionMap quickshift_segment(const Plane& gray, const QuickShiftParams& p) {
  if (!(p.ratio > 0.0 && p.ratio <= 1.0)) fail(ErrorCode::InvalidParams, "QuickShift ratio must be in (0,1]");
  if (!(p.kernel_size > 0.0) || !(p.max_dist > 0.0))
    fail(ErrorCode::InvalidParams, "QuickShift kernel size and max distance must be > 0");
  const int h = static_cast<int>(gray.rows()), w = static_cast<int>(gray.cols());
  if (h < 1 || w < 1) fail(ErrorCode::InvalidParams, "empty image");

  const Plane feat = gray * (kQuickShiftIntensityScale * p.ratio);
  const double inv_two_sigma2 = 1.0 / (2.0 * p.kernel_size * p.kernel_size);
  const int radius = static_cast<int>(std::ceil(3.0 * p.kernel_size));

  Plane density = Plane::Zero(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double e = 0.0;
      for (int qy = std::max(0, y - radius); qy <= std::min(h - 1, y + radius); ++qy) {
        for (int qx = std::max(0, x - radius); qx <= std::min(w - 1, x + radius); ++qx) {
          const double di = feat(qy, qx) - feat(y, x);
          const double d2 = di * di + (qx - x) * (qx - x) + (qy - y) * (qy - y);
          e += std::exp(-d2 * inv_two_sigma2);
        }
      }
      density(y, x) = e;
    }
  }

  // Link each pixel to its nearest neighbor of higher density; on equal
  // density the earlier raster pixel counts as higher.
  const int reach = static_cast<int>(std::floor(p.max_dist));
  const double max_d2 = p.max_dist * p.max_dist;
  std::vector<int> parent(static_cast<std::size_t>(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int self = y * w + x;
      int best = self;
      double best_d2 = std::numeric_limits<double>::infinity();
      for (int qy = std::max(0, y - reach); qy <= std::min(h - 1, y + reach); ++qy) {
        for (int qx = std::max(0, x - reach); qx <= std::min(w - 1, x + reach); ++qx) {
          const int q = qy * w + qx;
          if (q == self) continue;
          const bool higher = density(qy, qx) > density(y, x) || (density(qy, qx) == density(y, x) && q < self);
          if (!higher) continue;
          const double di = feat(qy, qx) - feat(y, x);
          const double d2 = di * di + (qx - x) * (qx - x) + (qy - y) * (qy - y);
          if (d2 > max_d2) continue;
          if (d2 < best_d2) {  // raster scan: first hit wins ties
            best_d2 = d2;
            best = q;
          }
        }
      }
      parent[self] = best;
    }
  }

  LabelPlane roots(h, w);
  for (int i = 0; i < h * w; ++i) {
    int r = i;
    while (parent[r] != r) r = parent[r];
    roots.data()[i] = r;
  }
  return canonicalize_labels(roots);
}

}  // namespace chc
