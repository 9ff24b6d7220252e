#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "chc/regions.hpp"
#include "test_util.hpp"

using namespace chc;
using chc::testing::error_of;
using chc::testing::random_plane;

namespace {

bool canonical(const RegionMap& m) {
  int next = 0;
  std::vector<bool> seen(m.region_count, false);
  for (Eigen::Index i = 0; i < m.labels.size(); ++i) {
    const int l = m.labels.data()[i];
    if (l < 0 || l >= m.region_count) return false;
    if (!seen[l]) {
      if (l != next) return false;
      seen[l] = true;
      ++next;
    }
  }
  return next == m.region_count;
}

/// QuickShift written straight from its definition: every pixel is a link candidate.
RegionMap reference_quickshift(const Plane& gray, const QuickShiftParams& p) {
  const int h = static_cast<int>(gray.rows()), w = static_cast<int>(gray.cols()), n = h * w;
  const int radius = static_cast<int>(std::ceil(3.0 * p.kernel_size));
  auto feature_d2 = [&](int a, int b) {
    const double di = p.ratio * 255.0 * (gray.data()[b] - gray.data()[a]);
    const double dx = b % w - a % w, dy = b / w - a / w;
    return di * di + dx * dx + dy * dy;
  };
  std::vector<double> density(n, 0.0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      if (std::abs(b % w - a % w) <= radius && std::abs(b / w - a / w) <= radius)
        density[a] += std::exp(-feature_d2(a, b) / (2 * p.kernel_size * p.kernel_size));
  std::vector<int> parent(n);
  for (int a = 0; a < n; ++a) {
    parent[a] = a;
    double best = std::numeric_limits<double>::infinity();
    for (int b = 0; b < n; ++b) {
      const bool higher = density[b] > density[a] || (density[b] == density[a] && b < a);
      const double d2 = feature_d2(a, b);
      if (b != a && higher && d2 <= p.max_dist * p.max_dist && d2 < best) {
        best = d2;
        parent[a] = b;
      }
    }
  }
  LabelPlane roots(h, w);
  for (int a = 0; a < n; ++a) {
    int r = a;
    while (parent[r] != r) r = parent[r];
    roots.data()[a] = r;
  }
  return canonicalize_labels(roots);
}

bool four_connected_region(const RegionMap& m, int label) {
  const int h = m.height(), w = m.width();
  std::vector<int> stack;
  std::vector<bool> seen(h * w, false);
  int total = 0;
  for (int i = 0; i < h * w; ++i) {
    if (m.labels.data()[i] != label) continue;
    if (total++ == 0) {
      stack.push_back(i);
      seen[i] = true;
    }
  }
  int reached = 0;
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    ++reached;
    const int y = i / w, x = i % w;
    const int ny[] = {y - 1, y + 1, y, y}, nx[] = {x, x, x - 1, x + 1};
    for (int d = 0; d < 4; ++d) {
      if (ny[d] < 0 || ny[d] >= h || nx[d] < 0 || nx[d] >= w) continue;
      const int j = ny[d] * w + nx[d];
      if (!seen[j] && m.labels.data()[j] == label) {
        seen[j] = true;
        stack.push_back(j);
      }
    }
  }
  return reached == total;
}

}  // namespace

TEST_CASE("canonical labels") {
  LabelPlane raw(2, 2);
  raw << 5, 5, 2, 2;
  const RegionMap m = canonicalize_labels(raw);
  CHECK(m.region_count == 2);
  CHECK(m.labels == (LabelPlane(2, 2) << 0, 0, 1, 1).finished());
  CHECK(canonicalize_labels(m.labels) == m);

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    LabelPlane r(6, 7);
    for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = static_cast<int>(rng() % 9) * 3 - 4;
    std::vector<int> perm(40);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    LabelPlane permuted = r.unaryExpr([&](int v) { return perm[v + 4]; });
    const RegionMap a = canonicalize_labels(r);
    CHECK(canonical(a));
    CHECK(canonicalize_labels(permuted) == a);
  }
}

TEST_CASE("grid partition") {
  const RegionMap a = grid_partition(8, 8, {4});
  CHECK(a.region_count == 4);
  CHECK(a.labels(0, 0) == 0);
  CHECK(a.labels(0, 7) == 1);
  CHECK(a.labels(7, 0) == 2);
  CHECK(a.labels(7, 7) == 3);

  const RegionMap b = grid_partition(5, 5, {4});
  CHECK(b.region_count == 4);
  const Eigen::VectorXi sizes = region_sizes(b);
  CHECK(sizes == (Eigen::VectorXi(4) << 16, 4, 4, 1).finished());

  const RegionMap c = grid_partition(3, 2, {1});
  CHECK(c.region_count == 6);
  for (int i = 0; i < 6; ++i) CHECK(c.labels.data()[i] == i);

  SUBCASE("nesting") {
    for (int cell : {1, 2, 4, 8}) {
      const RegionMap fine = grid_partition(16, 16, {cell}), coarse = grid_partition(16, 16, {2 * cell});
      std::map<int, int> parent;
      for (Eigen::Index i = 0; i < fine.labels.size(); ++i) {
        auto [it, fresh] = parent.emplace(fine.labels.data()[i], coarse.labels.data()[i]);
        CHECK(it->second == coarse.labels.data()[i]);
      }
    }
  }
  SUBCASE("errors") {
    CHECK(error_of([] { grid_partition(4, 4, {0}); }) == "InvalidParams");
    CHECK(error_of([] { grid_partition(4, 4, {5}); }) == "InvalidParams");
    CHECK(error_of([] { grid_partition(0, 4, {1}); }) == "InvalidParams");
  }
}

TEST_CASE("SLIC") {
  SUBCASE("constant image gives the seed grid") {
    const RegionMap m = slic_segment(Plane::Constant(16, 16, 0.4), {8, 10.0});
    CHECK(m == grid_partition(16, 16, {8}));
  }
  SUBCASE("deterministic, canonical, connected") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Plane g = random_plane(24, 30, seed);
      const RegionMap a = slic_segment(g, {6, 5.0}), b = slic_segment(g, {6, 5.0});
      CHECK(a == b);
      CHECK(canonical(a));
      CHECK(regions_connected(a));
      for (int l = 0; l < a.region_count; ++l) CHECK(four_connected_region(a, l));
    }
  }
  SUBCASE("boundaries follow a vertical edge") {
    Plane g = Plane::Constant(32, 32, 0.2);
    g.rightCols(16).setConstant(0.8);
    const RegionMap m = slic_segment(g, {16, 1.0});
    for (int l = 0; l < m.region_count; ++l) {
      int left = 0, right = 0;
      for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
          if (m.labels(y, x) == l) (x < 16 ? left : right)++;
      // A region may only straddle the edge by the pixel columns touching it.
      if (left > 0 && right > 0) {
        for (int y = 0; y < 32; ++y)
          for (int x = 0; x < 32; ++x)
            if (m.labels(y, x) == l) CHECK((left > right ? x < 17 : x > 14));
      }
    }
  }
  SUBCASE("errors") {
    CHECK(error_of([] { slic_segment(Plane::Zero(8, 8), {1, 10.0}); }) == "InvalidParams");
    CHECK(error_of([] { slic_segment(Plane::Zero(8, 8), {4, 0.0}); }) == "InvalidParams");
    CHECK(error_of([] { slic_segment(Plane::Zero(8, 8), {16, 10.0}); }) == "ImageTooSmall");
  }
}

TEST_CASE("QuickShift") {
  SUBCASE("constant 2x2 with short reach keeps every pixel apart") {
    const RegionMap m = quickshift_segment(Plane::Constant(2, 2, 0.5), {0.5, 1.0, 0.9});
    CHECK(m.region_count == 4);
    CHECK(m == reference_quickshift(Plane::Constant(2, 2, 0.5), {0.5, 1.0, 0.9}));
  }
  SUBCASE("two separated blobs") {
    Plane g = Plane::Zero(6, 12);
    g.block(1, 1, 4, 4).setConstant(0.9);
    g.block(1, 7, 4, 4).setConstant(0.9);
    g.col(5).setConstant(0.5);
    g.col(6).setConstant(0.5);
    // Background and separator form their own trees; only the blob pixels are inspected.
    const QuickShiftParams p{1.0, 2.0, 2.5};
    const RegionMap m = quickshift_segment(g, p);
    CHECK(m == reference_quickshift(g, p));
    std::map<int, int> blob_labels;
    for (int y = 1; y < 5; ++y)
      for (int x : {1, 2, 3, 4, 7, 8, 9, 10}) blob_labels[m.labels(y, x)] += 1;
    CHECK(blob_labels.size() == 2);
    CHECK(m.labels(2, 2) != m.labels(2, 8));

    Plane pair = Plane::Zero(4, 9);
    pair.block(0, 0, 4, 3).setConstant(0.9);
    pair.block(0, 6, 4, 3).setConstant(0.1);
    pair.block(0, 3, 4, 3).setConstant(0.5);
    const QuickShiftParams wide{1.0, 2.0, 3.0};
    const RegionMap two = quickshift_segment(pair, wide);
    CHECK(two == reference_quickshift(pair, wide));
  }
  SUBCASE("matches the brute-force definition on random images") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      const Plane g = random_plane(7, 9, seed);
      for (const QuickShiftParams& p : {QuickShiftParams{0.5, 2.0, 4.0}, QuickShiftParams{0.05, 1.0, 3.0}}) {
        const RegionMap m = quickshift_segment(g, p);
        CHECK(m == reference_quickshift(g, p));
        CHECK(canonical(m));
        CHECK(m == quickshift_segment(g, p));
      }
    }
  }
  SUBCASE("errors") {
    CHECK(error_of([] { quickshift_segment(Plane::Zero(4, 4), {0.0, 2.0, 4.0}); }) == "InvalidParams");
    CHECK(error_of([] { quickshift_segment(Plane::Zero(4, 4), {1.5, 2.0, 4.0}); }) == "InvalidParams");
    CHECK(error_of([] { quickshift_segment(Plane::Zero(4, 4), {0.5, 0.0, 4.0}); }) == "InvalidParams");
    CHECK(error_of([] { quickshift_segment(Plane::Zero(4, 4), {0.5, 2.0, -1.0}); }) == "InvalidParams");
  }
}
