#include "chc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include "chc/error.hpp"

namespace chc {
namespace {

void check_shapes(const HypothesisSet& hyp, const Chroma& truth) {
  if (truth.cb.rows() != truth.cr.rows() || truth.cb.cols() != truth.cr.cols() || hyp.k < 1 || hyp.height() != truth.height() || hyp.width() != truth.width())
    fail(ErrorCode::ShapeMismatch, "hypotheses and truth differ in shape");
}

}  // namespace

BranchMap pixel_oracle(const HypothesisSet& hyp, const Chroma& truth) {
  check_shapes(hyp, truth);
  const int h = hyp.height(), w = hyp.width();
  BranchMap map(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double tcb = truth.cb(y, x), tcr = truth.cr(y, x);
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int j = 0; j < hyp.k; ++j) {
        const double e = joint_sq_error(hyp.chroma[j](0, y, x), hyp.chroma[j](1, y, x), tcb, tcr);
        if (e < best) {
          best = e;
          arg = j;
        }
      }
      map(y, x) = static_cast<std::uint8_t>(arg);
    }
  }
  return map;
}

BranchMap materialize(const RegionMap& regions, const std::vector<std::uint8_t>& indices) {
  if (static_cast<int>(indices.size()) != regions.region_count)
    fail(ErrorCode::ShapeMismatch, "one index per region required");
  BranchMap map(regions.height(), regions.width());
  for (Eigen::Index i = 0; i < regions.labels.size(); ++i) map.data()[i] = indices[regions.labels.data()[i]];
  return map;
}

RegionChoice region_oracle(const HypothesisSet& hyp, const Chroma& truth, const RegionMap& regions) {
  check_shapes(hyp, truth);
  if (regions.height() != hyp.height() || regions.width() != hyp.width())
    fail(ErrorCode::ShapeMismatch, "region map differs in shape");
  const int r = regions.region_count;
  // Raster-order accumulation keeps the sums reproducible.
  Eigen::MatrixXd err = Eigen::MatrixXd::Zero(hyp.k, r);
  Eigen::VectorXi count = Eigen::VectorXi::Zero(r);
  for (int y = 0; y < hyp.height(); ++y) {
    for (int x = 0; x < hyp.width(); ++x) {
      const int label = regions.labels(y, x);
      if (label < 0 || label >= r) fail(ErrorCode::ShapeMismatch, "label out of range");
      ++count[label];
      for (int j = 0; j < hyp.k; ++j)
        err(j, label) += joint_sq_error(hyp.chroma[j](0, y, x), hyp.chroma[j](1, y, x), truth.cb(y, x),
                                        truth.cr(y, x));
    }
  }
  RegionChoice out;
  out.indices.resize(r);
  for (int region = 0; region < r; ++region) {
    if (count[region] == 0) fail(ErrorCode::EmptyRegion, "region " + std::to_string(region) + " has no pixels");
    int arg = 0;
    for (int j = 1; j < hyp.k; ++j)
      if (err(j, region) < err(arg, region)) arg = j;
    out.indices[region] = static_cast<std::uint8_t>(arg);
  }
  out.map = materialize(regions, out.indices);
  return out;
}

Chroma assemble_chroma(const HypothesisSet& hyp, const BranchMap& map) {
  if (map.rows() != hyp.height() || map.cols() != hyp.width())
    fail(ErrorCode::ShapeMismatch, "branch map differs in shape");
  const int h = hyp.height(), w = hyp.width();
  Chroma out{Plane(h, w), Plane(h, w)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int j = map(y, x);
      if (j >= hyp.k) fail(ErrorCode::IndexOutOfRange, "branch index " + std::to_string(j) + " >= K");
      out.cb(y, x) = hyp.chroma[j](0, y, x);
      out.cr(y, x) = hyp.chroma[j](1, y, x);
    }
  }
  return out;
}

Chroma separate_channel_oracle(const HypothesisSet& hyp, const Chroma& truth) {
  check_shapes(hyp, truth);
  const int h = hyp.height(), w = hyp.width();
  Chroma out{Plane(h, w), Plane(h, w)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int bcb = 0, bcr = 0;
      for (int j = 1; j < hyp.k; ++j) {
        if (std::abs(hyp.chroma[j](0, y, x) - truth.cb(y, x)) < std::abs(hyp.chroma[bcb](0, y, x) - truth.cb(y, x)))
          bcb = j;
        if (std::abs(hyp.chroma[j](1, y, x) - truth.cr(y, x)) < std::abs(hyp.chroma[bcr](1, y, x) - truth.cr(y, x)))
          bcr = j;
      }
      out.cb(y, x) = hyp.chroma[bcb](0, y, x);
      out.cr(y, x) = hyp.chroma[bcr](1, y, x);
    }
  }
  return out;
}

bool CorrectionParams::finite() const {
  return std::isfinite(scale_cb) && std::isfinite(offset_cb) && std::isfinite(scale_cr) && std::isfinite(offset_cr);
}

namespace {

// Least squares of truth ~ scale * pred + offset using centered sums, so an
// exact affine relation is recovered exactly.
std::pair<double, double> least_squares(const Plane& pred, const Plane& truth) {
  const double n = static_cast<double>(pred.size());
  const double mp = pred.mean(), mt = truth.mean();
  const auto dp = (pred.array() - mp);
  const double sxx = dp.square().sum();
  if (sxx / n < kCorrectionVarianceFloor) return {1.0, mt - mp};
  const double sxy = (dp * (truth.array() - mt)).sum();
  const double scale = sxy / sxx;
  return {scale, mt - scale * mp};
}

// Falls back to the identity when rounding leaves the fit no better than it.
std::pair<double, double> fit_channel(const Plane& pred, const Plane& truth) {
  const auto [scale, offset] = least_squares(pred, truth);
  const Plane fitted = (scale * pred.array() + offset).matrix();
  if ((fitted - truth).squaredNorm() <= (pred - truth).squaredNorm()) return {scale, offset};
  return {1.0, 0.0};
}

}  // namespace

CorrectionParams fit_correction(const Chroma& pred, const Chroma& truth) {
  if (!pred.same_shape(truth) || pred.cb.size() == 0) fail(ErrorCode::ShapeMismatch, "correction inputs differ");
  CorrectionParams p;
  std::tie(p.scale_cb, p.offset_cb) = fit_channel(pred.cb, truth.cb);
  std::tie(p.scale_cr, p.offset_cr) = fit_channel(pred.cr, truth.cr);
  return p;
}

Chroma apply_correction(const Chroma& pred, const CorrectionParams& params, bool clamp) {
  Chroma out{(params.scale_cb * pred.cb.array() + params.offset_cb).matrix(),
             (params.scale_cr * pred.cr.array() + params.offset_cr).matrix()};
  if (clamp) {
    out.cb = out.cb.cwiseMax(kChromaMin).cwiseMin(kChromaMax);
    out.cr = out.cr.cwiseMax(kChromaMin).cwiseMin(kChromaMax);
  }
  return out;
}

}  // namespace chc
