#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace chc {

/// Dense image plane; rows index y, columns index x.
template <typename Scalar>
using PlaneT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Plane = PlaneT<double>;

/// The two color-difference channels of an image.
template <typename Scalar>
struct ChromaT {
  PlaneT<Scalar> cb;
  PlaneT<Scalar> cr;

  Eigen::Index height() const { return cb.rows(); }
  Eigen::Index width() const { return cb.cols(); }
  bool same_shape(const ChromaT& o) const {
    return cb.rows() == o.cb.rows() && cb.cols() == o.cb.cols() && cr.rows() == o.cr.rows() &&
           cr.cols() == o.cr.cols() && cb.rows() == cr.rows() && cb.cols() == cr.cols();
  }
};

using Chroma = ChromaT<double>;

/// Per-pixel branch indices b(x,y) in [0, K).
using IndexPlane = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Dense region labels in [0, R).
using LabelPlane = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kChromaMin = -0.5;
inline constexpr double kChromaMax = 0.5;

/// Normalized chroma error to 8-bit units.
inline constexpr double kEightBitScale = 255.0 * 255.0;

}  // namespace chc
