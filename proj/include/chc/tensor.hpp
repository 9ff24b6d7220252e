#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cassert>

#include "chc/types.hpp"

namespace chc {

/// Channel-major (C, H, W) activation tensor, row-major within each channel.
template <typename Scalar>
class TensorT {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using ChannelMap = Eigen::Map<PlaneT<Scalar>>;
  using ConstChannelMap = Eigen::Map<const PlaneT<Scalar>>;

  TensorT() = default;
  TensorT(int channels, int height, int width)
      : c_(channels), h_(height), w_(width), data_(Vector::Zero(Eigen::Index(channels) * height * width)) {}

  int channels() const { return c_; }
  int height() const { return h_; }
  int width() const { return w_; }
  Eigen::Index plane_size() const { return Eigen::Index(h_) * w_; }

  ChannelMap channel(int c) { return ChannelMap(data_.data() + c * plane_size(), h_, w_); }
  ConstChannelMap channel(int c) const { return ConstChannelMap(data_.data() + c * plane_size(), h_, w_); }

  Scalar& operator()(int c, int y, int x) { return data_[c * plane_size() + Eigen::Index(y) * w_ + x]; }
  Scalar operator()(int c, int y, int x) const { return data_[c * plane_size() + Eigen::Index(y) * w_ + x]; }

  Vector& data() { return data_; }
  const Vector& data() const { return data_; }

  bool same_shape(const TensorT& o) const { return c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }
  void set_zero() { data_.setZero(); }

 private:
  int c_ = 0, h_ = 0, w_ = 0;
  Vector data_;
};

using Tensor = TensorT<double>;

/// Square same-padded convolution: kernel laid out (out, in, kh, kw).
template <typename Scalar>
struct ConvLayerT {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  int out = 0;
  int in = 0;
  int k = 3;
  Vector kernel;
  Vector bias;

  ConvLayerT() = default;
  ConvLayerT(int out_ch, int in_ch, int ksize)
      : out(out_ch), in(in_ch), k(ksize),
        kernel(Vector::Zero(Eigen::Index(out_ch) * in_ch * ksize * ksize)), bias(Vector::Zero(out_ch)) {}

  Eigen::Index kernel_index(int o, int i, int kh, int kw) const {
    return ((Eigen::Index(o) * in + i) * k + kh) * k + kw;
  }
  int fan_in() const { return in * k * k; }
  ConvLayerT zeros_like() const { return ConvLayerT(out, in, k); }
};

using ConvLayer = ConvLayerT<double>;

namespace detail {

/// Overlap of the output plane with the input plane shifted by (dy, dx).
struct Window {
  int y0, x0, rows, cols;
};

inline Window overlap(int h, int w, int dy, int dx) {
  const int y0 = std::max(0, -dy), y1 = std::min(h, h - dy);
  const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
  return {y0, x0, std::max(0, y1 - y0), std::max(0, x1 - x0)};
}

}  // namespace detail

/// Zero-padded convolution. Each output element accumulates its terms in
/// (input channel, kernel row, kernel column) order and then adds the bias,
/// so results are reproducible bit for bit.
template <typename Scalar>
TensorT<Scalar> conv_forward(const ConvLayerT<Scalar>& layer, const TensorT<Scalar>& input) {
  assert(input.channels() == layer.in);
  const int h = input.height(), w = input.width(), r = layer.k / 2;
  TensorT<Scalar> output(layer.out, h, w);
  for (int o = 0; o < layer.out; ++o) {
    auto acc = output.channel(o);
    for (int i = 0; i < layer.in; ++i) {
      const auto src = input.channel(i);
      for (int kh = 0; kh < layer.k; ++kh) {
        for (int kw = 0; kw < layer.k; ++kw) {
          const Scalar wgt = layer.kernel[layer.kernel_index(o, i, kh, kw)];
          const int dy = kh - r, dx = kw - r;
          const auto win = detail::overlap(h, w, dy, dx);
          if (win.rows == 0 || win.cols == 0) continue;
          acc.block(win.y0, win.x0, win.rows, win.cols) +=
              wgt * src.block(win.y0 + dy, win.x0 + dx, win.rows, win.cols);
        }
      }
    }
    acc.array() += layer.bias[o];
  }
  return output;
}

/// Accumulates parameter gradients into `grad` and returns dL/d(input) when
/// `want_input_grad` is set (an empty tensor otherwise).
template <typename Scalar>
TensorT<Scalar> conv_backward(const ConvLayerT<Scalar>& layer, const TensorT<Scalar>& input,
                              const TensorT<Scalar>& grad_out, ConvLayerT<Scalar>& grad,
                              bool want_input_grad = true) {
  const int h = input.height(), w = input.width(), r = layer.k / 2;
  TensorT<Scalar> grad_in;
  if (want_input_grad) grad_in = TensorT<Scalar>(layer.in, h, w);
  for (int o = 0; o < layer.out; ++o) {
    const auto go = grad_out.channel(o);
    grad.bias[o] += go.sum();
    for (int i = 0; i < layer.in; ++i) {
      const auto src = input.channel(i);
      for (int kh = 0; kh < layer.k; ++kh) {
        for (int kw = 0; kw < layer.k; ++kw) {
          const int dy = kh - r, dx = kw - r;
          const auto win = detail::overlap(h, w, dy, dx);
          if (win.rows == 0 || win.cols == 0) continue;
          const auto go_blk = go.block(win.y0, win.x0, win.rows, win.cols);
          const auto idx = layer.kernel_index(o, i, kh, kw);
          grad.kernel[idx] +=
              go_blk.cwiseProduct(src.block(win.y0 + dy, win.x0 + dx, win.rows, win.cols)).sum();
          if (want_input_grad)
            grad_in.channel(i).block(win.y0 + dy, win.x0 + dx, win.rows, win.cols) += layer.kernel[idx] * go_blk;
        }
      }
    }
  }
  return grad_in;
}

template <typename Scalar>
void relu_inplace(TensorT<Scalar>& t) {
  t.data() = t.data().cwiseMax(Scalar(0));
}

/// Zeroes gradient entries where the post-activation value is not positive.
template <typename Scalar>
void relu_backward_inplace(const TensorT<Scalar>& activated, TensorT<Scalar>& grad) {
  grad.data() = (activated.data().array() > Scalar(0)).select(grad.data(), Scalar(0));
}

}  // namespace chc
