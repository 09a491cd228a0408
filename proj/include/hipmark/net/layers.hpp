#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "hipmark/rng.hpp"
#include "hipmark/types.hpp"

namespace hipmark::net {

template <typename S>
using Feature = PlaneStack<S>;

template <typename S>
struct Param {
  std::string name;
  MatrixX<S> value;
  MatrixX<S> grad;

  void init_zero(int r, int c) {
    value.setZero(r, c);
    grad.setZero(r, c);
  }
  void zero_grad() { grad.setZero(); }
  Eigen::Index size() const { return value.size(); }
};

template <typename S>
using ParamRefs = std::vector<Param<S>*>;

// ---------------------------------------------------------------------------

template <typename S>
struct Conv2d {
  int cin = 0, cout = 0, k = 1, stride = 1, pad = 0;
  Param<S> w;  // cout x (cin*k*k)
  Param<S> b;  // cout x 1

  // caches
  MatrixX<S> cols_;  // (cin*k*k) x (oh*ow); equals the input for 1x1/s1
  int in_h_ = 0, in_w_ = 0, out_h_ = 0, out_w_ = 0;

  void init(const std::string& name, int cin_, int cout_, int k_, int stride_, int pad_,
            Rng& rng) {
    cin = cin_;
    cout = cout_;
    k = k_;
    stride = stride_;
    pad = pad_;
    w.name = name + ".w";
    b.name = name + ".b";
    w.init_zero(cout, cin * k * k);
    b.init_zero(cout, 1);
    const double std_dev = std::sqrt(2.0 / (cin * k * k));
    for (Eigen::Index i = 0; i < w.value.size(); ++i)
      w.value.data()[i] = static_cast<S>(rng.normal(0.0, std_dev));
  }

  void collect(ParamRefs<S>& out) {
    out.push_back(&w);
    out.push_back(&b);
  }

  Feature<S> forward(const Feature<S>& x) {
    if (x.channels != cin)
      throw std::runtime_error("conv " + w.name + ": expected " + std::to_string(cin) +
                               " input channels, got " + std::to_string(x.channels));
    in_h_ = x.height;
    in_w_ = x.width;
    out_h_ = (x.height + 2 * pad - k) / stride + 1;
    out_w_ = (x.width + 2 * pad - k) / stride + 1;
    Feature<S> y(cout, out_h_, out_w_);

    if (k == 1 && stride == 1 && pad == 0)
      cols_ = x.data;
    else
      im2col(x);
    y.data.noalias() = w.value * cols_;
    y.data.colwise() += b.value.col(0);
    return y;
  }

  Feature<S> backward(const Feature<S>& dy) {
    b.grad.col(0) += dy.data.rowwise().sum();
    w.grad.noalias() += dy.data * cols_.transpose();
    Feature<S> dx(cin, in_h_, in_w_);
    if (k == 1 && stride == 1 && pad == 0)
      dx.data.noalias() = w.value.transpose() * dy.data;
    else
      col2im(w.value.transpose() * dy.data, dx);
    return dx;
  }

 private:
  void im2col(const Feature<S>& x) {
    cols_.resize(cin * k * k, out_h_ * out_w_);
    for (int c = 0; c < cin; ++c) {
      const S* src_plane = x.data.row(c).data();
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          const int row = (c * k + ky) * k + kx;
          S* dst = cols_.row(row).data();
          for (int oy = 0; oy < out_h_; ++oy, dst += out_w_) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= in_h_) {
              std::fill(dst, dst + out_w_, S(0));
              continue;
            }
            const S* src_row = src_plane + iy * in_w_;
            for (int ox = 0; ox < out_w_; ++ox) {
              const int ix = ox * stride + kx - pad;
              dst[ox] = (ix >= 0 && ix < in_w_) ? src_row[ix] : S(0);
            }
          }
        }
    }
  }

  void col2im(const MatrixX<S>& dcols, Feature<S>& dx) const {
    dx.data.setZero();
    for (int c = 0; c < cin; ++c) {
      S* dst_plane = dx.data.row(c).data();
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          const int row = (c * k + ky) * k + kx;
          const S* src = dcols.row(row).data();
          for (int oy = 0; oy < out_h_; ++oy, src += out_w_) {
            const int iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= in_h_) continue;
            S* dst_row = dst_plane + iy * in_w_;
            for (int ox = 0; ox < out_w_; ++ox) {
              const int ix = ox * stride + kx - pad;
              if (ix >= 0 && ix < in_w_) dst_row[ix] += src[ox];
            }
          }
        }
    }
  }
};

// ---------------------------------------------------------------------------

template <typename S>
struct GroupNorm {
  int channels = 0, groups = 1;
  double eps = 1e-5;
  Param<S> gamma, beta;

  // caches
  MatrixX<S> xhat_;
  std::vector<S> inv_std_;
  int h_ = 0, w_ = 0;

  void init(const std::string& name, int channels_, Rng&) {
    channels = channels_;
    groups = std::min(8, channels);
    while (channels % groups != 0) --groups;
    gamma.name = name + ".gamma";
    beta.name = name + ".beta";
    gamma.init_zero(channels, 1);
    gamma.value.setOnes();
    beta.init_zero(channels, 1);
  }

  void collect(ParamRefs<S>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
  }

  Feature<S> forward(const Feature<S>& x) {
    h_ = x.height;
    w_ = x.width;
    const int per = channels / groups;
    const Eigen::Index hw = x.data.cols();
    xhat_.resize(channels, hw);
    inv_std_.assign(groups, S(0));
    Feature<S> y(channels, h_, w_);
    for (int g = 0; g < groups; ++g) {
      auto block = x.data.middleRows(g * per, per);
      const S mu = block.mean();
      const S var = (block.array() - mu).square().mean();
      const S inv = S(1) / std::sqrt(var + static_cast<S>(eps));
      inv_std_[g] = inv;
      xhat_.middleRows(g * per, per) = (block.array() - mu) * inv;
    }
    for (int c = 0; c < channels; ++c)
      y.data.row(c) = gamma.value(c, 0) * xhat_.row(c).array() + beta.value(c, 0);
    return y;
  }

  Feature<S> backward(const Feature<S>& dy) {
    const int per = channels / groups;
    const Eigen::Index hw = dy.data.cols();
    Feature<S> dx(channels, h_, w_);
    MatrixX<S> dxhat(channels, hw);
    for (int c = 0; c < channels; ++c) {
      beta.grad(c, 0) += dy.data.row(c).sum();
      gamma.grad(c, 0) += dy.data.row(c).dot(xhat_.row(c));
      dxhat.row(c) = gamma.value(c, 0) * dy.data.row(c);
    }
    const S m = static_cast<S>(per * hw);
    for (int g = 0; g < groups; ++g) {
      auto dxh = dxhat.middleRows(g * per, per);
      auto xh = xhat_.middleRows(g * per, per);
      const S sum_dxh = dxh.sum();
      const S sum_dxh_xh = (dxh.array() * xh.array()).sum();
      dx.data.middleRows(g * per, per) =
          inv_std_[g] *
          (dxh.array() - sum_dxh / m - xh.array() * (sum_dxh_xh / m)).matrix();
    }
    return dx;
  }
};

// ---------------------------------------------------------------------------

template <typename S>
struct Relu {
  MatrixX<S> mask_;

  Feature<S> forward(const Feature<S>& x) {
    Feature<S> y = x;
    mask_ = (x.data.array() > S(0)).template cast<S>();
    y.data = x.data.cwiseProduct(mask_);
    return y;
  }

  Feature<S> backward(const Feature<S>& dy) {
    Feature<S> dx = dy;
    dx.data = dy.data.cwiseProduct(mask_);
    return dx;
  }
};

// ---------------------------------------------------------------------------

template <typename S>
struct NearestUpsample {
  int factor = 2;
  int in_h_ = 0, in_w_ = 0;

  Feature<S> forward(const Feature<S>& x) {
    in_h_ = x.height;
    in_w_ = x.width;
    Feature<S> y(x.channels, x.height * factor, x.width * factor);
    for (int c = 0; c < x.channels; ++c)
      for (int oy = 0; oy < y.height; ++oy)
        for (int ox = 0; ox < y.width; ++ox)
          y.data(c, oy * y.width + ox) = x.data(c, (oy / factor) * x.width + ox / factor);
    return y;
  }

  Feature<S> backward(const Feature<S>& dy) {
    Feature<S> dx(dy.channels, in_h_, in_w_);
    for (int c = 0; c < dy.channels; ++c)
      for (int oy = 0; oy < dy.height; ++oy)
        for (int ox = 0; ox < dy.width; ++ox)
          dx.data(c, (oy / factor) * in_w_ + ox / factor) += dy.data(c, oy * dy.width + ox);
    return dx;
  }
};

template <typename S>
struct AvgPool {
  int factor = 2;
  int in_h_ = 0, in_w_ = 0;

  Feature<S> forward(const Feature<S>& x) {
    if (x.height % factor != 0 || x.width % factor != 0)
      throw std::runtime_error("avgpool: spatial size not divisible by factor");
    in_h_ = x.height;
    in_w_ = x.width;
    Feature<S> y(x.channels, x.height / factor, x.width / factor);
    const S inv = S(1) / static_cast<S>(factor * factor);
    for (int c = 0; c < x.channels; ++c)
      for (int oy = 0; oy < y.height; ++oy)
        for (int ox = 0; ox < y.width; ++ox) {
          S acc = 0;
          for (int dy = 0; dy < factor; ++dy)
            for (int dx = 0; dx < factor; ++dx)
              acc += x.data(c, (oy * factor + dy) * x.width + ox * factor + dx);
          y.data(c, oy * y.width + ox) = acc * inv;
        }
    return y;
  }

  Feature<S> backward(const Feature<S>& dy) {
    Feature<S> dx(dy.channels, in_h_, in_w_);
    const S inv = S(1) / static_cast<S>(factor * factor);
    for (int c = 0; c < dy.channels; ++c)
      for (int oy = 0; oy < dy.height; ++oy)
        for (int ox = 0; ox < dy.width; ++ox) {
          const S g = dy.data(c, oy * dy.width + ox) * inv;
          for (int fy = 0; fy < factor; ++fy)
            for (int fx = 0; fx < factor; ++fx)
              dx.data(c, (oy * factor + fy) * in_w_ + ox * factor + fx) += g;
        }
    return dx;
  }
};

}  // namespace hipmark::net
