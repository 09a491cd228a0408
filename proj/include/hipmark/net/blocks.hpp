#pragma once

#include "hipmark/net/layers.hpp"

namespace hipmark::net {

template <typename S>
struct BasicBlock {
  Conv2d<S> conv1, conv2;
  GroupNorm<S> gn1, gn2;
  Relu<S> relu1, relu_out;
  MatrixX<S> x_cache_;

  void init(const std::string& name, int channels, Rng& rng) {
    conv1.init(name + ".conv1", channels, channels, 3, 1, 1, rng);
    gn1.init(name + ".gn1", channels, rng);
    conv2.init(name + ".conv2", channels, channels, 3, 1, 1, rng);
    gn2.init(name + ".gn2", channels, rng);
  }

  void collect(ParamRefs<S>& out) {
    conv1.collect(out);
    gn1.collect(out);
    conv2.collect(out);
    gn2.collect(out);
  }

  Feature<S> forward(const Feature<S>& x) {
    Feature<S> f = relu1.forward(gn1.forward(conv1.forward(x)));
    f = gn2.forward(conv2.forward(f));
    f.data += x.data;  // residual
    return relu_out.forward(f);
  }

  Feature<S> backward(const Feature<S>& dy) {
    Feature<S> d = relu_out.backward(dy);
    Feature<S> dres = d;  // residual path
    d = conv1.backward(gn1.backward(relu1.backward(conv2.backward(gn2.backward(d)))));
    d.data += dres.data;
    return d;
  }
};

// Channel gate: softmax-pooled global context squeezed back to per-channel
// sigmoid weights. Output is x scaled per channel.
template <typename S>
struct ChannelGate {
  int channels = 0, inner = 0;
  Conv2d<S> wv, wq;   // 1x1 convs as GEMMs
  Param<S> wz, bz;    // channels x inner, channels x 1

  // caches
  MatrixX<S> v_, q_, z_, gate_, x_;

  void init(const std::string& name, int channels_, Rng& rng) {
    channels = channels_;
    inner = std::max(1, channels / 2);
    wv.init(name + ".wv", channels, inner, 1, 1, 0, rng);
    wq.init(name + ".wq", channels, 1, 1, 1, 0, rng);
    wz.name = name + ".wz";
    bz.name = name + ".bz";
    wz.init_zero(channels, inner);
    const double std_dev = std::sqrt(2.0 / inner);
    for (Eigen::Index i = 0; i < wz.value.size(); ++i)
      wz.value.data()[i] = static_cast<S>(rng.normal(0.0, std_dev));
    bz.init_zero(channels, 1);
  }

  void collect(ParamRefs<S>& out) {
    wv.collect(out);
    wq.collect(out);
    out.push_back(&wz);
    out.push_back(&bz);
  }

  Feature<S> forward(const Feature<S>& x) {
    x_ = x.data;
    v_ = wv.forward(x).data;                      // inner x HW
    MatrixX<S> s = wq.forward(x).data;            // 1 x HW
    q_ = (s.array() - s.maxCoeff()).exp().matrix();
    q_ /= q_.sum();                               // softmax over positions
    z_ = v_ * q_.transpose();                     // inner x 1
    MatrixX<S> u = wz.value * z_ + bz.value;      // channels x 1
    gate_ = (S(1) / (S(1) + (-u.array()).exp())).matrix();
    Feature<S> y(x.channels, x.height, x.width);
    for (int c = 0; c < x.channels; ++c) y.data.row(c) = x.data.row(c) * gate_(c, 0);
    return y;
  }

  Feature<S> backward(const Feature<S>& dy) {
    const int hw = static_cast<int>(dy.data.cols());
    Feature<S> dx(channels, dy.height, dy.width);
    MatrixX<S> dgate(channels, 1);
    for (int c = 0; c < channels; ++c) {
      dx.data.row(c) = dy.data.row(c) * gate_(c, 0);
      dgate(c, 0) = dy.data.row(c).dot(x_.row(c));
    }
    const MatrixX<S> du =
        dgate.cwiseProduct(gate_.cwiseProduct(MatrixX<S>::Ones(channels, 1) - gate_));
    wz.grad.noalias() += du * z_.transpose();
    bz.grad += du;
    const MatrixX<S> dz = wz.value.transpose() * du;          // inner x 1
    const MatrixX<S> dv = dz * q_;                            // inner x HW
    MatrixX<S> dq = v_.transpose() * dz;                      // HW x 1
    const S dot = q_.row(0).dot(dq.col(0));
    MatrixX<S> ds(1, hw);
    for (int p = 0; p < hw; ++p) ds(0, p) = q_(0, p) * (dq(p, 0) - dot);

    Feature<S> dv_feat(inner, dy.height, dy.width);
    dv_feat.data = dv;
    Feature<S> ds_feat(1, dy.height, dy.width);
    ds_feat.data = ds;
    dx.data += wv.backward(dv_feat).data;
    dx.data += wq.backward(ds_feat).data;
    return dx;
  }
};

// Spatial gate: softmax-normalized channel context dotted against a value
// map, squashed to a per-position sigmoid weight.
template <typename S>
struct SpatialGate {
  int channels = 0, inner = 0;
  Conv2d<S> wv, wq;

  // caches
  MatrixX<S> v_, q_, gate_, x_;

  void init(const std::string& name, int channels_, Rng& rng) {
    channels = channels_;
    inner = std::max(1, channels / 2);
    wv.init(name + ".wv", channels, inner, 1, 1, 0, rng);
    wq.init(name + ".wq", channels, inner, 1, 1, 0, rng);
  }

  void collect(ParamRefs<S>& out) {
    wv.collect(out);
    wq.collect(out);
  }

  Feature<S> forward(const Feature<S>& x) {
    x_ = x.data;
    v_ = wv.forward(x).data;                       // inner x HW
    const MatrixX<S> t = wq.forward(x).data;       // inner x HW
    MatrixX<S> pooled = t.rowwise().mean();        // inner x 1
    q_ = (pooled.array() - pooled.maxCoeff()).exp().matrix();
    q_ /= q_.sum();                                // softmax over channels
    MatrixX<S> a = q_.transpose() * v_;            // 1 x HW
    gate_ = (S(1) / (S(1) + (-a.array()).exp())).matrix();
    Feature<S> y(x.channels, x.height, x.width);
    for (int c = 0; c < x.channels; ++c)
      y.data.row(c) = x.data.row(c).cwiseProduct(gate_.row(0));
    return y;
  }

  Feature<S> backward(const Feature<S>& dy) {
    const int hw = static_cast<int>(dy.data.cols());
    Feature<S> dx(channels, dy.height, dy.width);
    MatrixX<S> dgate(1, hw);
    dgate.setZero();
    for (int c = 0; c < channels; ++c) {
      dx.data.row(c) = dy.data.row(c).cwiseProduct(gate_.row(0));
      dgate.row(0) += dy.data.row(c).cwiseProduct(x_.row(c));
    }
    const MatrixX<S> da =
        dgate.cwiseProduct(gate_.cwiseProduct(MatrixX<S>::Ones(1, hw) - gate_));
    const MatrixX<S> dv = q_ * da;                 // inner x HW
    MatrixX<S> dq = v_ * da.transpose();           // inner x 1
    const S dot = (q_.col(0).cwiseProduct(dq.col(0))).sum();
    MatrixX<S> dpool(inner, 1);
    for (int i = 0; i < inner; ++i) dpool(i, 0) = q_(i, 0) * (dq(i, 0) - dot);
    MatrixX<S> dt = (dpool / static_cast<S>(hw)).replicate(1, hw);

    Feature<S> dv_feat(inner, dy.height, dy.width);
    dv_feat.data = dv;
    Feature<S> dt_feat(inner, dy.height, dy.width);
    dt_feat.data = dt;
    dx.data += wv.backward(dv_feat).data;
    dx.data += wq.backward(dt_feat).data;
    return dx;
  }
};

// Spatial-fusion block: stacks normalized coordinate channels (x, y in
// [-1,1], radius in [0,1]) and optionally an intermediate heatmap prediction,
// fuses with a 1x1 convolution, applies the channel-then-spatial polarized
// gates, and adds the result back onto the input.
template <typename S>
struct SpatialFusionBlock {
  int channels = 0;
  int feedback_channels = 0;  // 0 disables the intermediate-prediction stack
  Conv2d<S> inter_head;       // channels -> feedback_channels
  Conv2d<S> fuse;             // channels+3+feedback -> channels
  Relu<S> fuse_relu;
  ChannelGate<S> channel_gate;
  SpatialGate<S> spatial_gate;

  void init(const std::string& name, int channels_, int feedback_channels_, Rng& rng) {
    channels = channels_;
    feedback_channels = feedback_channels_;
    if (feedback_channels > 0)
      inter_head.init(name + ".inter_head", channels, feedback_channels, 1, 1, 0, rng);
    fuse.init(name + ".fuse", channels + 3 + feedback_channels, channels, 1, 1, 0, rng);
    channel_gate.init(name + ".cgate", channels, rng);
    spatial_gate.init(name + ".sgate", channels, rng);
  }

  void collect(ParamRefs<S>& out) {
    if (feedback_channels > 0) inter_head.collect(out);
    fuse.collect(out);
    channel_gate.collect(out);
    spatial_gate.collect(out);
  }

  static Feature<S> coordinate_channels(int h, int w) {
    Feature<S> c(3, h, w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double xn = w > 1 ? 2.0 * x / (w - 1) - 1.0 : 0.0;
        const double yn = h > 1 ? 2.0 * y / (h - 1) - 1.0 : 0.0;
        c.at(0, y, x) = static_cast<S>(xn);
        c.at(1, y, x) = static_cast<S>(yn);
        c.at(2, y, x) = static_cast<S>(std::sqrt(xn * xn + yn * yn) / std::sqrt(2.0));
      }
    return c;
  }

  Feature<S> forward(const Feature<S>& x) {
    const int h = x.height, w = x.width;
    Feature<S> cat(channels + 3 + feedback_channels, h, w);
    cat.data.topRows(channels) = x.data;
    const Feature<S> coords = coordinate_channels(h, w);
    cat.data.middleRows(channels, 3) = coords.data;
    if (feedback_channels > 0)
      cat.data.bottomRows(feedback_channels) = inter_head.forward(x).data;
    Feature<S> f = fuse_relu.forward(fuse.forward(cat));
    Feature<S> gated = spatial_gate.forward(channel_gate.forward(f));
    gated.data += x.data;  // residual path
    return gated;
  }

  Feature<S> backward(const Feature<S>& dy) {
    Feature<S> d = channel_gate.backward(spatial_gate.backward(dy));
    const Feature<S> dcat = fuse.backward(fuse_relu.backward(d));
    Feature<S> dx(channels, dy.height, dy.width);
    dx.data = dy.data;  // residual
    dx.data += dcat.data.topRows(channels);
    if (feedback_channels > 0) {
      Feature<S> dfeed(feedback_channels, dy.height, dy.width);
      dfeed.data = dcat.data.bottomRows(feedback_channels);
      dx.data += inter_head.backward(dfeed).data;
    }
    return dx;
  }
};

}  // namespace hipmark::net
