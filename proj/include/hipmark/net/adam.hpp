#pragma once

#include <cmath>
#include <vector>

#include "hipmark/net/layers.hpp"

namespace hipmark::net {

template <typename S>
class Adam {
 public:
  explicit Adam(const ParamRefs<S>& params, double lr = 1e-3, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8)
      : params_(params), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (Param<S>* p : params_) {
      m_.push_back(MatrixX<S>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(MatrixX<S>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  // Applies one update from the accumulated gradients, scaled by 1/grad_scale
  // (use the batch size when gradients were summed over a batch).
  void step(double grad_scale = 1.0) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Param<S>& p = *params_[i];
      const MatrixX<S> g = p.grad / static_cast<S>(grad_scale);
      m_[i] = static_cast<S>(beta1_) * m_[i] + static_cast<S>(1.0 - beta1_) * g;
      v_[i] = static_cast<S>(beta2_) * v_[i] +
              static_cast<S>(1.0 - beta2_) * g.cwiseProduct(g);
      const MatrixX<S> mhat = m_[i] / static_cast<S>(bc1);
      const MatrixX<S> vhat = v_[i] / static_cast<S>(bc2);
      p.value -= (static_cast<S>(lr_) * mhat.array() /
                  (vhat.array().sqrt() + static_cast<S>(eps_)))
                     .matrix();
    }
  }

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  ParamRefs<S> params_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<MatrixX<S>> m_, v_;
};

}  // namespace hipmark::net
