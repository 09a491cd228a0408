#pragma once

#include <cmath>
#include <stdexcept>

#include "hipmark/types.hpp"

namespace hipmark {

// Adaptive Wing loss parameters. The linear-tail constants A and C depend on
// the per-element ground-truth value, so they are computed elementwise.
struct AwingParams {
  double omega = 14.0;
  double theta = 0.5;
  double epsilon = 1.0;
  double alpha = 2.1;

  void validate() const {
    if (!(omega > 0.0)) throw std::invalid_argument("awing: omega must be > 0");
    if (!(theta > 0.0)) throw std::invalid_argument("awing: theta must be > 0");
    if (!(epsilon > 0.0)) throw std::invalid_argument("awing: epsilon must be > 0");
    if (!(alpha > 1.0))
      throw std::invalid_argument("awing: alpha must be > 1 so alpha - gt stays positive");
  }
};

struct HybridWeights {
  double w_heatmap = 1.0;  // W1
  double w_paf = 1.0;      // W2
  double w_mask = 10.0;    // mask amplification W

  void validate() const {
    if (w_heatmap < 0.0 || w_paf < 0.0 || w_mask < 0.0)
      throw std::invalid_argument("hybrid weights must be non-negative");
    if (!(w_heatmap + w_paf > 0.0))
      throw std::invalid_argument("hybrid weights must not both be zero");
  }
};

namespace detail {

template <typename Scalar>
inline Scalar awing_tail_slope(Scalar gt, const AwingParams& p) {
  // A = omega * (1/(1+(theta/eps)^(alpha-gt))) * (alpha-gt)
  //       * (theta/eps)^(alpha-gt-1) / eps
  const Scalar e = static_cast<Scalar>(p.alpha) - gt;
  const Scalar te = static_cast<Scalar>(p.theta / p.epsilon);
  const Scalar pow_e = std::pow(te, e);
  return static_cast<Scalar>(p.omega) * (Scalar(1) / (Scalar(1) + pow_e)) * e *
         std::pow(te, e - Scalar(1)) / static_cast<Scalar>(p.epsilon);
}

template <typename Scalar>
inline Scalar awing_tail_offset(Scalar gt, Scalar A, const AwingParams& p) {
  // C = theta * A - omega * ln(1 + (theta/eps)^(alpha-gt))
  const Scalar e = static_cast<Scalar>(p.alpha) - gt;
  const Scalar te = static_cast<Scalar>(p.theta / p.epsilon);
  return static_cast<Scalar>(p.theta) * A -
         static_cast<Scalar>(p.omega) * std::log(Scalar(1) + std::pow(te, e));
}

}  // namespace detail

template <typename Scalar>
inline Scalar awing_scalar(Scalar pred, Scalar gt, const AwingParams& p) {
  const Scalar d = std::abs(pred - gt);
  const Scalar e = static_cast<Scalar>(p.alpha) - gt;
  if (d <= static_cast<Scalar>(p.theta)) {
    return static_cast<Scalar>(p.omega) *
           std::log(Scalar(1) + std::pow(d / static_cast<Scalar>(p.epsilon), e));
  }
  const Scalar A = detail::awing_tail_slope(gt, p);
  const Scalar C = detail::awing_tail_offset(gt, A, p);
  return A * d - C;
}

// d(loss)/d(pred) for one element.
template <typename Scalar>
inline Scalar awing_grad_scalar(Scalar pred, Scalar gt, const AwingParams& p) {
  const Scalar diff = pred - gt;
  const Scalar d = std::abs(diff);
  if (d == Scalar(0)) return Scalar(0);
  const Scalar sign = diff > Scalar(0) ? Scalar(1) : Scalar(-1);
  const Scalar e = static_cast<Scalar>(p.alpha) - gt;
  if (d <= static_cast<Scalar>(p.theta)) {
    const Scalar de = d / static_cast<Scalar>(p.epsilon);
    const Scalar pw = std::pow(de, e - Scalar(1));
    return static_cast<Scalar>(p.omega) * e * pw /
           (static_cast<Scalar>(p.epsilon) * (Scalar(1) + pw * de)) * sign;
  }
  return detail::awing_tail_slope(gt, p) * sign;
}

// Elementwise Adaptive Wing loss grid.
template <typename Scalar>
MatrixX<Scalar> awing(const MatrixX<Scalar>& pred, const MatrixX<Scalar>& gt,
                      const AwingParams& p) {
  p.validate();
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols())
    throw std::invalid_argument("awing: shape mismatch");
  if (gt.size() > 0 && (gt.minCoeff() < Scalar(0) || gt.maxCoeff() > Scalar(1)))
    throw std::invalid_argument("awing: gt must lie in [0,1]");
  MatrixX<Scalar> out(pred.rows(), pred.cols());
  for (Eigen::Index i = 0; i < pred.size(); ++i)
    out.data()[i] = awing_scalar(pred.data()[i], gt.data()[i], p);
  return out;
}

template <typename Scalar>
Scalar awing_mean(const MatrixX<Scalar>& pred, const MatrixX<Scalar>& gt,
                  const AwingParams& p) {
  return awing(pred, gt, p).mean();
}

// Mean of L * (W*mask + 1); gradient optionally accumulated into grad_pred.
template <typename Scalar>
Scalar masked_awing(const MatrixX<Scalar>& pred, const MatrixX<Scalar>& gt,
                    const MatrixX<Scalar>& mask, const AwingParams& p, double w_mask,
                    MatrixX<Scalar>* grad_pred = nullptr) {
  p.validate();
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols() || pred.rows() != mask.rows() ||
      pred.cols() != mask.cols())
    throw std::invalid_argument("masked_awing: shape mismatch");
  if (gt.size() > 0 && (gt.minCoeff() < Scalar(0) || gt.maxCoeff() > Scalar(1)))
    throw std::invalid_argument("masked_awing: gt must lie in [0,1]");
  const Scalar n = static_cast<Scalar>(pred.size());
  if (grad_pred) grad_pred->resize(pred.rows(), pred.cols());
  Scalar total = 0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const Scalar weight = static_cast<Scalar>(w_mask) * mask.data()[i] + Scalar(1);
    total += awing_scalar(pred.data()[i], gt.data()[i], p) * weight;
    if (grad_pred)
      grad_pred->data()[i] = awing_grad_scalar(pred.data()[i], gt.data()[i], p) * weight / n;
  }
  return total / n;
}

template <typename Scalar>
Scalar paf_mse(const MatrixX<Scalar>& pred, const MatrixX<Scalar>& gt,
               MatrixX<Scalar>* grad_pred = nullptr) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols())
    throw std::invalid_argument("paf_mse: shape mismatch");
  const Scalar n = static_cast<Scalar>(pred.size());
  if (grad_pred) *grad_pred = Scalar(2) / n * (pred - gt);
  return (pred - gt).squaredNorm() / n;
}

// Plain MSE on heatmaps, kept only for the convergence comparison runs.
template <typename Scalar>
Scalar heatmap_mse(const MatrixX<Scalar>& pred, const MatrixX<Scalar>& gt,
                   MatrixX<Scalar>* grad_pred = nullptr) {
  return paf_mse(pred, gt, grad_pred);
}

template <typename Scalar>
struct HybridLossValue {
  Scalar total = 0;
  Scalar heatmap_term = 0;  // masked awing (or mse in comparison mode)
  Scalar paf_term = 0;
};

template <typename Scalar>
HybridLossValue<Scalar> hybrid_loss(const MatrixX<Scalar>& pred_hm, const MatrixX<Scalar>& gt_hm,
                                    const MatrixX<Scalar>& mask, const MatrixX<Scalar>& pred_paf,
                                    const MatrixX<Scalar>& gt_paf, const AwingParams& p,
                                    const HybridWeights& w,
                                    MatrixX<Scalar>* grad_hm = nullptr,
                                    MatrixX<Scalar>* grad_paf = nullptr) {
  w.validate();
  HybridLossValue<Scalar> v;
  v.heatmap_term = masked_awing(pred_hm, gt_hm, mask, p, w.w_mask, grad_hm);
  v.paf_term = paf_mse(pred_paf, gt_paf, grad_paf);
  v.total = static_cast<Scalar>(w.w_heatmap) * v.heatmap_term +
            static_cast<Scalar>(w.w_paf) * v.paf_term;
  if (grad_hm) *grad_hm *= static_cast<Scalar>(w.w_heatmap);
  if (grad_paf) *grad_paf *= static_cast<Scalar>(w.w_paf);
  return v;
}

}  // namespace hipmark
