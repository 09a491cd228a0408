#pragma once

#include <functional>
#include <string>

#include "hipmark/net/model.hpp"

namespace hipmark::net {

struct GradCheckResult {
  int checked = 0;
  int failures = 0;
  double worst_rel = 0.0;
  std::string worst_param;
};

// Central-difference check of every parameter against `loss(net)`, which must
// run a full forward pass and return the scalar loss. The analytic gradients
// must already be accumulated by a backward pass at the unperturbed point.
// Differences below the floating-point noise floor of the central difference
// itself (eps * |loss| / h) cannot be resolved and are accepted; gradients
// that are structurally zero (e.g. conv biases normalized away by a following
// group norm) land there.
template <typename S>
GradCheckResult gradient_check(LandmarkNet<S>& net,
                               const std::function<double(LandmarkNet<S>&)>& loss,
                               double rel_tol, double h_base = 1e-5) {
  GradCheckResult res;
  const double loss_scale = std::max(1.0, std::abs(loss(net)));
  constexpr double kEps = 2.2e-16;
  for (Param<S>* p : net.parameters()) {
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      const S keep = p->value.data()[i];
      const double h = h_base * std::max(1.0, std::abs(static_cast<double>(keep)));
      p->value.data()[i] = keep + static_cast<S>(h);
      const double up = loss(net);
      p->value.data()[i] = keep - static_cast<S>(h);
      const double dn = loss(net);
      p->value.data()[i] = keep;
      const double fd = (up - dn) / (2.0 * h);
      const double an = static_cast<double>(p->grad.data()[i]);
      const double scale = std::max({std::abs(fd), std::abs(an), 1e-6});
      const double rel = std::abs(fd - an) / scale;
      const double noise_floor = 20.0 * kEps * loss_scale / h;
      ++res.checked;
      const bool ok = std::abs(fd - an) <= noise_floor || rel <= rel_tol;
      if (!ok) ++res.failures;
      if (std::abs(fd - an) > noise_floor && rel > res.worst_rel) {
        res.worst_rel = rel;
        res.worst_param = p->name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return res;
}

}  // namespace hipmark::net
