#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "hipmark/landmarks.hpp"
#include "hipmark/types.hpp"

namespace hipmark {

// Bilinear sample of one plane at fractional cell coordinates; points outside
// the cell domain contribute zero.
template <typename Scalar>
Scalar bilinear_at(const PlaneStack<Scalar>& stack, int channel, double cx, double cy) {
  const int w = stack.width, h = stack.height;
  if (cx < 0.0 || cy < 0.0 || cx > w - 1 || cy > h - 1) return Scalar(0);
  const int x0 = std::min(static_cast<int>(std::floor(cx)), w - 2 >= 0 ? w - 2 : 0);
  const int y0 = std::min(static_cast<int>(std::floor(cy)), h - 2 >= 0 ? h - 2 : 0);
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fx = cx - x0;
  const double fy = cy - y0;
  const Scalar v00 = stack.at(channel, y0, x0);
  const Scalar v01 = stack.at(channel, y0, x1);
  const Scalar v10 = stack.at(channel, y1, x0);
  const Scalar v11 = stack.at(channel, y1, x1);
  return static_cast<Scalar>((1 - fx) * (1 - fy) * v00 + fx * (1 - fy) * v01 +
                             (1 - fx) * fy * v10 + fx * fy * v11);
}

struct DecodedLandmark {
  int gid = -1;
  double x = 0.0;  // input-image px
  double y = 0.0;
  double score = 0.0;
  bool flagged = false;  // flat channel, position is a fallback
};

// Argmax cell per channel with a quarter-cell shift toward the larger
// neighbour on each axis; flat channels fall back to the grid centroid.
template <typename Scalar>
std::vector<DecodedLandmark> decode_landmarks(const PlaneStack<Scalar>& heatmaps, int stride) {
  std::vector<DecodedLandmark> out;
  out.reserve(heatmaps.channels);
  const int h = heatmaps.height, w = heatmaps.width;
  for (int k = 0; k < heatmaps.channels; ++k) {
    DecodedLandmark d;
    d.gid = k;
    Scalar best = heatmaps.at(k, 0, 0);
    Scalar lo = best;
    int bx = 0, by = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const Scalar v = heatmaps.at(k, y, x);
        if (v > best) {
          best = v;
          bx = x;
          by = y;
        }
        if (v < lo) lo = v;
      }
    if (!(static_cast<double>(best - lo) > 1e-12)) {
      d.x = (w - 1) / 2.0 * stride;
      d.y = (h - 1) / 2.0 * stride;
      d.score = 0.0;
      d.flagged = true;
      out.push_back(d);
      continue;
    }
    double cx = bx, cy = by;
    const Scalar left = bx > 0 ? heatmaps.at(k, by, bx - 1) : Scalar(0);
    const Scalar right = bx < w - 1 ? heatmaps.at(k, by, bx + 1) : Scalar(0);
    if (right > left) cx += 0.25;
    else if (left > right) cx -= 0.25;
    const Scalar up = by > 0 ? heatmaps.at(k, by - 1, bx) : Scalar(0);
    const Scalar down = by < h - 1 ? heatmaps.at(k, by + 1, bx) : Scalar(0);
    if (down > up) cy += 0.25;
    else if (up > down) cy -= 0.25;
    d.x = cx * stride;
    d.y = cy * stride;
    d.score = static_cast<double>(best);
    out.push_back(d);
  }
  return out;
}

inline Point2 unit_direction(const Point2& a, const Point2& b) {
  const double n = norm2(a, b);
  if (!(n > 0.0))
    throw std::invalid_argument("unit_direction: degenerate segment (A == B)");
  return {(b.x - a.x) / n, (b.y - a.y) / n};
}

struct ProjectionWeight {
  double raw = 0.0;         // signed line integral, px units
  double normalized = 0.0;  // clamp(raw / |B-A|, 0, 1)
};

// Discretised line integral of the PAF pair projected on the A->B direction.
// Midpoint rule with n samples; endpoints are image-pixel coordinates, the
// field lives on the stride grid.
template <typename Scalar>
ProjectionWeight projection_weight(const PlaneStack<Scalar>& paf, int edge_index,
                                   const Point2& a, const Point2& b, int stride,
                                   int n_samples) {
  if (n_samples < 2) throw std::invalid_argument("projection_weight: n_samples must be >= 2");
  const Point2 dir = unit_direction(a, b);  // throws on A == B
  const double length = norm2(a, b);
  const double ds = length / n_samples;
  double acc = 0.0;
  for (int i = 0; i < n_samples; ++i) {
    const double t = (i + 0.5) / n_samples;
    const double px = a.x + t * (b.x - a.x);
    const double py = a.y + t * (b.y - a.y);
    const double vx = static_cast<double>(bilinear_at(paf, 2 * edge_index, px / stride, py / stride));
    const double vy = static_cast<double>(bilinear_at(paf, 2 * edge_index + 1, px / stride, py / stride));
    acc += vx * dir.x + vy * dir.y;
  }
  ProjectionWeight w;
  w.raw = acc * ds;
  w.normalized = std::clamp(w.raw / length, 0.0, 1.0);
  return w;
}

// U = -w * ln(w + eps). Reported verbatim; suppression gates on w itself
// because this expression is non-monotone over [0,1].
inline double entropy_uncertainty(double w_hat, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("entropy_uncertainty: eps must be > 0");
  return -w_hat * std::log(w_hat + eps);
}

struct UncertaintyVerdict {
  int gid = -1;
  double w_hat = 0.0;   // aggregated normalized projection weight
  double u = 0.0;       // entropy-form uncertainty
  bool keep = true;
  bool flagged = false;  // no incident edges: kept but unassessable
};

struct UncertaintyConfig {
  double tau = 0.3;
  double eps = 1e-6;
  int n_samples = 32;
};

// Per-landmark aggregation: mean of the incident edges' normalized
// projection weights; keep iff w_hat >= tau. The kept set may be smaller
// than 24 - that is the whole point on unstructured inputs.
template <typename Scalar>
std::vector<UncertaintyVerdict> aggregate_and_suppress(
    const std::vector<DecodedLandmark>& decoded, const SkeletonGraph& skeleton,
    const PlaneStack<Scalar>& paf, int stride, const UncertaintyConfig& cfg) {
  if (!(cfg.tau > 0.0 && cfg.tau < 1.0))
    throw std::invalid_argument("aggregate_and_suppress: tau must lie in (0,1)");
  std::vector<double> edge_w(skeleton.edge_count(), 0.0);
  std::vector<bool> edge_done(skeleton.edge_count(), false);

  auto edge_weight = [&](const SkeletonEdge& e) {
    if (edge_done[e.index]) return edge_w[e.index];
    edge_done[e.index] = true;
    const Point2 a{decoded[e.a].x, decoded[e.a].y};
    const Point2 b{decoded[e.b].x, decoded[e.b].y};
    double w = 0.0;
    if (norm2(a, b) > 0.0)
      w = projection_weight(paf, e.index, a, b, stride, cfg.n_samples).normalized;
    edge_w[e.index] = w;
    return w;
  };

  std::vector<UncertaintyVerdict> verdicts;
  verdicts.reserve(decoded.size());
  for (const auto& d : decoded) {
    UncertaintyVerdict v;
    v.gid = d.gid;
    double sum = 0.0;
    int deg = 0;
    for (const auto& e : skeleton.edges)
      if (e.a == d.gid || e.b == d.gid) {
        sum += edge_weight(e);
        ++deg;
      }
    if (deg == 0) {
      v.w_hat = 0.0;
      v.keep = true;
      v.flagged = true;
    } else {
      v.w_hat = sum / deg;
      v.keep = v.w_hat >= cfg.tau;
    }
    v.u = entropy_uncertainty(v.w_hat, cfg.eps);
    verdicts.push_back(v);
  }
  return verdicts;
}

inline std::vector<int> kept_ids(const std::vector<UncertaintyVerdict>& verdicts) {
  std::vector<int> out;
  for (const auto& v : verdicts)
    if (v.keep) out.push_back(v.gid);
  return out;
}

// Overlay markers on the input image: brightness follows w_hat; suppressed
// landmarks are drawn as boxed outlines in debug mode and omitted otherwise.
MatrixXd render_uncertainty_map(const std::vector<DecodedLandmark>& decoded,
                                const std::vector<UncertaintyVerdict>& verdicts,
                                const MatrixXd& image, bool debug_boxes = true);

}  // namespace hipmark
