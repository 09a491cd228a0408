#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "hipmark/landmarks.hpp"
#include "hipmark/types.hpp"

namespace hipmark {

// Training-target geometry. Landmark pixel coordinates map to output-grid
// cells as cell = px / stride, i.e. cell (i, j) sits at pixel (j*stride,
// i*stride). All encoders work in cell units.

struct EncodingConfig {
  int stride = 4;
  double sigma = 2.0;        // heatmap Gaussian, in cells
  double limb_width = 3.0;   // PAF band half-width, in cells
  double mask_threshold = 0.2;
  int mask_dilation = 1;     // Chebyshev radius, cells
};

template <typename Scalar>
struct TargetBundle {
  PlaneStack<Scalar> heatmaps;  // K channels
  PlaneStack<Scalar> paf;       // 2E channels
  PlaneStack<Scalar> mask;      // K channels, binary
  int stride = 4;
};

// Per-landmark Gaussian response, amplitude 1 at the (sub-cell) landmark
// location; invisible landmarks get an all-zero channel.
template <typename Scalar>
PlaneStack<Scalar> encode_heatmaps(const std::array<Landmark, kNumLandmarks>& landmarks,
                                   int out_h, int out_w, int stride, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("encode_heatmaps: sigma must be > 0");
  PlaneStack<Scalar> hm(kNumLandmarks, out_h, out_w);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int k = 0; k < kNumLandmarks; ++k) {
    if (!landmarks[k].visible) continue;
    const double cx = landmarks[k].x / stride;
    const double cy = landmarks[k].y / stride;
    for (int y = 0; y < out_h; ++y) {
      const double dy = y - cy;
      for (int x = 0; x < out_w; ++x) {
        const double dx = x - cx;
        hm.at(k, y, x) = static_cast<Scalar>(std::exp(-(dx * dx + dy * dy) * inv));
      }
    }
  }
  return hm;
}

// Two channels per edge holding the unit direction along the limb band;
// either endpoint invisible zeroes the pair. Overlapping writes to the same
// pair are averaged.
template <typename Scalar>
PlaneStack<Scalar> encode_paf(const std::array<Landmark, kNumLandmarks>& landmarks,
                              const SkeletonGraph& skeleton, int out_h, int out_w,
                              int stride, double limb_width,
                              std::vector<int>* degenerate_edges = nullptr) {
  if (!(limb_width > 0.0)) throw std::invalid_argument("encode_paf: limb_width must be > 0");
  const int E = skeleton.edge_count();
  PlaneStack<Scalar> paf(2 * E, out_h, out_w);
  MatrixX<Scalar> counts = MatrixX<Scalar>::Zero(E, out_h * out_w);

  for (const auto& e : skeleton.edges) {
    const Landmark& A = landmarks[e.a];
    const Landmark& B = landmarks[e.b];
    if (!A.visible || !B.visible) continue;
    const double ax = A.x / stride, ay = A.y / stride;
    const double bx = B.x / stride, by = B.y / stride;
    const double vx = bx - ax, vy = by - ay;
    const double len = std::hypot(vx, vy);
    if (len <= 0.0) {
      if (degenerate_edges) degenerate_edges->push_back(e.index);
      continue;
    }
    const double ux = vx / len, uy = vy / len;

    const int x0 = std::max(0, static_cast<int>(std::floor(std::min(ax, bx) - limb_width)));
    const int x1 = std::min(out_w - 1, static_cast<int>(std::ceil(std::max(ax, bx) + limb_width)));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min(ay, by) - limb_width)));
    const int y1 = std::min(out_h - 1, static_cast<int>(std::ceil(std::max(ay, by) + limb_width)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const double rx = x - ax, ry = y - ay;
        const double along = rx * ux + ry * uy;
        if (along < 0.0 || along > len) continue;
        const double perp = std::abs(rx * uy - ry * ux);
        if (perp > limb_width) continue;
        const int p = y * out_w + x;
        paf.data(2 * e.index, p) += static_cast<Scalar>(ux);
        paf.data(2 * e.index + 1, p) += static_cast<Scalar>(uy);
        counts(e.index, p) += Scalar(1);
      }
  }

  for (int e = 0; e < E; ++e)
    for (int p = 0; p < out_h * out_w; ++p)
      if (counts(e, p) > Scalar(1)) {
        paf.data(2 * e, p) /= counts(e, p);
        paf.data(2 * e + 1, p) /= counts(e, p);
      }
  return paf;
}

// 1 where the dilated ground-truth heatmap exceeds the threshold.
template <typename Scalar>
PlaneStack<Scalar> encode_mask(const PlaneStack<Scalar>& heatmaps, double threshold,
                               int dilation_px) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw std::invalid_argument("encode_mask: threshold must lie in (0,1)");
  if (dilation_px < 0) throw std::invalid_argument("encode_mask: dilation must be >= 0");
  const int h = heatmaps.height, w = heatmaps.width;
  PlaneStack<Scalar> mask(heatmaps.channels, h, w);
  for (int k = 0; k < heatmaps.channels; ++k) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (!(heatmaps.at(k, y, x) > static_cast<Scalar>(threshold))) continue;
        const int yy0 = std::max(0, y - dilation_px), yy1 = std::min(h - 1, y + dilation_px);
        const int xx0 = std::max(0, x - dilation_px), xx1 = std::min(w - 1, x + dilation_px);
        for (int yy = yy0; yy <= yy1; ++yy)
          for (int xx = xx0; xx <= xx1; ++xx) mask.at(k, yy, xx) = Scalar(1);
      }
  }
  return mask;
}

template <typename Scalar>
TargetBundle<Scalar> encode_targets(const AnnotatedImage& a, const SkeletonGraph& skeleton,
                                    const EncodingConfig& cfg) {
  const int out_h = a.height() / cfg.stride;
  const int out_w = a.width() / cfg.stride;
  TargetBundle<Scalar> t;
  t.stride = cfg.stride;
  t.heatmaps = encode_heatmaps<Scalar>(a.landmarks, out_h, out_w, cfg.stride, cfg.sigma);
  t.paf = encode_paf<Scalar>(a.landmarks, skeleton, out_h, out_w, cfg.stride, cfg.limb_width);
  t.mask = encode_mask<Scalar>(t.heatmaps, cfg.mask_threshold, cfg.mask_dilation);
  return t;
}

}  // namespace hipmark
