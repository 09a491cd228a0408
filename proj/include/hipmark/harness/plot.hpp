#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hipmark/types.hpp"

namespace hipmark::harness {

// Minimal line-plot rasterizer: white background, axes, one gray level per
// series. Enough for convergence-curve images.
inline MatrixXd render_line_plot(const std::vector<std::vector<double>>& series, int h = 240,
                                 int w = 360) {
  MatrixXd img = MatrixXd::Constant(h, w, 1.0);
  const int m = 24;  // margin
  for (int x = m; x < w - m; ++x) img(h - m, x) = 0.0;
  for (int y = m; y < h - m; ++y) img(y, m) = 0.0;

  double lo = std::numeric_limits<double>::max(), hi = std::numeric_limits<double>::lowest();
  std::size_t n = 0;
  for (const auto& s : series)
    for (double v : s) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      n = std::max(n, s.size());
    }
  if (n < 2 || !(hi > lo)) return img;

  auto px = [&](std::size_t i, std::size_t len) {
    return m + static_cast<int>(std::lround((w - 2.0 * m) * i / (len - 1.0)));
  };
  auto py = [&](double v) {
    return (h - m) - static_cast<int>(std::lround((h - 2.0 * m) * (v - lo) / (hi - lo)));
  };
  auto draw_line = [&](int x0, int y0, int x1, int y1, double shade) {
    const int steps = std::max(std::abs(x1 - x0), std::abs(y1 - y0)) + 1;
    for (int s = 0; s <= steps; ++s) {
      const int x = x0 + (x1 - x0) * s / steps;
      const int y = y0 + (y1 - y0) * s / steps;
      if (y >= 0 && y < h && x >= 0 && x < w) img(y, x) = shade;
    }
  };

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    if (s.size() < 2) continue;
    const double shade = 0.15 + 0.45 * static_cast<double>(si) /
                                    std::max<std::size_t>(1, series.size() - 1);
    for (std::size_t i = 1; i < s.size(); ++i) {
      if (!std::isfinite(s[i - 1]) || !std::isfinite(s[i])) continue;
      draw_line(px(i - 1, s.size()), py(s[i - 1]), px(i, s.size()), py(s[i]), shade);
    }
  }
  return img;
}

}  // namespace hipmark::harness
