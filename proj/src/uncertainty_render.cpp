#include "hipmark/uncertainty.hpp"

#include <algorithm>

namespace hipmark {

namespace {

void draw_disc(MatrixXd& img, double cx, double cy, double r, double value) {
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - r)));
  const int x1 = std::min(static_cast<int>(img.cols()) - 1, static_cast<int>(std::ceil(cx + r)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - r)));
  const int y1 = std::min(static_cast<int>(img.rows()) - 1, static_cast<int>(std::ceil(cy + r)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (std::hypot(x - cx, y - cy) <= r) img(y, x) = value;
}

void draw_box(MatrixXd& img, double cx, double cy, double half, double value) {
  const int x0 = std::clamp(static_cast<int>(std::lround(cx - half)), 0,
                            static_cast<int>(img.cols()) - 1);
  const int x1 = std::clamp(static_cast<int>(std::lround(cx + half)), 0,
                            static_cast<int>(img.cols()) - 1);
  const int y0 = std::clamp(static_cast<int>(std::lround(cy - half)), 0,
                            static_cast<int>(img.rows()) - 1);
  const int y1 = std::clamp(static_cast<int>(std::lround(cy + half)), 0,
                            static_cast<int>(img.rows()) - 1);
  for (int x = x0; x <= x1; ++x) {
    img(y0, x) = value;
    img(y1, x) = value;
  }
  for (int y = y0; y <= y1; ++y) {
    img(y, x0) = value;
    img(y, x1) = value;
  }
}

}  // namespace

MatrixXd render_uncertainty_map(const std::vector<DecodedLandmark>& decoded,
                                const std::vector<UncertaintyVerdict>& verdicts,
                                const MatrixXd& image, bool debug_boxes) {
  MatrixXd out = image * 0.5;  // dim the radiograph so markers stand out
  const double r = std::max(2.0, std::min(image.rows(), image.cols()) / 64.0);
  for (std::size_t i = 0; i < decoded.size() && i < verdicts.size(); ++i) {
    const auto& d = decoded[i];
    const auto& v = verdicts[i];
    if (v.keep) {
      // brightness tracks the aggregated projection weight
      draw_disc(out, d.x, d.y, r, 0.25 + 0.75 * std::clamp(v.w_hat, 0.0, 1.0));
    } else if (debug_boxes) {
      draw_box(out, d.x, d.y, 2.0 * r, 1.0);
    }
  }
  return out.cwiseMax(0.0).cwiseMin(1.0);
}

}  // namespace hipmark
