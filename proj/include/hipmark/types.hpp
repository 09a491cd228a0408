#pragma once

#include <cmath>

#include <Eigen/Dense>

namespace hipmark {

// Row-major planes so a matrix row is a contiguous image row (or a flattened
// channel when stacking C x (H*W)).
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using ArrayXX = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = MatrixX<double>;
using ArrayXXd = ArrayXX<double>;

// A stack of equally sized planes, stored channels x (height*width).
template <typename Scalar>
struct PlaneStack {
  int channels = 0;
  int height = 0;
  int width = 0;
  MatrixX<Scalar> data;  // channels x (height*width)

  PlaneStack() = default;
  PlaneStack(int c, int h, int w) : channels(c), height(h), width(w) {
    data.setZero(c, h * w);
  }

  Scalar& at(int c, int y, int x) { return data(c, y * width + x); }
  Scalar at(int c, int y, int x) const { return data(c, y * width + x); }

  Eigen::Map<MatrixX<Scalar>> plane(int c) {
    return Eigen::Map<MatrixX<Scalar>>(data.row(c).data(), height, width);
  }
  Eigen::Map<const MatrixX<Scalar>> plane(int c) const {
    return Eigen::Map<const MatrixX<Scalar>>(data.row(c).data(), height, width);
  }
};

using PlaneStackD = PlaneStack<double>;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline double norm2(const Point2& a, const Point2& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace hipmark
