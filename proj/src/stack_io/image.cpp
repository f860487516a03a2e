#include <algorithm>
#include <cmath>
#include <string>

#include "dff/error.hpp"
#include "dff/image.hpp"
#include "dff/parallel.hpp"

namespace dff {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width <= 0 || height <= 0 || channels <= 0) {
    throw InputError("image dimensions must be positive");
  }
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

double Image::clamped(int x, int y, int c) const {
  x = std::clamp(x, 0, width_ - 1);
  y = std::clamp(y, 0, height_ - 1);
  return data_[index(x, y, c)];
}

Homography::Homography(const Eigen::Matrix3d& m) {
  if (m(2, 2) == 0.0 || !std::isfinite(m(2, 2))) {
    throw NumericalError("improper homography");
  }
  m_ = m / m(2, 2);
  const double det = m_.determinant();
  if (!std::isfinite(det) || std::abs(det) <= 1e-12) {
    throw NumericalError("singular homography");
  }
}

Homography Homography::translation(double dx, double dy) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 2) = dx;
  m(1, 2) = dy;
  return Homography(m);
}

Eigen::Vector2d Homography::apply(const Eigen::Vector2d& p) const {
  const Eigen::Vector3d q = m_ * Eigen::Vector3d(p.x(), p.y(), 1.0);
  return {q.x() / q.z(), q.y() / q.z()};
}

Homography Homography::inverse() const { return Homography(m_.inverse()); }

Homography Homography::operator*(const Homography& rhs) const { return Homography(m_ * rhs.m_); }

void FocalStack::validate() const {
  if (frames.size() < 2) {
    throw InputError("insufficient frames: a focal stack needs at least 2");
  }
  if (focal_distances_mm.size() != frames.size()) {
    throw InputError("focal distance count does not match frame count");
  }
  const Image& first = frames.front();
  for (const Image& f : frames) {
    if (!f.same_shape(first)) {
      throw InputError("dimension mismatch between frames");
    }
  }
  for (std::size_t i = 1; i < focal_distances_mm.size(); ++i) {
    if (!(focal_distances_mm[i] > focal_distances_mm[i - 1])) {
      throw InputError("non-monotone focal distances");
    }
  }
  if (!homographies.empty() && homographies.size() != frames.size()) {
    throw InputError("homography count does not match frame count");
  }
}

double index_to_millimeters(std::span<const double> focal_distances_mm, double index) {
  if (focal_distances_mm.empty()) {
    throw InputError("no focal distances");
  }
  const int n = static_cast<int>(focal_distances_mm.size());
  if (n == 1) {
    return focal_distances_mm[0];
  }
  const double clamped = std::clamp(index, 0.0, static_cast<double>(n - 1));
  const int lo = std::min(static_cast<int>(std::floor(clamped)), n - 2);
  const double w = clamped - lo;
  return (1.0 - w) * focal_distances_mm[lo] + w * focal_distances_mm[lo + 1];
}

void set_thread_count(int threads) {
  if (threads > 0) {
    omp_set_num_threads(threads);
  } else {
    omp_set_num_threads(omp_get_num_procs());
  }
}

int thread_count() { return omp_get_max_threads(); }

}  // namespace dff
