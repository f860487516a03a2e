#pragma once

#include <Eigen/Dense>

namespace dff {

/// Planar projective transform, stored normalized so that h(2,2) == 1.
class Homography {
 public:
  Homography() : m_(Eigen::Matrix3d::Identity()) {}

  /// Normalizes by m(2,2). Throws NumericalError("improper homography") when
  /// m(2,2) is zero and NumericalError("singular homography") when |det| <= 1e-12.
  explicit Homography(const Eigen::Matrix3d& m);

  static Homography identity() { return Homography(); }
  static Homography translation(double dx, double dy);

  const Eigen::Matrix3d& matrix() const { return m_; }
  double operator()(int r, int c) const { return m_(r, c); }

  Eigen::Vector2d apply(const Eigen::Vector2d& p) const;
  Homography inverse() const;
  Homography operator*(const Homography& rhs) const;

 private:
  Eigen::Matrix3d m_;
};

}  // namespace dff
