#include <cmath>

#include "dff/align.hpp"
#include "dff/parallel.hpp"

namespace dff::align {

Image warp(const Image& img, const Homography& h) {
  const Eigen::Matrix3d inv = h.inverse().matrix();
  Image out(img.width(), img.height(), img.channels());
  parallel_rows(img.height(), [&](int y) {
    for (int x = 0; x < img.width(); ++x) {
      const Eigen::Vector3d q = inv * Eigen::Vector3d(x, y, 1.0);
      const double sx = q.x() / q.z();
      const double sy = q.y() / q.z();
      const double fx0 = std::floor(sx);
      const double fy0 = std::floor(sy);
      const double fx = sx - fx0;
      const double fy = sy - fy0;
      const int x0 = static_cast<int>(fx0);
      const int y0 = static_cast<int>(fy0);
      for (int c = 0; c < img.channels(); ++c) {
        const double top = (1.0 - fx) * img.clamped(x0, y0, c) + fx * img.clamped(x0 + 1, y0, c);
        const double bottom =
            (1.0 - fx) * img.clamped(x0, y0 + 1, c) + fx * img.clamped(x0 + 1, y0 + 1, c);
        out.at(x, y, c) = (1.0 - fy) * top + fy * bottom;
      }
    }
  });
  return out;
}

}  // namespace dff::align
