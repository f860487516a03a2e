#include <algorithm>
#include <cmath>

#include "dff/error.hpp"
#include "dff/parallel.hpp"
#include "dff/stack_io.hpp"

namespace dff {
namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

void check_factor(int factor) {
  if (factor < 1) {
    throw InputError("downsample factor must be >= 1");
  }
}

// Center of block `b` along an axis of length `n`, in full-resolution pixels.
double block_center(int b, int factor, int n) {
  const int start = b * factor;
  const int count = std::min(factor, n - start);
  return start + 0.5 * (count - 1);
}

}  // namespace

Image to_grayscale(const Image& image) {
  if (image.channels() == 1) {
    return image;
  }
  if (image.channels() != 3) {
    throw InputError("unsupported channel count " + std::to_string(image.channels()));
  }
  Image gray(image.width(), image.height(), 1);
  parallel_rows(image.height(), [&](int y) {
    for (int x = 0; x < image.width(); ++x) {
      gray.at(x, y) = 0.299 * image.at(x, y, 0) + 0.587 * image.at(x, y, 1) +
                      0.114 * image.at(x, y, 2);
    }
  });
  return gray;
}

Image downsample(const Image& image, int factor) {
  check_factor(factor);
  if (factor == 1) {
    return image;
  }
  const int w = ceil_div(image.width(), factor);
  const int h = ceil_div(image.height(), factor);
  Image out(w, h, image.channels());
  parallel_rows(h, [&](int by) {
    const int y0 = by * factor;
    const int y1 = std::min(y0 + factor, image.height());
    for (int bx = 0; bx < w; ++bx) {
      const int x0 = bx * factor;
      const int x1 = std::min(x0 + factor, image.width());
      const double n = static_cast<double>((y1 - y0) * (x1 - x0));
      for (int c = 0; c < image.channels(); ++c) {
        double sum = 0.0;
        for (int y = y0; y < y1; ++y) {
          for (int x = x0; x < x1; ++x) {
            sum += image.at(x, y, c);
          }
        }
        out.at(bx, by, c) = sum / n;
      }
    }
  });
  return out;
}

DepthMap downsample(const DepthMap& depth, int factor) {
  check_factor(factor);
  if (factor == 1) {
    return depth;
  }
  const int w = ceil_div(depth.width, factor);
  const int h = ceil_div(depth.height, factor);
  DepthMap out(w, h);
  out.units = depth.units;
  parallel_rows(h, [&](int by) {
    const int y0 = by * factor;
    const int y1 = std::min(y0 + factor, depth.height);
    for (int bx = 0; bx < w; ++bx) {
      const int x0 = bx * factor;
      const int x1 = std::min(x0 + factor, depth.width);
      double sum = 0.0;
      double conf = 0.0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          sum += depth.at(x, y);
          conf += depth.confidence_at(x, y);
        }
      }
      const double n = static_cast<double>((y1 - y0) * (x1 - x0));
      out.at(bx, by) = sum / n;
      out.confidence_at(bx, by) = conf / n;
    }
  });
  return out;
}

DepthMap joint_bilateral_upsample(const DepthMap& depth_lo, const Image& guide, int factor,
                                  double sigma_spatial, double sigma_range) {
  check_factor(factor);
  if (!(sigma_spatial > 0.0) || !(sigma_range > 0.0)) {
    throw InputError("joint bilateral sigmas must be positive");
  }
  if (ceil_div(guide.width(), factor) != depth_lo.width ||
      ceil_div(guide.height(), factor) != depth_lo.height) {
    throw InputError("guide dimensions do not match the low-resolution depth times the factor");
  }
  const Image gray = to_grayscale(guide);
  const Image gray_lo = downsample(gray, factor);
  const int radius = std::max(1, static_cast<int>(std::ceil(2.0 * sigma_spatial / factor)));
  const double inv_2ss = 1.0 / (2.0 * sigma_spatial * sigma_spatial);
  const double inv_2sr = 1.0 / (2.0 * sigma_range * sigma_range);

  DepthMap out(guide.width(), guide.height());
  out.units = depth_lo.units;
  parallel_rows(guide.height(), [&](int y) {
    const int by = std::min(y / factor, depth_lo.height - 1);
    for (int x = 0; x < guide.width(); ++x) {
      const int bx = std::min(x / factor, depth_lo.width - 1);
      const double g = gray.at(x, y);
      double wsum = 0.0;
      double dsum = 0.0;
      double csum = 0.0;
      for (int qy = std::max(0, by - radius); qy <= std::min(depth_lo.height - 1, by + radius);
           ++qy) {
        const double dy = block_center(qy, factor, guide.height()) - y;
        for (int qx = std::max(0, bx - radius); qx <= std::min(depth_lo.width - 1, bx + radius);
             ++qx) {
          const double dx = block_center(qx, factor, guide.width()) - x;
          const double dg = gray_lo.at(qx, qy) - g;
          const double w = std::exp(-(dx * dx + dy * dy) * inv_2ss - dg * dg * inv_2sr);
          wsum += w;
          dsum += w * depth_lo.at(qx, qy);
          csum += w * depth_lo.confidence_at(qx, qy);
        }
      }
      if (wsum > 0.0) {
        out.at(x, y) = dsum / wsum;
        out.confidence_at(x, y) = csum / wsum;
      } else {
        // Every weight underflowed: fall back to the containing block.
        out.at(x, y) = depth_lo.at(bx, by);
        out.confidence_at(x, y) = depth_lo.confidence_at(bx, by);
      }
    }
  });
  return out;
}

DepthMap joint_bilateral_upsample(const DepthMap& depth_lo, const Image& guide, int factor) {
  return joint_bilateral_upsample(depth_lo, guide, factor, static_cast<double>(factor), 0.1);
}

}  // namespace dff
