#include <algorithm>
#include <cmath>

#include "dff/defocus.hpp"
#include "dff/error.hpp"
#include "dff/parallel.hpp"

namespace dff::defocus {
namespace {

constexpr double kSlack = 1e-9;
const double kSqrt3 = std::sqrt(3.0);

// Half-width of each kernel row dy = -half..half; -1 marks an empty row.
std::vector<int> row_spans(int radius) {
  std::vector<int> spans(2 * radius + 1, -1);
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = radius; dx >= 0; --dx) {
      if (in_hexagon(dx, dy, radius)) {
        spans[dy + radius] = dx;
        break;
      }
    }
  }
  return spans;
}

Image blur_integer(const Image& image, int radius) {
  if (radius == 0) {
    return image;
  }
  const int w = image.width();
  const int h = image.height();
  const int ch = image.channels();
  const std::vector<int> spans = row_spans(radius);
  long count = 0;
  for (int s : spans) count += s >= 0 ? 2 * s + 1 : 0;
  const double inv = 1.0 / static_cast<double>(count);

  // prefix[c][y][i]: sum of the edge-clamped row y over padded x in [-radius, i - radius).
  const int padded = w + 2 * radius;
  std::vector<double> prefix(static_cast<std::size_t>(ch) * h * (padded + 1));
  const auto row_ptr = [&](int c, int y) {
    return prefix.data() + (static_cast<std::size_t>(c) * h + y) * (padded + 1);
  };
  parallel_rows(h, [&](int y) {
    for (int c = 0; c < ch; ++c) {
      double* p = row_ptr(c, y);
      p[0] = 0.0;
      for (int i = 0; i < padded; ++i) {
        p[i + 1] = p[i] + image.clamped(i - radius, y, c);
      }
    }
  });

  Image out(w, h, ch);
  parallel_rows(h, [&](int y) {
    for (int c = 0; c < ch; ++c) {
      for (int x = 0; x < w; ++x) {
        double sum = 0.0;
        for (int dy = -radius; dy <= radius; ++dy) {
          const int s = spans[dy + radius];
          if (s < 0) continue;
          const double* p = row_ptr(c, std::clamp(y + dy, 0, h - 1));
          sum += p[x + s + 1 + radius] - p[x - s + radius];
        }
        out.at(x, y, c) = sum * inv;
      }
    }
  });
  return out;
}

}  // namespace

bool in_hexagon(double x, double y, double r) {
  const double ay = std::abs(y);
  return ay <= 0.5 * kSqrt3 * r + kSlack && kSqrt3 * std::abs(x) + ay <= kSqrt3 * r + kSlack;
}

Kernel hexagonal_kernel(double radius) {
  if (!(radius >= 0.0)) {
    throw InputError("kernel radius must be >= 0");
  }
  Kernel k;
  k.half = static_cast<int>(std::ceil(radius));
  k.weights.assign(static_cast<std::size_t>(k.size()) * k.size(), 0.0);
  int count = 0;
  for (int dy = -k.half; dy <= k.half; ++dy) {
    for (int dx = -k.half; dx <= k.half; ++dx) {
      if (in_hexagon(dx, dy, radius)) {
        k.weights[(dy + k.half) * k.size() + (dx + k.half)] = 1.0;
        ++count;
      }
    }
  }
  for (double& v : k.weights) v /= count;
  return k;
}

Image hexagonal_blur(const Image& image, double radius) {
  if (!(radius >= 0.0)) {
    throw InputError("blur radius must be >= 0");
  }
  const int lo = static_cast<int>(std::floor(radius));
  const double frac = radius - lo;
  if (frac == 0.0) {
    return blur_integer(image, lo);
  }
  const Image a = blur_integer(image, lo);
  const Image b = blur_integer(image, lo + 1);
  Image out(image.width(), image.height(), image.channels());
  for (std::size_t i = 0; i < out.samples().size(); ++i) {
    out.samples()[i] = (1.0 - frac) * a.samples()[i] + frac * b.samples()[i];
  }
  return out;
}

}  // namespace dff::defocus
