#include <algorithm>
#include <cmath>
#include <cstdio>

#include "dff/error.hpp"
#include "dff/focus.hpp"
#include "dff/parallel.hpp"
#include "dff/stack_io.hpp"

namespace dff::focus {
namespace {

constexpr double kEps = 1e-6;

Image box_mean(const Image& src, int radius) {
  if (radius <= 0) {
    return src;
  }
  const int w = src.width();
  const int h = src.height();
  const double norm = 1.0 / (2 * radius + 1);
  Image horiz(w, h, 1);
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int d = -radius; d <= radius; ++d) s += src.clamped(x + d, y);
      horiz.at(x, y) = s * norm;
    }
  });
  Image out(w, h, 1);
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int d = -radius; d <= radius; ++d) s += horiz.clamped(x, y + d);
      out.at(x, y) = s * norm;
    }
  });
  return out;
}

double median_of(std::vector<double>& v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

Image FocusVolume::slice(int frame) const {
  Image out(width, height, 1);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) out.at(x, y) = at(x, y, frame);
  }
  return out;
}

Image modified_laplacian(const Image& image, int radius) {
  if (radius < 0) {
    throw InputError("mean filter radius must be >= 0");
  }
  const Image gray = to_grayscale(image);
  Image ml(gray.width(), gray.height(), 1);
  parallel_rows(gray.height(), [&](int y) {
    for (int x = 0; x < gray.width(); ++x) {
      const double c = gray.at(x, y);
      const double dxx = -gray.clamped(x - 1, y) + 2.0 * c - gray.clamped(x + 1, y);
      const double dyy = -gray.clamped(x, y - 1) + 2.0 * c - gray.clamped(x, y + 1);
      ml.at(x, y) = std::abs(dxx) + std::abs(dyy);
    }
  });
  return box_mean(ml, radius);
}

FocusVolume build_focus_volume(const FocalStack& stack, int radius) {
  if (stack.frames.empty()) {
    throw InputError("empty focal stack");
  }
  FocusVolume vol;
  vol.width = stack.width();
  vol.height = stack.height();
  vol.num_frames = stack.size();
  vol.radius = radius;
  vol.values.resize(static_cast<std::size_t>(vol.width) * vol.height * vol.num_frames);
  for (int f = 0; f < vol.num_frames; ++f) {
    const Image& frame = stack.frames[f];
    if (frame.width() != vol.width || frame.height() != vol.height) {
      throw InputError("dimension mismatch between frames");
    }
    const Image ml = modified_laplacian(frame, radius);
    std::copy(ml.samples().begin(), ml.samples().end(),
              vol.values.begin() + static_cast<std::ptrdiff_t>(f) * vol.width * vol.height);
  }
  return vol;
}

GaussianFit gaussian_interpolate(double f_prev, double f_peak, double f_next, int m) {
  if (!(f_prev > 0.0) || !(f_peak > 0.0) || !(f_next > 0.0)) {
    throw InputError("focus values must be positive");
  }
  if (f_peak < f_prev || f_peak < f_next) {
    throw InputError("center sample is not the maximum of the triple");
  }
  const double lm = std::log(f_prev);
  const double l0 = std::log(f_peak);
  const double lp = std::log(f_next);
  const double curvature = lm - 2.0 * l0 + lp;
  GaussianFit fit;
  if (std::abs(curvature) < 1e-12) {
    fit.peak_location = m;
    fit.peak_value = f_peak;
    return fit;
  }
  const double offset = (lm - lp) / (2.0 * curvature);
  fit.peak_location = m + offset;
  fit.sigma = std::sqrt(-1.0 / curvature);
  fit.peak_value = std::exp(l0 - 0.5 * curvature * offset * offset);
  fit.valid = true;
  return fit;
}

DepthMap initial_depth(const FocusVolume& volume) {
  const int n = volume.num_frames;
  if (n < 3) {
    throw InputError("initial depth needs at least 3 frames");
  }
  DepthMap depth(volume.width, volume.height);
  depth.units = DepthUnits::kFrameIndex;
  parallel_rows(volume.height, [&](int y) {
    std::vector<double> f(n);
    for (int x = 0; x < volume.width; ++x) {
      int m = 0;
      for (int k = 0; k < n; ++k) {
        f[k] = volume.at(x, y, k);
        if (f[k] > f[m]) m = k;
      }
      double location = m;
      double fmax = f[m];
      const bool boundary = m == 0 || m == n - 1;
      if (!boundary) {
        const GaussianFit fit = gaussian_interpolate(f[m - 1] + kEps, f[m] + kEps, f[m + 1] + kEps, m);
        if (fit.valid) {
          location = fit.peak_location;
          fmax = std::max(f[m], fit.peak_value - kEps);
        }
      }
      const double med = median_of(f);
      double conf = std::clamp((fmax - med) / (fmax + kEps), 0.0, 1.0);
      if (boundary) conf *= 0.5;
      depth.at(x, y) = location;
      depth.confidence_at(x, y) = conf;
    }
  });
  return depth;
}

Image all_in_focus(const FocalStack& stack, const DepthMap& depth) {
  if (stack.frames.empty()) {
    throw InputError("empty focal stack");
  }
  if (depth.width != stack.width() || depth.height != stack.height()) {
    throw InputError("depth map dimensions do not match the stack");
  }
  const int n = stack.size();
  const Image& first = stack.frames.front();
  Image out(first.width(), first.height(), first.channels());
  parallel_rows(first.height(), [&](int y) {
    for (int x = 0; x < first.width(); ++x) {
      const double d = std::clamp(depth.at(x, y), 0.0, static_cast<double>(n - 1));
      const int lo = std::min(static_cast<int>(std::floor(d)), std::max(n - 2, 0));
      const double w = d - lo;
      const int hi = std::min(lo + 1, n - 1);
      for (int c = 0; c < first.channels(); ++c) {
        const double a = stack.frames[lo].at(x, y, c);
        out.at(x, y, c) = w == 0.0 ? a : (1.0 - w) * a + w * stack.frames[hi].at(x, y, c);
      }
    }
  });
  return out;
}

void dump_focus_volume(const FocusVolume& volume, const std::filesystem::path& dir) {
  const double peak = volume.values.empty()
                          ? 0.0
                          : *std::max_element(volume.values.begin(), volume.values.end());
  for (int f = 0; f < volume.num_frames; ++f) {
    Image s = volume.slice(f);
    if (peak > 0.0) {
      for (double& v : s.samples()) v /= peak;
    }
    char name[32];
    std::snprintf(name, sizeof(name), "focus_%03d.png", f);
    write_image(s, dir / name, 16);
  }
}

}  // namespace dff::focus
