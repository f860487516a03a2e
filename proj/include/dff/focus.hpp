#pragma once

#include <filesystem>
#include <vector>

#include "dff/image.hpp"

namespace dff::focus {

/// Focus measure of every pixel in every frame, stored frame-major.
struct FocusVolume {
  int width = 0;
  int height = 0;
  int num_frames = 0;
  int radius = 0;
  std::vector<double> values;

  double at(int x, int y, int frame) const { return values[offset(x, y, frame)]; }
  double& at(int x, int y, int frame) { return values[offset(x, y, frame)]; }
  Image slice(int frame) const;

 private:
  std::size_t offset(int x, int y, int frame) const {
    return (static_cast<std::size_t>(frame) * height + y) * width + x;
  }
};

/// (|I * [-1 2 -1]| + |I * [-1 2 -1]^T|) followed by a (2r+1)^2 box mean, with
/// edge replication at the borders. Color input is converted to luminance.
Image modified_laplacian(const Image& image, int radius);

/// modified_laplacian of every frame.
FocusVolume build_focus_volume(const FocalStack& stack, int radius);

struct GaussianFit {
  double peak_location = 0.0;  // fractional frame index
  double peak_value = 0.0;
  double sigma = 0.0;
  bool valid = false;
};

/// Three-point fit of F = F_max exp(-(M - S)^2 / (2 sigma^2)) through the
/// samples at m-1, m, m+1 using their logarithms. A flat triple
/// (|second difference of logs| < 1e-12) returns valid = false at m.
GaussianFit gaussian_interpolate(double f_prev, double f_peak, double f_next, int m);

/// Per pixel: first argmax over frames, refined by gaussian_interpolate on the
/// neighbors (with 1e-6 added before the logarithms). Peaks on the first or
/// last frame keep the integer index and half the confidence. Confidence is
/// (F_max - median) / (F_max + 1e-6), clamped to [0, 1].
DepthMap initial_depth(const FocusVolume& volume);

/// Per pixel linear blend of the two frames bracketing the fractional depth index.
Image all_in_focus(const FocalStack& stack, const DepthMap& depth);

/// Debug dump: one 16-bit PNG per frame, scaled by the volume maximum.
void dump_focus_volume(const FocusVolume& volume, const std::filesystem::path& dir);

}  // namespace dff::focus
