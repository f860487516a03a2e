#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dff/geometry.hpp"

namespace dff {

/// Row-major, channel-interleaved image with samples nominally in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const { return data_.empty(); }
  bool same_shape(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  double& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  double at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }
  /// Edge-replicated read.
  double clamped(int x, int y, int c = 0) const;

  std::span<double> samples() { return data_; }
  std::span<const double> samples() const { return data_; }

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<double> data_;
};

enum class DepthUnits { kFrameIndex, kMillimeters };

/// Per-pixel depth with a confidence in [0, 1].
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;
  std::vector<double> confidence;
  DepthUnits units = DepthUnits::kFrameIndex;

  DepthMap() = default;
  DepthMap(int w, int h, double value = 0.0, double conf = 1.0)
      : width(w), height(h),
        values(static_cast<std::size_t>(w) * h, value),
        confidence(static_cast<std::size_t>(w) * h, conf) {}

  std::size_t pixel_count() const { return values.size(); }
  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  double& confidence_at(int x, int y) { return confidence[static_cast<std::size_t>(y) * width + x]; }
  double confidence_at(int x, int y) const {
    return confidence[static_cast<std::size_t>(y) * width + x];
  }
};

/// Capture optics as recorded in a stack manifest. Every field is optional there.
struct CaptureOptics {
  std::optional<double> focal_length_mm;
  std::optional<double> f_number;
  std::optional<double> pixel_pitch_um;
};

/// Frames of one scene at strictly increasing focal distances.
struct FocalStack {
  std::vector<Image> frames;
  std::vector<double> focal_distances_mm;
  /// Empty, or one per frame: the transform that was applied to warp each frame
  /// onto frame 0. homographies[0] is the identity.
  std::vector<Homography> homographies;
  CaptureOptics optics;

  int size() const { return static_cast<int>(frames.size()); }
  int width() const { return frames.empty() ? 0 : frames.front().width(); }
  int height() const { return frames.empty() ? 0 : frames.front().height(); }

  /// Throws InputError if any invariant is violated.
  void validate() const;
};

/// Converts a frame-index depth into millimeters by linear interpolation of the
/// stack's focal distances.
double index_to_millimeters(std::span<const double> focal_distances_mm, double index);

}  // namespace dff
