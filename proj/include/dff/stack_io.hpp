#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dff/image.hpp"

namespace dff {

// Image files ------------------------------------------------------------------

/// Reads an 8- or 16-bit PNG/JPEG as 1 or 3 channels normalized to [0, 1].
Image read_image(const std::filesystem::path& path);

/// Writes a 1- or 3-channel image as PNG. Samples are clamped to [0, 1] and
/// rounded to the nearest code; bit_depth is 8 or 16.
void write_image(const Image& image, const std::filesystem::path& path, int bit_depth = 8);

// Manifests --------------------------------------------------------------------

struct ManifestFrame {
  std::filesystem::path path;  // relative paths resolve against the manifest directory
  double focal_distance_mm = 0.0;
};

/// Loads a focal stack from a JSON manifest:
///   {"frames": [{"path": "...", "focal_distance_mm": 300}, ...],
///    "optics": {"focal_length_mm": .., "f_number": .., "sensor_pixel_pitch_um": ..}}
/// Frames come back sorted by focal distance.
FocalStack load_stack(const std::filesystem::path& manifest_path);

void write_manifest(const std::filesystem::path& manifest_path,
                    const std::vector<ManifestFrame>& frames, const CaptureOptics& optics);

// Depth persistence ------------------------------------------------------------

/// Path of the JSON sidecar that accompanies a depth PNG (same stem, .json).
std::filesystem::path depth_sidecar_path(const std::filesystem::path& png_path);

/// Writes a 16-bit PNG spanning [min, max] of the values plus the sidecar
/// {"min", "max", "units"}.
void save_depth(const DepthMap& depth, const std::filesystem::path& png_path);

/// Inverse of save_depth. Confidence is not persisted and loads as 1.
DepthMap load_depth(const std::filesystem::path& png_path);

// Resampling -------------------------------------------------------------------

/// Luminance 0.299 R + 0.587 G + 0.114 B; 1-channel input is returned as is.
Image to_grayscale(const Image& image);

/// Block mean over factor x factor tiles; partial tiles at the right and bottom
/// are averaged over the pixels they contain. Output is ceil(dim / factor).
Image downsample(const Image& image, int factor);
DepthMap downsample(const DepthMap& depth, int factor);

/// Joint bilateral upsampling of a low-resolution depth map. Each output pixel is
/// the normalized sum over nearby low-resolution samples weighted by a spatial
/// Gaussian (distance to the sample's block center, in guide pixels) times a
/// range Gaussian on the luminance difference between the output pixel and the
/// block-mean guide of the sample. Confidence is upsampled with the same weights.
DepthMap joint_bilateral_upsample(const DepthMap& depth_lo, const Image& guide, int factor,
                                  double sigma_spatial, double sigma_range);

/// Defaults used when the caller has no preference: sigma_spatial = factor,
/// sigma_range = 0.1.
DepthMap joint_bilateral_upsample(const DepthMap& depth_lo, const Image& guide, int factor);

}  // namespace dff
