#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dff/image.hpp"

namespace dff::defocus {

/// Thin-lens capture parameters for the circle-of-confusion model.
struct OpticsParams {
  double focal_length_mm = 0.0;
  double aperture_mm = 0.0;  // aperture diameter d
  double focus_distance_mm = 0.0;
  double pixel_pitch_um = 0.0;

  static OpticsParams from_f_number(double focal_length_mm, double f_number,
                                    double focus_distance_mm, double pixel_pitch_um);
  double f_number() const { return focal_length_mm / aperture_mm; }

  /// Throws InputError unless f > 0, d > 0, pitch > 0 and focus distance > f.
  void validate() const;
};

/// C = d f |l - l_n| / (l (l_n - f)), in millimeters.
double coc_diameter(const OpticsParams& optics, double object_distance_mm);

/// Blur radius in pixels: C * 1000 / pixel_pitch_um / 2.
double coc_radius_px(const OpticsParams& optics, double object_distance_mm);

/// Flat-top regular hexagon of circumradius r centered at the origin:
/// |y| <= (sqrt(3)/2) r and sqrt(3)|x| + |y| <= sqrt(3) r.
bool in_hexagon(double x, double y, double r);

/// Square (2R+1)^2 kernel, R = ceil(radius), uniform over the pixel centers
/// inside the hexagon and summing to 1. Radius 0 is the 1x1 identity.
struct Kernel {
  int half = 0;
  std::vector<double> weights;

  int size() const { return 2 * half + 1; }
  double at(int dx, int dy) const { return weights[(dy + half) * size() + (dx + half)]; }
};

Kernel hexagonal_kernel(double radius);

/// Uniform hexagonal blur with edge replication. A fractional radius blends the
/// floor and ceil kernels by the fractional part; radius 0 returns the input.
Image hexagonal_blur(const Image& image, double radius);

/// Depth quantized into L layers with its optics, as consumed by the viewer.
struct RefocusBundle {
  Image all_in_focus;
  int width = 0;
  int height = 0;
  int layer_count = 0;
  std::vector<int> layers;  // per pixel, row-major
  std::vector<double> layer_depths_mm;
  OpticsParams optics;
  std::string kernel_shape = "hexagon";
  double depth_min = 0.0;  // in frame-index units, before quantization
  double depth_max = 0.0;

  int layer_at(int x, int y) const { return layers[static_cast<std::size_t>(y) * width + x]; }
};

/// layer = round(d (L - 1) / (N - 1)), clamped to [0, L - 1].
std::vector<int> quantize_layers(const DepthMap& depth, int num_frames, int layer_count);

/// Focal distance interpolated at each layer center k (N - 1) / (L - 1).
std::vector<double> layer_depths(const std::vector<double>& focal_distances_mm, int layer_count);

RefocusBundle make_bundle(const Image& all_in_focus, const DepthMap& depth,
                          const FocalStack& stack, const OpticsParams& optics, int layer_count);

/// Writes allfocus.png, depth.png (16-bit layer indices) and meta.json.
RefocusBundle export_refocus_bundle(const Image& all_in_focus, const DepthMap& depth,
                                    const FocalStack& stack, const OpticsParams& optics,
                                    int layer_count, const std::filesystem::path& out_dir);

void write_bundle(const RefocusBundle& bundle, const std::filesystem::path& out_dir);
RefocusBundle load_bundle(const std::filesystem::path& dir);

/// Renders `sharp` with per-pixel layer ids, each layer k blurred at
/// aperture_scale * coc_radius_px(optics, layer_depths_mm[k]) together with its
/// mask and composited back to front (farthest layer first):
///   out = C_k + (1 - A_k) out,  alpha = A_k + (1 - A_k) alpha,
/// with the result out / alpha.
Image render_layered(const Image& sharp, const std::vector<int>& layers,
                     const std::vector<double>& layer_depths_mm, const OpticsParams& optics,
                     double aperture_scale);

/// Layered defocus focused on `focus_layer`: render_layered with the focus
/// distance set to layer_depths_mm[focus_layer].
Image synthetic_defocus(const RefocusBundle& bundle, int focus_layer, double aperture_scale);

}  // namespace dff::defocus
