#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dff/defocus.hpp"
#include "dff/image.hpp"

namespace dff::synth {

/// Scene description for synthetic focal stacks. Focal distances are uniform
/// in inverse depth between near_mm and far_mm.
struct SceneSpec {
  std::string kind = "two-plane";  // "plane", "two-plane" or "ramp"
  int size = 360;
  int frames = 12;
  double near_mm = 400.0;
  double far_mm = 2000.0;
  double focal_length_mm = 25.0;
  double f_number = 2.0;
  double pixel_pitch_um = 20.0;
  std::uint64_t seed = 0;
  double texture_sigma = 0.8;
  int plane_frame = 5;   // "plane": the frame whose focal distance holds the plane
  int front_frame = 2;   // "two-plane": central square
  int back_frame = 9;    // "two-plane": background
  int ramp_slices = 44;  // "ramp": depth slices used for rendering
  /// Focus breathing: frame f is magnified by (1 + breathing)^f about the center.
  double breathing = 0.0;

  /// Throws InputError on an inconsistent spec.
  void validate() const;
};

SceneSpec load_scene_spec(const std::filesystem::path& path);

struct SyntheticStack {
  FocalStack stack;
  DepthMap ground_truth;  // frame-index units
  Image texture;          // the sharp scene
  std::vector<Homography> applied;  // per-frame breathing transform (identity when off)
};

std::vector<double> focal_distances(const SceneSpec& spec);

/// Smoothed uniform noise normalized to [0, 1].
Image random_texture(int width, int height, double sigma, std::uint64_t seed);

SyntheticStack render_scene(const SceneSpec& spec);

/// Writes frame_XX.png, manifest.json, ground_truth.png (+ sidecar).
void write_scene(const SyntheticStack& scene, const std::filesystem::path& out_dir);

/// Noisy depth instance: a clipped plane plus three rectangles, Gaussian noise
/// (sigma 0.3) and 10% uniform outliers, in frame-index units.
struct NoisyDepth {
  DepthMap truth;
  DepthMap noisy;
};

NoisyDepth noisy_depth_instance(std::uint64_t seed, int size = 128, int frames = 12);

/// Constant 0.5 with `fraction` of the pixels set to 0 or 1.
DepthMap salt_pepper_instance(std::uint64_t seed = 1, int size = 16, double fraction = 0.1);

}  // namespace dff::synth
