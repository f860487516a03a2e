#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "json.hpp"

#include "dff/align.hpp"
#include "dff/error.hpp"
#include "dff/stack_io.hpp"
#include "dff/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dff::synth {
namespace {

Image gaussian_blur(const Image& src, double sigma) {
  if (sigma <= 0.0) return src;
  const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> k(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + r];
  }
  for (double& v : k) v /= sum;
  Image tmp(src.width(), src.height(), 1);
  Image out(src.width(), src.height(), 1);
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      double s = 0.0;
      for (int i = -r; i <= r; ++i) s += k[i + r] * src.clamped(x + i, y);
      tmp.at(x, y) = s;
    }
  }
  for (int y = 0; y < src.height(); ++y) {
    for (int x = 0; x < src.width(); ++x) {
      double s = 0.0;
      for (int i = -r; i <= r; ++i) s += k[i + r] * tmp.clamped(x, y + i);
      out.at(x, y) = s;
    }
  }
  return out;
}

// Fractional frame index of an object distance, linear in inverse depth.
double index_of(const std::vector<double>& fd, double depth_mm) {
  const double a = 1.0 / fd.front();
  const double b = 1.0 / fd.back();
  return (a - 1.0 / depth_mm) / (a - b) * (static_cast<double>(fd.size()) - 1.0);
}

double depth_at_index(const std::vector<double>& fd, double index) {
  const double a = 1.0 / fd.front();
  const double b = 1.0 / fd.back();
  return 1.0 / (a - index / (static_cast<double>(fd.size()) - 1.0) * (a - b));
}

}  // namespace

void SceneSpec::validate() const {
  if (kind != "plane" && kind != "two-plane" && kind != "ramp") {
    throw InputError("unknown scene kind '" + kind + "'");
  }
  if (size < 16) throw InputError("scene size must be >= 16");
  if (frames < 3) throw InputError("scene needs at least 3 frames");
  if (!(near_mm > focal_length_mm) || !(far_mm > near_mm)) {
    throw InputError("scene distances must satisfy focal length < near < far");
  }
  if (!(f_number > 0.0) || !(pixel_pitch_um > 0.0) || !(focal_length_mm > 0.0)) {
    throw InputError("scene optics must be positive");
  }
  const auto check_frame = [&](int f, const char* name) {
    if (f < 0 || f >= frames) throw InputError(std::string(name) + " outside the frame range");
  };
  check_frame(plane_frame, "plane_frame");
  check_frame(front_frame, "front_frame");
  check_frame(back_frame, "back_frame");
  if (ramp_slices < 2) throw InputError("ramp_slices must be >= 2");
}

SceneSpec load_scene_spec(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw InputError("missing file: " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw InputError("malformed scene spec " + path.string() + ": " + e.what());
  }
  SceneSpec s;
  try {
    s.kind = j.value("kind", s.kind);
    s.size = j.value("size", s.size);
    s.frames = j.value("frames", s.frames);
    s.near_mm = j.value("near_mm", s.near_mm);
    s.far_mm = j.value("far_mm", s.far_mm);
    s.focal_length_mm = j.value("focal_length_mm", s.focal_length_mm);
    s.f_number = j.value("f_number", s.f_number);
    s.pixel_pitch_um = j.value("pixel_pitch_um", s.pixel_pitch_um);
    s.seed = j.value("seed", s.seed);
    s.texture_sigma = j.value("texture_sigma", s.texture_sigma);
    s.plane_frame = j.value("plane_frame", s.plane_frame);
    s.front_frame = j.value("front_frame", s.front_frame);
    s.back_frame = j.value("back_frame", s.back_frame);
    s.ramp_slices = j.value("ramp_slices", s.ramp_slices);
    s.breathing = j.value("breathing", s.breathing);
  } catch (const json::exception& e) {
    throw InputError("invalid scene spec field: " + std::string(e.what()));
  }
  s.validate();
  return s;
}

std::vector<double> focal_distances(const SceneSpec& spec) {
  std::vector<double> fd(spec.frames);
  const double a = 1.0 / spec.near_mm;
  const double b = 1.0 / spec.far_mm;
  for (int f = 0; f < spec.frames; ++f) {
    fd[f] = 1.0 / (a + (b - a) * f / (spec.frames - 1));
  }
  return fd;
}

Image random_texture(int width, int height, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Image noise(width, height, 1);
  for (double& v : noise.samples()) v = u(rng);
  Image tex = gaussian_blur(noise, sigma);
  const auto [lo, hi] = std::minmax_element(tex.samples().begin(), tex.samples().end());
  const double l = *lo, span = *hi - *lo;
  for (double& v : tex.samples()) v = span > 0.0 ? (v - l) / span : 0.5;
  return tex;
}

SyntheticStack render_scene(const SceneSpec& spec) {
  spec.validate();
  const int n = spec.size;
  const std::vector<double> fd = focal_distances(spec);
  SyntheticStack out;
  out.texture = random_texture(n, n, spec.texture_sigma, spec.seed);

  // Layer ids and their depths.
  std::vector<int> layers(static_cast<std::size_t>(n) * n, 0);
  std::vector<double> depths;
  if (spec.kind == "plane") {
    depths = {fd[spec.plane_frame]};
  } else if (spec.kind == "two-plane") {
    depths = {fd[spec.front_frame], fd[spec.back_frame]};
    const int half = (2 * n) / 9;  // central square of side ~4n/9
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        const bool front = std::abs(x - n / 2) < half && std::abs(y - n / 2) < half;
        layers[static_cast<std::size_t>(y) * n + x] = front ? 0 : 1;
      }
    }
  } else {
    // Depth linear in inverse distance from the first to the last focal plane
    // across x, rendered as vertical slices.
    const int slices = spec.ramp_slices;
    for (int s = 0; s < slices; ++s) {
      const double idx = (s + 0.5) / slices * (spec.frames - 1);
      depths.push_back(depth_at_index(fd, idx));
    }
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        layers[static_cast<std::size_t>(y) * n + x] = std::min(slices - 1, x * slices / n);
      }
    }
  }

  out.ground_truth = DepthMap(n, n);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    out.ground_truth.values[i] = index_of(fd, depths[layers[i]]);
  }
  if (spec.kind == "plane") {
    std::fill(out.ground_truth.values.begin(), out.ground_truth.values.end(),
              static_cast<double>(spec.plane_frame));
  }

  out.stack.focal_distances_mm = fd;
  out.stack.optics.focal_length_mm = spec.focal_length_mm;
  out.stack.optics.f_number = spec.f_number;
  out.stack.optics.pixel_pitch_um = spec.pixel_pitch_um;
  for (int f = 0; f < spec.frames; ++f) {
    const defocus::OpticsParams optics = defocus::OpticsParams::from_f_number(
        spec.focal_length_mm, spec.f_number, fd[f], spec.pixel_pitch_um);
    Image frame = defocus::render_layered(out.texture, layers, depths, optics, 1.0);
    Homography h = Homography::identity();
    if (spec.breathing != 0.0) {
      const double s = std::pow(1.0 + spec.breathing, f);
      const double c = 0.5 * (n - 1);
      Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
      m(0, 0) = m(1, 1) = s;
      m(0, 2) = m(1, 2) = c * (1.0 - s);
      h = Homography(m);
      frame = align::warp(frame, h);
    }
    for (double& v : frame.samples()) v = std::clamp(v, 0.0, 1.0);
    out.stack.frames.push_back(std::move(frame));
    out.applied.push_back(h);
  }
  return out;
}

void write_scene(const SyntheticStack& scene, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::vector<ManifestFrame> entries;
  for (int f = 0; f < scene.stack.size(); ++f) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%02d.png", f);
    write_image(scene.stack.frames[f], out_dir / name, 8);
    entries.push_back({name, scene.stack.focal_distances_mm[f]});
  }
  write_manifest(out_dir / "manifest.json", entries, scene.stack.optics);
  save_depth(scene.ground_truth, out_dir / "ground_truth.png");
}

NoisyDepth noisy_depth_instance(std::uint64_t seed, int size, int frames) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> slope(-3.0, 3.0);
  std::uniform_real_distribution<double> level(0.0, frames - 1.0);
  std::uniform_int_distribution<int> corner(0, size - 31);
  std::uniform_int_distribution<int> extent(15, 39);
  std::normal_distribution<double> noise(0.0, 0.3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  NoisyDepth out;
  out.truth = DepthMap(size, size);
  const double a = slope(rng);
  const double b = slope(rng);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double v = 5.5 + a * (static_cast<double>(x) / size - 0.5) +
                       b * (static_cast<double>(y) / size - 0.5);
      out.truth.at(x, y) = std::clamp(v, 0.0, frames - 1.0);
    }
  }
  for (int r = 0; r < 3; ++r) {
    const int x0 = corner(rng), y0 = corner(rng);
    const int w = extent(rng), h = extent(rng);
    const double v = level(rng);
    for (int y = y0; y < std::min(y0 + h, size); ++y) {
      for (int x = x0; x < std::min(x0 + w, size); ++x) out.truth.at(x, y) = v;
    }
  }
  out.noisy = out.truth;
  for (double& v : out.noisy.values) v += noise(rng);
  for (double& v : out.noisy.values) {
    if (unit(rng) < 0.1) v = level(rng);
  }
  return out;
}

DepthMap salt_pepper_instance(std::uint64_t seed, int size, double fraction) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DepthMap d(size, size, 0.5);
  for (double& v : d.values) {
    if (unit(rng) < fraction) v = unit(rng) < 0.5 ? 0.0 : 1.0;
  }
  return d;
}

}  // namespace dff::synth
