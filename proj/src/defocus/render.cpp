#include <algorithm>
#include <cmath>
#include <numeric>

#include "dff/defocus.hpp"
#include "dff/error.hpp"

namespace dff::defocus {
namespace {

struct Box {
  int x0, y0, x1, y1;  // inclusive
};

Image crop(const Image& img, const Box& b) {
  Image out(b.x1 - b.x0 + 1, b.y1 - b.y0 + 1, img.channels());
  for (int y = b.y0; y <= b.y1; ++y) {
    for (int x = b.x0; x <= b.x1; ++x) {
      for (int c = 0; c < img.channels(); ++c) out.at(x - b.x0, y - b.y0, c) = img.at(x, y, c);
    }
  }
  return out;
}

}  // namespace

std::vector<int> quantize_layers(const DepthMap& depth, int num_frames, int layer_count) {
  if (layer_count < 2) {
    throw InputError("layer count must be >= 2");
  }
  if (num_frames < 2) {
    throw InputError("quantization needs at least 2 frames");
  }
  const double scale = static_cast<double>(layer_count - 1) / (num_frames - 1);
  std::vector<int> layers(depth.values.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const double v = std::round(depth.values[i] * scale);
    layers[i] = static_cast<int>(std::clamp(v, 0.0, static_cast<double>(layer_count - 1)));
  }
  return layers;
}

std::vector<double> layer_depths(const std::vector<double>& focal_distances_mm, int layer_count) {
  if (layer_count < 2) {
    throw InputError("layer count must be >= 2");
  }
  const int n = static_cast<int>(focal_distances_mm.size());
  std::vector<double> out(layer_count);
  for (int k = 0; k < layer_count; ++k) {
    const double center = static_cast<double>(k) * (n - 1) / (layer_count - 1);
    out[k] = index_to_millimeters(focal_distances_mm, center);
  }
  return out;
}

Image render_layered(const Image& sharp, const std::vector<int>& layers,
                     const std::vector<double>& layer_depths_mm, const OpticsParams& optics,
                     double aperture_scale) {
  if (!(aperture_scale >= 0.0)) {
    throw InputError("aperture scale must be >= 0");
  }
  const int w = sharp.width();
  const int h = sharp.height();
  const int ch = sharp.channels();
  const int count = static_cast<int>(layer_depths_mm.size());
  if (layers.size() != sharp.pixel_count()) {
    throw InputError("layer map does not match the image");
  }
  std::vector<Box> boxes(count, Box{w, h, -1, -1});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int k = layers[static_cast<std::size_t>(y) * w + x];
      if (k < 0 || k >= count) {
        throw InputError("layer index outside the layer table");
      }
      Box& b = boxes[k];
      b.x0 = std::min(b.x0, x);
      b.y0 = std::min(b.y0, y);
      b.x1 = std::max(b.x1, x);
      b.y1 = std::max(b.y1, y);
    }
  }

  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return layer_depths_mm[a] > layer_depths_mm[b]; });

  Image out(w, h, ch, 0.0);
  Image alpha(w, h, 1, 0.0);
  for (int k : order) {
    if (boxes[k].x1 < 0) continue;
    const double radius =
        aperture_scale == 0.0 ? 0.0 : aperture_scale * coc_radius_px(optics, layer_depths_mm[k]);
    // Blurring is confined to the layer's bounding box grown by the kernel
    // reach; outside it both blurred terms are exactly zero.
    const int reach = static_cast<int>(std::ceil(radius)) + 1;
    const Box region{std::max(boxes[k].x0 - reach, 0), std::max(boxes[k].y0 - reach, 0),
                     std::min(boxes[k].x1 + reach, w - 1), std::min(boxes[k].y1 + reach, h - 1)};
    const Image local = crop(sharp, region);
    Image mask(local.width(), local.height(), 1, 0.0);
    Image color(local.width(), local.height(), ch, 0.0);
    for (int y = region.y0; y <= region.y1; ++y) {
      for (int x = region.x0; x <= region.x1; ++x) {
        if (layers[static_cast<std::size_t>(y) * w + x] != k) continue;
        mask.at(x - region.x0, y - region.y0) = 1.0;
        for (int c = 0; c < ch; ++c) {
          color.at(x - region.x0, y - region.y0, c) = local.at(x - region.x0, y - region.y0, c);
        }
      }
    }
    const Image a = hexagonal_blur(mask, radius);
    const Image cb = hexagonal_blur(color, radius);
    for (int y = region.y0; y <= region.y1; ++y) {
      for (int x = region.x0; x <= region.x1; ++x) {
        const double ak = a.at(x - region.x0, y - region.y0);
        for (int c = 0; c < ch; ++c) {
          out.at(x, y, c) = cb.at(x - region.x0, y - region.y0, c) + (1.0 - ak) * out.at(x, y, c);
        }
        alpha.at(x, y) = ak + (1.0 - ak) * alpha.at(x, y);
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double a = alpha.at(x, y);
      for (int c = 0; c < ch; ++c) {
        out.at(x, y, c) = a > 0.0 ? out.at(x, y, c) / a : sharp.at(x, y, c);
      }
    }
  }
  return out;
}

Image synthetic_defocus(const RefocusBundle& bundle, int focus_layer, double aperture_scale) {
  if (focus_layer < 0 || focus_layer >= bundle.layer_count) {
    throw InputError("focus layer " + std::to_string(focus_layer) + " out of range [0, " +
                     std::to_string(bundle.layer_count) + ")");
  }
  OpticsParams optics = bundle.optics;
  optics.focus_distance_mm = bundle.layer_depths_mm[focus_layer];
  return render_layered(bundle.all_in_focus, bundle.layers, bundle.layer_depths_mm, optics,
                        aperture_scale);
}

}  // namespace dff::defocus
