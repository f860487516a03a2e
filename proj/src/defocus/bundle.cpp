#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

#include "dff/defocus.hpp"
#include "dff/error.hpp"
#include "dff/stack_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dff::defocus {

RefocusBundle make_bundle(const Image& all_in_focus, const DepthMap& depth,
                          const FocalStack& stack, const OpticsParams& optics, int layer_count) {
  if (depth.width != all_in_focus.width() || depth.height != all_in_focus.height()) {
    throw InputError("depth map and all-in-focus image differ in size");
  }
  if (depth.units != DepthUnits::kFrameIndex) {
    throw InputError("bundle export expects depth in frame-index units");
  }
  optics.validate();
  RefocusBundle b;
  b.all_in_focus = all_in_focus;
  b.width = depth.width;
  b.height = depth.height;
  b.layer_count = layer_count;
  b.layers = quantize_layers(depth, stack.size(), layer_count);
  b.layer_depths_mm = layer_depths(stack.focal_distances_mm, layer_count);
  b.optics = optics;
  const auto [lo, hi] = std::minmax_element(depth.values.begin(), depth.values.end());
  b.depth_min = *lo;
  b.depth_max = *hi;
  return b;
}

void write_bundle(const RefocusBundle& b, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  write_image(b.all_in_focus, out_dir / "allfocus.png", 8);
  Image codes(b.width, b.height, 1);
  for (std::size_t i = 0; i < b.layers.size(); ++i) {
    codes.samples()[i] = b.layers[i] / 65535.0;
  }
  write_image(codes, out_dir / "depth.png", 16);

  json meta;
  meta["bundle_version"] = 1;
  meta["width"] = b.width;
  meta["height"] = b.height;
  meta["L"] = b.layer_count;
  meta["layer_depths_mm"] = b.layer_depths_mm;
  meta["optics"] = {{"focal_length_mm", b.optics.focal_length_mm},
                    {"aperture_diameter_mm", b.optics.aperture_mm},
                    {"f_number", b.optics.f_number()},
                    {"focus_distance_mm", b.optics.focus_distance_mm},
                    {"pixel_pitch_um", b.optics.pixel_pitch_um}};
  meta["kernel_shape"] = b.kernel_shape;
  meta["depth_min"] = b.depth_min;
  meta["depth_max"] = b.depth_max;
  meta["depth_units"] = "frame_index";
  meta["depth_encoding"] = "layer_index";
  meta["files"] = {{"all_in_focus", "allfocus.png"}, {"depth", "depth.png"}};
  std::ofstream os(out_dir / "meta.json");
  if (!os) {
    throw InputError("cannot write bundle metadata in " + out_dir.string());
  }
  os << meta.dump(2) << "\n";
}

RefocusBundle export_refocus_bundle(const Image& all_in_focus, const DepthMap& depth,
                                    const FocalStack& stack, const OpticsParams& optics,
                                    int layer_count, const fs::path& out_dir) {
  RefocusBundle b = make_bundle(all_in_focus, depth, stack, optics, layer_count);
  write_bundle(b, out_dir);
  return b;
}

RefocusBundle load_bundle(const fs::path& dir) {
  std::ifstream is(dir / "meta.json");
  if (!is) {
    throw InputError("missing file: " + (dir / "meta.json").string());
  }
  json meta;
  try {
    is >> meta;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed bundle metadata: ") + e.what());
  }
  if (meta.value("bundle_version", 0) != 1) {
    throw InputError("unsupported bundle version");
  }
  RefocusBundle b;
  try {
    b.layer_count = meta.at("L").get<int>();
    b.layer_depths_mm = meta.at("layer_depths_mm").get<std::vector<double>>();
    const json& o = meta.at("optics");
    b.optics.focal_length_mm = o.at("focal_length_mm").get<double>();
    b.optics.aperture_mm = o.at("aperture_diameter_mm").get<double>();
    b.optics.focus_distance_mm = o.at("focus_distance_mm").get<double>();
    b.optics.pixel_pitch_um = o.at("pixel_pitch_um").get<double>();
    b.kernel_shape = meta.value("kernel_shape", std::string("hexagon"));
    b.depth_min = meta.value("depth_min", 0.0);
    b.depth_max = meta.value("depth_max", 0.0);
  } catch (const json::exception& e) {
    throw InputError(std::string("incomplete bundle metadata: ") + e.what());
  }
  if (static_cast<int>(b.layer_depths_mm.size()) != b.layer_count || b.layer_count < 2) {
    throw InputError("bundle layer table does not match L");
  }
  b.all_in_focus = read_image(dir / "allfocus.png");
  const Image codes = read_image(dir / "depth.png");
  if (codes.channels() != 1 || codes.width() != b.all_in_focus.width() ||
      codes.height() != b.all_in_focus.height()) {
    throw InputError("bundle depth.png does not match allfocus.png");
  }
  b.width = codes.width();
  b.height = codes.height();
  b.layers.resize(codes.pixel_count());
  for (std::size_t i = 0; i < b.layers.size(); ++i) {
    const int layer = static_cast<int>(std::lround(codes.samples()[i] * 65535.0));
    if (layer < 0 || layer >= b.layer_count) {
      throw InputError("bundle depth.png holds a layer index outside [0, L)");
    }
    b.layers[i] = layer;
  }
  return b;
}

}  // namespace dff::defocus
