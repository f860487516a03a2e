#include <algorithm>
#include <fstream>
#include <numeric>

#include "json.hpp"

#include "dff/error.hpp"
#include "dff/stack_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace dff {
namespace {

std::optional<double> optional_number(const json& block, const char* key) {
  if (!block.contains(key) || block.at(key).is_null()) {
    return std::nullopt;
  }
  if (!block.at(key).is_number()) {
    throw InputError(std::string("optics field '") + key + "' must be a number");
  }
  return block.at(key).get<double>();
}

}  // namespace

FocalStack load_stack(const fs::path& manifest_path) {
  std::ifstream is(manifest_path);
  if (!is) {
    throw InputError("missing file: " + manifest_path.string());
  }
  json doc;
  try {
    is >> doc;
  } catch (const json::exception& e) {
    throw InputError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  if (!doc.contains("frames") || !doc.at("frames").is_array()) {
    throw InputError("manifest has no 'frames' array: " + manifest_path.string());
  }

  std::vector<ManifestFrame> entries;
  for (const json& f : doc.at("frames")) {
    if (!f.contains("path") || !f.contains("focal_distance_mm")) {
      throw InputError("manifest frame needs 'path' and 'focal_distance_mm'");
    }
    entries.push_back({f.at("path").get<std::string>(), f.at("focal_distance_mm").get<double>()});
  }
  if (entries.size() < 2) {
    throw InputError("insufficient frames: a focal stack needs at least 2");
  }
  std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.focal_distance_mm < b.focal_distance_mm;
  });
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (!(entries[i].focal_distance_mm > entries[i - 1].focal_distance_mm)) {
      throw InputError("non-monotone focal distances");
    }
  }

  FocalStack stack;
  const fs::path base = manifest_path.parent_path();
  for (const ManifestFrame& e : entries) {
    const fs::path p = e.path.is_absolute() ? e.path : base / e.path;
    stack.frames.push_back(read_image(p));
    stack.focal_distances_mm.push_back(e.focal_distance_mm);
  }
  if (doc.contains("optics") && doc.at("optics").is_object()) {
    const json& o = doc.at("optics");
    stack.optics.focal_length_mm = optional_number(o, "focal_length_mm");
    stack.optics.f_number = optional_number(o, "f_number");
    stack.optics.pixel_pitch_um = optional_number(o, "sensor_pixel_pitch_um");
  }
  stack.validate();
  return stack;
}

void write_manifest(const fs::path& manifest_path, const std::vector<ManifestFrame>& frames,
                    const CaptureOptics& optics) {
  json doc;
  doc["frames"] = json::array();
  for (const ManifestFrame& f : frames) {
    doc["frames"].push_back({{"path", f.path.string()}, {"focal_distance_mm", f.focal_distance_mm}});
  }
  json o = json::object();
  if (optics.focal_length_mm) o["focal_length_mm"] = *optics.focal_length_mm;
  if (optics.f_number) o["f_number"] = *optics.f_number;
  if (optics.pixel_pitch_um) o["sensor_pixel_pitch_um"] = *optics.pixel_pitch_um;
  if (!o.empty()) doc["optics"] = o;

  if (manifest_path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(manifest_path.parent_path(), ec);
  }
  std::ofstream os(manifest_path);
  if (!os) {
    throw InputError("cannot write manifest: " + manifest_path.string());
  }
  os << doc.dump(2) << "\n";
}

}  // namespace dff
