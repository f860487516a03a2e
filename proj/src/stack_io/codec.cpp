#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "json.hpp"

#include "dff/error.hpp"
#include "dff/stack_io.hpp"

namespace fs = std::filesystem;

namespace dff {
namespace {

const char* units_name(DepthUnits u) {
  return u == DepthUnits::kMillimeters ? "mm" : "frame_index";
}

DepthUnits parse_units(const std::string& s) {
  if (s == "mm") return DepthUnits::kMillimeters;
  if (s == "frame_index") return DepthUnits::kFrameIndex;
  throw InputError("unknown depth units '" + s + "'");
}

}  // namespace

Image read_image(const fs::path& path) {
  if (!fs::exists(path)) {
    throw InputError("missing file: " + path.string());
  }
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_ANYDEPTH | cv::IMREAD_ANYCOLOR);
  if (raw.empty()) {
    throw InputError("unreadable image: " + path.string());
  }
  double scale = 1.0;
  switch (raw.depth()) {
    case CV_8U: scale = 1.0 / 255.0; break;
    case CV_16U: scale = 1.0 / 65535.0; break;
    default: throw InputError("unsupported sample depth in " + path.string());
  }
  const int src_channels = raw.channels();
  const int channels = src_channels >= 3 ? 3 : 1;
  Image img(raw.cols, raw.rows, channels);
  cv::Mat samples;
  raw.convertTo(samples, CV_MAKETYPE(CV_64F, src_channels), scale);
  for (int y = 0; y < raw.rows; ++y) {
    const double* row = samples.ptr<double>(y);
    for (int x = 0; x < raw.cols; ++x) {
      const double* px = row + static_cast<std::ptrdiff_t>(x) * src_channels;
      if (channels == 1) {
        img.at(x, y) = px[0];
      } else {
        // OpenCV stores BGR(A).
        img.at(x, y, 0) = px[2];
        img.at(x, y, 1) = px[1];
        img.at(x, y, 2) = px[0];
      }
    }
  }
  return img;
}

void write_image(const Image& image, const fs::path& path, int bit_depth) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw InputError("only 1- or 3-channel images can be written");
  }
  if (bit_depth != 8 && bit_depth != 16) {
    throw InputError("bit depth must be 8 or 16");
  }
  const double max_code = bit_depth == 8 ? 255.0 : 65535.0;
  const int type = bit_depth == 8 ? CV_MAKETYPE(CV_8U, image.channels())
                                  : CV_MAKETYPE(CV_16U, image.channels());
  cv::Mat out(image.height(), image.width(), type);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < image.channels(); ++c) {
        const int dst_c = image.channels() == 3 ? 2 - c : 0;
        const double code = std::round(std::clamp(image.at(x, y, c), 0.0, 1.0) * max_code);
        if (bit_depth == 8) {
          out.ptr<std::uint8_t>(y)[x * image.channels() + dst_c] = static_cast<std::uint8_t>(code);
        } else {
          out.ptr<std::uint16_t>(y)[x * image.channels() + dst_c] =
              static_cast<std::uint16_t>(code);
        }
      }
    }
  }
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), out);
  } catch (const cv::Exception&) {
    ok = false;
  }
  if (!ok) {
    throw InputError("cannot write image: " + path.string());
  }
}

fs::path depth_sidecar_path(const fs::path& png_path) {
  fs::path p = png_path;
  p.replace_extension(".json");
  return p;
}

void save_depth(const DepthMap& depth, const fs::path& png_path) {
  if (depth.values.empty()) {
    throw InputError("empty depth map");
  }
  const auto [lo_it, hi_it] = std::minmax_element(depth.values.begin(), depth.values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double span = hi - lo;
  Image encoded(depth.width, depth.height, 1);
  for (std::size_t i = 0; i < depth.values.size(); ++i) {
    encoded.samples()[i] = span > 0.0 ? (depth.values[i] - lo) / span : 0.0;
  }
  write_image(encoded, png_path, 16);
  nlohmann::json meta = {{"min", lo}, {"max", hi}, {"units", units_name(depth.units)}};
  std::ofstream os(depth_sidecar_path(png_path));
  if (!os) {
    throw InputError("cannot write depth sidecar for " + png_path.string());
  }
  os << meta.dump(2) << "\n";
}

DepthMap load_depth(const fs::path& png_path) {
  const fs::path sidecar = depth_sidecar_path(png_path);
  std::ifstream is(sidecar);
  if (!is) {
    throw InputError("missing file: " + sidecar.string());
  }
  nlohmann::json meta;
  try {
    is >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("malformed depth sidecar " + sidecar.string() + ": " + e.what());
  }
  const Image encoded = read_image(png_path);
  if (encoded.channels() != 1) {
    throw InputError("depth image must be single-channel: " + png_path.string());
  }
  const double lo = meta.at("min").get<double>();
  const double hi = meta.at("max").get<double>();
  DepthMap depth(encoded.width(), encoded.height());
  depth.units = parse_units(meta.value("units", std::string("frame_index")));
  for (std::size_t i = 0; i < depth.values.size(); ++i) {
    depth.values[i] = lo + encoded.samples()[i] * (hi - lo);
  }
  return depth;
}

}  // namespace dff
