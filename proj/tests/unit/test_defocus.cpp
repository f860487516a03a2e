#include <cmath>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "json.hpp"

#include "dff/defocus.hpp"
#include "dff/error.hpp"
#include "dff/focus.hpp"
#include "dff/stack_io.hpp"
#include "dff/synth.hpp"
#include "oracles.hpp"

using namespace dff;
using namespace dff::defocus;

namespace {

OpticsParams phone_optics() {
  OpticsParams o;
  o.focal_length_mm = 4.2;
  o.aperture_mm = 1.5;
  o.focus_distance_mm = 1000;
  o.pixel_pitch_um = 1.4;
  return o;
}

/// 120x120 textured scene: a 30x30 front square (layer 0, 400 mm) over a far
/// background (layer 1, 2000 mm).
RefocusBundle two_layer_bundle() {
  RefocusBundle b;
  b.width = b.height = 120;
  b.all_in_focus = synth::random_texture(120, 120, 0.8, 42);
  b.layer_count = 2;
  b.layer_depths_mm = {400, 2000};
  b.optics = OpticsParams::from_f_number(25, 8, 400, 20);
  b.layers.assign(120 * 120, 1);
  for (int y = 45; y < 75; ++y) {
    for (int x = 45; x < 75; ++x) b.layers[y * 120 + x] = 0;
  }
  return b;
}

Image oracle_blur(const Image& img, double r) {
  const int lo = static_cast<int>(std::floor(r));
  const double frac = r - lo;
  int half = 0;
  const std::vector<double> ka = oracle::polygon_kernel(lo, half);
  const Image a = oracle::direct_convolution(img, ka, half);
  if (frac == 0.0) return a;
  const std::vector<double> kb = oracle::polygon_kernel(lo + 1, half);
  const Image b = oracle::direct_convolution(img, kb, half);
  Image out = a;
  for (std::size_t i = 0; i < out.samples().size(); ++i) {
    out.samples()[i] = (1 - frac) * a.samples()[i] + frac * b.samples()[i];
  }
  return out;
}

}  // namespace

TEST(CircleOfConfusion, ZeroAtFocusDistance) {
  EXPECT_EQ(coc_diameter(phone_optics(), 1000.0), 0.0);
}

TEST(CircleOfConfusion, FiniteAsymptote) {
  const OpticsParams o = phone_optics();
  const double limit = o.aperture_mm * o.focal_length_mm / (o.focus_distance_mm - o.focal_length_mm);
  EXPECT_NEAR(coc_diameter(o, 1e12), limit, 1e-9 * limit);
  EXPECT_LT(coc_diameter(o, 1e6), limit);
}

TEST(CircleOfConfusion, PhoneExample) {
  const double expected = 1.5 * 4.2 * 1000 / (2000 * 995.8);
  EXPECT_DOUBLE_EQ(coc_diameter(phone_optics(), 2000.0), expected);
  EXPECT_NEAR(coc_diameter(phone_optics(), 2000.0), 0.003163, 5e-7);
  EXPECT_DOUBLE_EQ(coc_radius_px(phone_optics(), 2000.0), expected * 1000 / 1.4 / 2);
}

TEST(CircleOfConfusion, MonotoneOnEachSide) {
  const OpticsParams o = phone_optics();
  double prev = 0.0;
  for (double l = 1000; l < 50000; l *= 1.1) {
    const double c = coc_diameter(o, l);
    EXPECT_GE(c, prev);
    prev = c;
  }
  prev = 0.0;
  for (double l = 1000; l > 10; l /= 1.1) {
    const double c = coc_diameter(o, l);
    EXPECT_GE(c, prev);
    prev = c;
  }
}

TEST(CircleOfConfusion, InvalidInputs) {
  EXPECT_THROW(coc_diameter(phone_optics(), 0.0), InputError);
  EXPECT_THROW(coc_diameter(phone_optics(), -5.0), InputError);
  OpticsParams o = phone_optics();
  o.focus_distance_mm = 4.0;
  EXPECT_THROW(o.validate(), InputError);
  EXPECT_THROW(OpticsParams::from_f_number(25, 0, 400, 20), InputError);
  EXPECT_DOUBLE_EQ(OpticsParams::from_f_number(25, 2, 400, 20).aperture_mm, 12.5);
  EXPECT_DOUBLE_EQ(OpticsParams::from_f_number(25, 2, 400, 20).f_number(), 2.0);
}

TEST(HexagonalKernel, RadiusZeroIsIdentity) {
  const Kernel k = hexagonal_kernel(0.0);
  EXPECT_EQ(k.size(), 1);
  EXPECT_EQ(k.weights, std::vector<double>{1.0});
}

TEST(HexagonalKernel, NormalizedAndSymmetric) {
  for (double r : {0.5, 1.0, 1.7, 2.0, 3.3, 5.0, 8.0, 12.5}) {
    const Kernel k = hexagonal_kernel(r);
    double sum = 0.0;
    for (double v : k.weights) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    for (int dy = -k.half; dy <= k.half; ++dy) {
      for (int dx = -k.half; dx <= k.half; ++dx) {
        EXPECT_EQ(k.at(dx, dy), k.at(-dx, dy));
        EXPECT_EQ(k.at(dx, dy), k.at(dx, -dy));
      }
    }
  }
}

TEST(HexagonalKernel, SixFoldRotationOfTheHexagonTest) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  const double c = 0.5, s = std::sqrt(3.0) / 2.0;
  int inside = 0;
  for (int i = 0; i < 20000; ++i) {
    const double x = u(rng), y = u(rng);
    const double rx = c * x - s * y, ry = s * x + c * y;
    // Skip points within rounding of an edge.
    const double margin = std::min({std::abs(std::abs(y) - s), std::abs(std::sqrt(3.0) * std::abs(x) + std::abs(y) - std::sqrt(3.0))});
    if (margin < 1e-6) continue;
    EXPECT_EQ(in_hexagon(x, y, 1.0), in_hexagon(rx, ry, 1.0));
    inside += in_hexagon(x, y, 1.0);
  }
  // Area of the unit hexagon is 3 sqrt(3) / 2 out of the 2.4^2 sample square.
  EXPECT_NEAR(inside / 20000.0, 1.5 * std::sqrt(3.0) / 5.76, 0.01);
}

TEST(HexagonalKernel, SupportMatchesPolygonRasterization) {
  for (double r : {1.0, 2.0, 2.5, 3.0, 4.6, 7.0, 10.0}) {
    const Kernel k = hexagonal_kernel(r);
    int half = 0;
    const std::vector<double> ref = oracle::polygon_kernel(r, half);
    ASSERT_EQ(half, k.half);
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(k.weights[i], ref[i], 1e-15) << r;
  }
  const Kernel k2 = hexagonal_kernel(2.0);
  int count = 0;
  for (double v : k2.weights) count += v > 0;
  EXPECT_EQ(count, 11);
}

TEST(HexagonalKernel, NegativeRadiusRejected) {
  EXPECT_THROW(hexagonal_kernel(-0.5), InputError);
  EXPECT_THROW(hexagonal_blur(Image(3, 3, 1), -1.0), InputError);
}

TEST(HexagonalBlur, MatchesDirectConvolution) {
  const Image t = synth::random_texture(37, 29, 0.8, 5);
  Image rgb(20, 16, 3);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  for (double& v : rgb.samples()) v = u(rng);
  for (double r : {0.0, 1.0, 2.0, 3.0, 6.0, 2.4, 4.75}) {
    const Image a = hexagonal_blur(t, r);
    const Image b = oracle_blur(t, r);
    for (std::size_t i = 0; i < a.samples().size(); ++i) EXPECT_NEAR(a.samples()[i], b.samples()[i], 1e-12) << r;
    const Image c = hexagonal_blur(rgb, r);
    const Image d = oracle_blur(rgb, r);
    for (std::size_t i = 0; i < c.samples().size(); ++i) EXPECT_NEAR(c.samples()[i], d.samples()[i], 1e-12) << r;
  }
}

TEST(HexagonalBlur, PreservesConstants) {
  const Image b = hexagonal_blur(Image(30, 20, 1, 0.3), 7.5);
  for (double v : b.samples()) EXPECT_NEAR(v, 0.3, 1e-12);
}

TEST(SyntheticDefocus, ConstantDepthAtFocusIsExact) {
  RefocusBundle b = two_layer_bundle();
  b.layers.assign(b.layers.size(), 1);
  const Image out = synthetic_defocus(b, 1, 1.0);
  for (std::size_t i = 0; i < out.samples().size(); ++i) EXPECT_EQ(out.samples()[i], b.all_in_focus.samples()[i]);
}

TEST(SyntheticDefocus, ZeroApertureIsExact) {
  const RefocusBundle b = two_layer_bundle();
  for (int layer : {0, 1}) {
    const Image out = synthetic_defocus(b, layer, 0.0);
    for (std::size_t i = 0; i < out.samples().size(); ++i) EXPECT_EQ(out.samples()[i], b.all_in_focus.samples()[i]);
  }
}

TEST(SyntheticDefocus, BackgroundMatchesDirectConvolution) {
  const RefocusBundle b = two_layer_bundle();
  OpticsParams o = b.optics;
  o.focus_distance_mm = 400;
  const double r = coc_radius_px(o, 2000);
  ASSERT_GT(r, 2.0);
  const Image out = synthetic_defocus(b, 0, 1.0);
  const Image ref = oracle_blur(b.all_in_focus, r);
  const int keep_out = static_cast<int>(std::ceil(r)) + 1;
  int checked = 0;
  for (int y = 0; y < 120; ++y) {
    for (int x = 0; x < 120; ++x) {
      const int dx = std::max({45 - x, x - 74, 0});
      const int dy = std::max({45 - y, y - 74, 0});
      if (std::max(dx, dy) <= keep_out) continue;
      EXPECT_NEAR(out.at(x, y), ref.at(x, y), 1e-6);
      ++checked;
    }
  }
  EXPECT_GT(checked, 5000);
  // The in-focus square is reproduced exactly away from its border.
  for (int y = 50; y < 70; ++y) {
    for (int x = 50; x < 70; ++x) EXPECT_NEAR(out.at(x, y), b.all_in_focus.at(x, y), 1e-12);
  }
}

TEST(SyntheticDefocus, MeanIntensityPreserved) {
  const RefocusBundle b = two_layer_bundle();
  double m0 = 0.0;
  for (double v : b.all_in_focus.samples()) m0 += v;
  m0 /= b.all_in_focus.samples().size();
  for (int layer : {0, 1}) {
    const Image out = synthetic_defocus(b, layer, 1.0);
    double m = 0.0;
    for (double v : out.samples()) m += v;
    m /= out.samples().size();
    EXPECT_NEAR(m, m0, 0.01 * m0);
  }
}

TEST(SyntheticDefocus, FocusedLayerIsSharpest) {
  const RefocusBundle b = two_layer_bundle();
  for (int focus : {0, 1}) {
    const Image ml = focus::modified_laplacian(synthetic_defocus(b, focus, 1.0), 2);
    double sum[2] = {0, 0};
    int count[2] = {0, 0};
    for (std::size_t i = 0; i < b.layers.size(); ++i) {
      sum[b.layers[i]] += ml.samples()[i];
      ++count[b.layers[i]];
    }
    const double focused = sum[focus] / count[focus];
    const double other = sum[1 - focus] / count[1 - focus];
    EXPECT_GE(focused, other);
  }
}

TEST(SyntheticDefocus, InvalidFocusLayer) {
  const RefocusBundle b = two_layer_bundle();
  EXPECT_THROW(synthetic_defocus(b, 2, 1.0), InputError);
  EXPECT_THROW(synthetic_defocus(b, -1, 1.0), InputError);
  EXPECT_THROW(synthetic_defocus(b, 0, -1.0), InputError);
}

TEST(Bundle, LayerTableAndQuantization) {
  const std::vector<double> fd = {400, 500, 700, 1000, 2000};
  EXPECT_EQ(layer_depths(fd, 5), fd);
  const std::vector<double> three = layer_depths(fd, 3);
  EXPECT_DOUBLE_EQ(three[0], 400);
  EXPECT_DOUBLE_EQ(three[1], 700);
  EXPECT_DOUBLE_EQ(three[2], 2000);
  DepthMap d(5, 1);
  d.values = {0.0, 0.9, 2.0, 3.2, 4.0};
  EXPECT_EQ(quantize_layers(d, 5, 5), (std::vector<int>{0, 1, 2, 3, 4}));
  EXPECT_EQ(quantize_layers(d, 5, 3), (std::vector<int>{0, 0, 1, 2, 2}));
  EXPECT_THROW(quantize_layers(d, 5, 1), InputError);
}

TEST(Bundle, ConstantDepthIsSingleValued) {
  const auto dir = oracle::scratch_dir("bundle_const");
  FocalStack s;
  s.frames.assign(6, Image(10, 8, 1));
  s.focal_distances_mm = {400, 500, 600, 700, 800, 900};
  for (int L : {2, 6, 12}) {
    const RefocusBundle b = export_refocus_bundle(Image(10, 8, 1, 0.5), DepthMap(10, 8, 2.0), s,
                                                  OpticsParams::from_f_number(25, 2, 600, 20), L, dir);
    const Image codes = read_image(dir / "depth.png");
    for (double v : codes.samples()) EXPECT_EQ(v, codes.samples()[0]);
    EXPECT_EQ(b.layers.front(), static_cast<int>(std::lround(2.0 * (L - 1) / 5.0)));
  }
}

TEST(Bundle, RoundTripReproducesLayers) {
  const auto dir = oracle::scratch_dir("bundle_rt");
  FocalStack s;
  s.frames.assign(12, Image(33, 21, 3));
  s.focal_distances_mm = synth::focal_distances(synth::SceneSpec{});
  DepthMap d(33, 21);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 11);
  for (double& v : d.values) v = u(rng);
  Image aif(33, 21, 3);
  for (double& v : aif.samples()) v = std::round(255 * u(rng) / 11) / 255;
  const RefocusBundle b =
      export_refocus_bundle(aif, d, s, OpticsParams::from_f_number(25, 2, 700, 20), 12, dir);
  const RefocusBundle back = load_bundle(dir);
  EXPECT_EQ(back.layers, b.layers);
  EXPECT_EQ(back.layer_count, 12);
  EXPECT_EQ(back.layer_depths_mm, b.layer_depths_mm);
  EXPECT_EQ(back.kernel_shape, "hexagon");
  EXPECT_DOUBLE_EQ(back.optics.aperture_mm, 12.5);
  EXPECT_DOUBLE_EQ(back.optics.focus_distance_mm, 700);
  for (std::size_t i = 0; i < aif.samples().size(); ++i) EXPECT_NEAR(back.all_in_focus.samples()[i], aif.samples()[i], 1e-12);

  std::ifstream is(dir / "meta.json");
  nlohmann::json meta;
  is >> meta;
  EXPECT_EQ(meta["bundle_version"], 1);
  EXPECT_EQ(meta["L"], 12);
  EXPECT_EQ(meta["kernel_shape"], "hexagon");
  EXPECT_DOUBLE_EQ(meta["depth_min"].get<double>(), *std::min_element(d.values.begin(), d.values.end()));
  EXPECT_DOUBLE_EQ(meta["depth_max"].get<double>(), *std::max_element(d.values.begin(), d.values.end()));
  EXPECT_TRUE(meta["optics"].contains("f_number"));
}

TEST(Bundle, RejectsBadMetadata) {
  const auto dir = oracle::scratch_dir("bundle_bad");
  EXPECT_THROW(load_bundle(dir), InputError);
  FocalStack s;
  s.frames.assign(3, Image(4, 4, 1));
  s.focal_distances_mm = {400, 500, 600};
  export_refocus_bundle(Image(4, 4, 1), DepthMap(4, 4, 1.0), s,
                        OpticsParams::from_f_number(25, 2, 500, 20), 3, dir);
  nlohmann::json meta;
  std::ifstream(dir / "meta.json") >> meta;
  meta["bundle_version"] = 2;
  std::ofstream(dir / "meta.json") << meta.dump();
  EXPECT_THROW(load_bundle(dir), InputError);
  DepthMap mm(4, 4, 500.0);
  mm.units = DepthUnits::kMillimeters;
  EXPECT_THROW(make_bundle(Image(4, 4, 1), mm, s, OpticsParams::from_f_number(25, 2, 500, 20), 3),
               InputError);
}
