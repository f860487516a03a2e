#include <algorithm>
#include <cmath>
#include <limits>

#include "dff/align.hpp"
#include "dff/error.hpp"
#include "dff/parallel.hpp"
#include "dff/stack_io.hpp"

namespace dff::align {
namespace {

struct Corner {
  int x = 0;
  int y = 0;
  double response = 0.0;
};

Image harris_response(const Image& gray, int radius, double k) {
  const int w = gray.width();
  const int h = gray.height();
  Image ixx(w, h, 1), iyy(w, h, 1), ixy(w, h, 1);
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const double gx = 0.5 * (gray.clamped(x + 1, y) - gray.clamped(x - 1, y));
      const double gy = 0.5 * (gray.clamped(x, y + 1) - gray.clamped(x, y - 1));
      ixx.at(x, y) = gx * gx;
      iyy.at(x, y) = gy * gy;
      ixy.at(x, y) = gx * gy;
    }
  });
  Image response(w, h, 1);
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      double a = 0.0, b = 0.0, c = 0.0;
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          a += ixx.clamped(x + dx, y + dy);
          b += iyy.clamped(x + dx, y + dy);
          c += ixy.clamped(x + dx, y + dy);
        }
      }
      response.at(x, y) = a * b - c * c - k * (a + b) * (a + b);
    }
  });
  return response;
}

std::vector<Corner> select_corners(const Image& response, int margin, const FeatureConfig& cfg) {
  const int w = response.width();
  const int h = response.height();
  double peak = 0.0;
  for (int y = margin; y < h - margin; ++y) {
    for (int x = margin; x < w - margin; ++x) {
      peak = std::max(peak, response.at(x, y));
    }
  }
  std::vector<Corner> candidates;
  if (peak <= 1e-12) {
    return candidates;
  }
  const double floor = cfg.quality * peak;
  for (int y = margin; y < h - margin; ++y) {
    for (int x = margin; x < w - margin; ++x) {
      const double r = response.at(x, y);
      if (r <= floor) continue;
      bool is_max = true;
      for (int dy = -1; dy <= 1 && is_max; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if ((dx != 0 || dy != 0) && response.at(x + dx, y + dy) > r) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) candidates.push_back({x, y, r});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Corner& a, const Corner& b) { return a.response > b.response; });

  std::vector<Corner> kept;
  const double min_d2 = static_cast<double>(cfg.min_distance) * cfg.min_distance;
  for (const Corner& c : candidates) {
    if (static_cast<int>(kept.size()) >= cfg.max_corners) break;
    bool far_enough = true;
    for (const Corner& k : kept) {
      const double dx = c.x - k.x;
      const double dy = c.y - k.y;
      if (dx * dx + dy * dy < min_d2) {
        far_enough = false;
        break;
      }
    }
    if (far_enough) kept.push_back(c);
  }
  return kept;
}

// NCC between the window of `a` centered at (ax, ay) and the window of `b`
// centered at (bx, by). Returns -2 when either window is flat.
double ncc(const Image& a, int ax, int ay, const Image& b, int bx, int by, int r) {
  const int n = (2 * r + 1) * (2 * r + 1);
  double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double va = a.at(ax + dx, ay + dy);
      const double vb = b.at(bx + dx, by + dy);
      sa += va;
      sb += vb;
      saa += va * va;
      sbb += vb * vb;
      sab += va * vb;
    }
  }
  const double var_a = saa - sa * sa / n;
  const double var_b = sbb - sb * sb / n;
  if (var_a <= 1e-10 || var_b <= 1e-10) {
    return -2.0;
  }
  return (sab - sa * sb / n) / std::sqrt(var_a * var_b);
}

double parabola_offset(double left, double center, double right) {
  const double denom = left - 2.0 * center + right;
  if (std::abs(denom) < 1e-12) return 0.0;
  return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

}  // namespace

int CorrespondenceSet::patch_count() const {
  int count = 0;
  for (const Correspondence& c : pairs) {
    count = std::max(count, c.patch + 1);
  }
  return count;
}

std::vector<Correspondence> CorrespondenceSet::patch(int id) const {
  std::vector<Correspondence> out;
  for (const Correspondence& c : pairs) {
    if (c.patch == id) out.push_back(c);
  }
  return out;
}

CorrespondenceSet detect_correspondences(const Image& frame_a, const Image& frame_b,
                                         const FeatureConfig& cfg) {
  if (frame_a.width() != frame_b.width() || frame_a.height() != frame_b.height()) {
    throw InputError("dimension mismatch between frames");
  }
  const Image a = to_grayscale(frame_a);
  const Image b = to_grayscale(frame_b);
  const int wr = cfg.window_radius;
  const int sr = cfg.search_radius;
  const int margin = wr + sr + 1;

  CorrespondenceSet set;
  set.width = a.width();
  set.height = a.height();
  if (a.width() > 2 * margin && a.height() > 2 * margin) {
    const std::vector<Corner> corners =
        select_corners(harris_response(a, cfg.harris_radius, cfg.harris_k), margin, cfg);
    std::vector<Correspondence> found(corners.size());
    std::vector<char> ok(corners.size(), 0);
    const int side = 2 * sr + 1;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < static_cast<int>(corners.size()); ++i) {
      const Corner& c = corners[i];
      std::vector<double> scores(static_cast<std::size_t>(side) * side);
      int best = -1;
      double best_score = -std::numeric_limits<double>::infinity();
      for (int dy = -sr; dy <= sr; ++dy) {
        for (int dx = -sr; dx <= sr; ++dx) {
          const int idx = (dy + sr) * side + (dx + sr);
          scores[idx] = ncc(a, c.x, c.y, b, c.x + dx, c.y + dy, wr);
          if (scores[idx] > best_score) {
            best_score = scores[idx];
            best = idx;
          }
        }
      }
      if (best < 0 || best_score < cfg.ncc_threshold) continue;
      const int bdx = best % side - sr;
      const int bdy = best / side - sr;
      if (std::abs(bdx) == sr || std::abs(bdy) == sr) continue;  // peak may lie outside the window
      const auto at = [&](int dx, int dy) { return scores[(dy + sr) * side + (dx + sr)]; };
      // A perfect score is already an exact integer match.
      const bool exact = best_score >= 1.0 - 1e-12;
      const double ox = exact ? 0.0 : parabola_offset(at(bdx - 1, bdy), best_score, at(bdx + 1, bdy));
      const double oy = exact ? 0.0 : parabola_offset(at(bdx, bdy - 1), best_score, at(bdx, bdy + 1));
      found[i].a = Eigen::Vector2d(c.x, c.y);
      found[i].b = Eigen::Vector2d(c.x + bdx + ox, c.y + bdy + oy);
      found[i].score = best_score;
      ok[i] = 1;
    }
    for (std::size_t i = 0; i < corners.size(); ++i) {
      if (ok[i]) set.pairs.push_back(found[i]);
    }
  }
  if (set.pairs.size() < 4) {
    throw InputError("insufficient features");
  }
  return set;
}

CorrespondenceSet partition_planes(CorrespondenceSet set, int rows, int cols) {
  rows = std::max(rows, 1);
  cols = std::max(cols, 1);
  const int cells = rows * cols;
  const double cw = std::max(set.width, 1) / static_cast<double>(cols);
  const double ch = std::max(set.height, 1) / static_cast<double>(rows);
  std::vector<int> cell_of(set.pairs.size());
  std::vector<int> population(cells, 0);
  for (std::size_t i = 0; i < set.pairs.size(); ++i) {
    const int cx = std::clamp(static_cast<int>(set.pairs[i].a.x() / cw), 0, cols - 1);
    const int cy = std::clamp(static_cast<int>(set.pairs[i].a.y() / ch), 0, rows - 1);
    cell_of[i] = cy * cols + cx;
    ++population[cell_of[i]];
  }

  // Every cell maps to itself if populated, else to the nearest populated cell
  // (cell-center distance, lowest index on ties).
  std::vector<int> target(cells, -1);
  for (int c = 0; c < cells; ++c) {
    if (population[c] >= 4) {
      target[c] = c;
      continue;
    }
    double best = std::numeric_limits<double>::infinity();
    for (int o = 0; o < cells; ++o) {
      if (population[o] < 4) continue;
      const double dx = (c % cols) - (o % cols);
      const double dy = (c / cols) - (o / cols);
      const double d = dx * dx + dy * dy;
      if (d < best) {
        best = d;
        target[c] = o;
      }
    }
  }
  // No cell reaches four matches: everything becomes one patch.
  if (std::none_of(population.begin(), population.end(), [](int p) { return p >= 4; })) {
    for (Correspondence& c : set.pairs) c.patch = 0;
    return set;
  }
  std::vector<int> renumber(cells, -1);
  int next = 0;
  for (int c = 0; c < cells; ++c) {
    if (target[c] == c) renumber[c] = next++;
  }
  for (std::size_t i = 0; i < set.pairs.size(); ++i) {
    set.pairs[i].patch = renumber[target[cell_of[i]]];
  }
  return set;
}

}  // namespace dff::align
