#include <fstream>

#include "json.hpp"

#include "dff/align.hpp"
#include "dff/error.hpp"
#include "dff/stack_io.hpp"

namespace dff::align {

AlignedStack align_stack(const FocalStack& stack, const AlignConfig& cfg) {
  stack.validate();
  AlignedStack out;
  out.stack = stack;
  out.stack.homographies.assign(stack.size(), Homography::identity());

  FrameAlignment first;
  first.frame = 0;
  first.round_errors = {0.0};
  out.report.push_back(first);

  // to_frame maps frame-0 coordinates into frame f.
  Homography to_frame = Homography::identity();
  for (int f = 1; f < stack.size(); ++f) {
    const int source = cfg.chain ? f - 1 : 0;
    CorrespondenceSet matches =
        detect_correspondences(stack.frames[source], stack.frames[f], cfg.features);
    matches = partition_planes(std::move(matches), cfg.grid_rows, cfg.grid_cols);
    const MotionEstimate motion = estimate_motion(matches, cfg);
    const Homography pair = motion.model.h1;
    to_frame = cfg.chain ? pair * to_frame : pair;

    const Homography applied = to_frame.inverse();
    out.stack.frames[f] = warp(stack.frames[f], applied);
    out.stack.homographies[f] = applied;

    FrameAlignment fa;
    fa.frame = f;
    fa.homography = applied;
    fa.rounds = motion.rounds;
    fa.final_reproj_error_px = motion.final_error_px;
    fa.converged = motion.converged;
    fa.planes = motion.model.plane_count();
    fa.correspondences = static_cast<int>(motion.inliers.pairs.size());
    fa.round_errors = motion.round_errors;
    out.report.push_back(fa);
  }
  return out;
}

void write_alignment_report(const std::vector<FrameAlignment>& report,
                            const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["reference_frame"] = 0;
  doc["frames"] = nlohmann::json::array();
  for (const FrameAlignment& fa : report) {
    nlohmann::json h = nlohmann::json::array();
    for (int r = 0; r < 3; ++r) {
      h.push_back({fa.homography(r, 0), fa.homography(r, 1), fa.homography(r, 2)});
    }
    doc["frames"].push_back({{"frame", fa.frame},
                             {"homography", h},
                             {"rounds", fa.rounds},
                             {"final_reproj_error_px", fa.final_reproj_error_px},
                             {"converged", fa.converged},
                             {"planes", fa.planes},
                             {"correspondences", fa.correspondences},
                             {"round_errors", fa.round_errors}});
  }
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream os(path);
  if (!os) {
    throw InputError("cannot write alignment report: " + path.string());
  }
  os << doc.dump(2) << "\n";
}

}  // namespace dff::align
