#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dff/geometry.hpp"
#include "dff/image.hpp"

namespace dff::align {

/// One point match: `a` in the first frame, `b` in the second, both in pixels.
struct Correspondence {
  Eigen::Vector2d a = Eigen::Vector2d::Zero();
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
  int patch = 0;
  double score = 1.0;
};

struct CorrespondenceSet {
  int width = 0;   // extent of the first frame, used for grid partitioning
  int height = 0;
  std::vector<Correspondence> pairs;

  int patch_count() const;
  std::vector<Correspondence> patch(int id) const;
};

struct FeatureConfig {
  int max_corners = 300;
  int min_distance = 10;
  int harris_radius = 2;
  double harris_k = 0.04;
  double quality = 0.01;  // corner response relative to the strongest one
  int window_radius = 7;
  int search_radius = 10;
  double ncc_threshold = 0.8;
};

/// Harris corners on `frame_a`, each matched into `frame_b` by an exhaustive
/// normalized cross-correlation search with parabolic sub-pixel refinement.
/// Throws InputError("insufficient features") when fewer than 4 matches survive.
CorrespondenceSet detect_correspondences(const Image& frame_a, const Image& frame_b,
                                         const FeatureConfig& cfg = {});

/// Assigns each match the id of the rows x cols grid cell containing its
/// first-frame point. Cells holding fewer than 4 matches are merged into the
/// nearest cell that holds at least 4; ids are then renumbered 0..j-1.
CorrespondenceSet partition_planes(CorrespondenceSet set, int rows, int cols);

/// Shared-basis model of the per-plane homographies:
///   d_i H_i = H1 + K dN_i^T,
/// with dN of the reference plane fixed at zero and d_reference = 1.
struct EpipolarModel {
  Homography h1;
  Eigen::Vector3d k = Eigen::Vector3d::Zero();
  std::vector<Eigen::Vector3d> delta_normals;  // one per plane
  int reference_plane = 0;

  int plane_count() const { return static_cast<int>(delta_normals.size()); }
  /// d_i, the (2,2) entry of H1 + K dN_i^T.
  double plane_scale(int plane) const;
  /// Stored free numbers: 8 for H1, 3 for K, 3 per non-reference plane.
  std::size_t parameter_count() const;
};

/// Least-squares dN_i for one plane patch with H1 and K held fixed. Each match
/// contributes the two linear equations V1 dN = b1, V2 dN = b2 with the point
/// taken as (x, y, 1). Throws NumericalError("degenerate patch") if the stacked
/// system has condition number above 1e8 (or fewer than 2 matches).
Eigen::Vector3d solve_delta_n(const EpipolarModel& model, std::span<const Correspondence> patch);

struct BasisSolution {
  Homography h1;
  Eigen::Vector3d k = Eigen::Vector3d::Zero();
};

/// Least-squares (h1..h8, k1..k3) with every dN_i held fixed, solving the
/// stacked E/F rows of all matches. K columns that vanish (all dN_i . P == 0)
/// are dropped and K is returned as zero. Throws
/// NumericalError("degenerate configuration") for fewer than 11 equations or a
/// rank-deficient system.
BasisSolution solve_h1_k(std::span<const Eigen::Vector3d> delta_normals,
                         std::span<const Correspondence> all);

/// H_i = (H1 + K dN_i^T) / d_i. Throws NumericalError("improper homography")
/// when d_i is zero.
Homography compose_homography(const EpipolarModel& model, int plane);

/// Factors per-plane homographies into the shared form relative to
/// `reference`. The scale d_i is the repeated eigenvalue of H_i^-1 H1.
EpipolarModel decompose_homographies(std::span<const Homography> per_plane, int reference);

/// Mean Euclidean distance between h(a) and b.
double reprojection_error(const Homography& h, std::span<const Correspondence> pairs);

/// Same, with each match mapped by its own plane's composed homography.
double reprojection_error(const EpipolarModel& model, const CorrespondenceSet& set);

struct AlignConfig {
  int grid_rows = 3;
  int grid_cols = 3;
  double reproj_threshold_px = 0.5;
  int max_rounds = 20;
  /// Pairs whose residual under their own patch fit exceeds
  /// max(outlier_floor_px, outlier_factor * median) are dropped before alternation.
  double outlier_floor_px = 1.5;
  double outlier_factor = 5.0;
  /// Estimate each frame against its predecessor and compose, instead of
  /// matching every frame directly against frame 0.
  bool chain = true;
  FeatureConfig features;
};

struct MotionEstimate {
  EpipolarModel model;               // pixel coordinates
  std::vector<double> round_errors;  // [0] is the initial model, then one per accepted round
  int rounds = 0;
  double final_error_px = 0.0;
  bool converged = false;
  CorrespondenceSet inliers;
};

/// Alternates solve_delta_n over all non-reference patches and solve_h1_k
/// until the mean reprojection error drops below the threshold, stops
/// improving, or max_rounds is reached. A round that would increase the error
/// is rejected and ends the alternation.
MotionEstimate estimate_motion(const CorrespondenceSet& set, const AlignConfig& cfg);

struct FrameAlignment {
  int frame = 0;
  Homography homography;  // applied to warp the frame onto frame 0
  int rounds = 0;
  double final_reproj_error_px = 0.0;
  bool converged = true;
  int planes = 1;
  int correspondences = 0;
  std::vector<double> round_errors;
};

struct AlignedStack {
  FocalStack stack;
  std::vector<FrameAlignment> report;
};

/// Warps every frame onto frame 0 with its reference-plane homography H1.
AlignedStack align_stack(const FocalStack& stack, const AlignConfig& cfg = {});

/// JSON: {"reference_frame": 0, "frames": [{frame, homography, rounds,
/// final_reproj_error_px, converged, planes, correspondences, round_errors}]}
void write_alignment_report(const std::vector<FrameAlignment>& report,
                            const std::filesystem::path& path);

/// out(p) = img(h^-1 p), bilinear, edge-clamped outside the source.
Image warp(const Image& img, const Homography& h);

}  // namespace dff::align
