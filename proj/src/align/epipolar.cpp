#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "dff/align.hpp"
#include "dff/error.hpp"

namespace dff::align {
namespace {

constexpr double kMaxCondition = 1e8;

// Least squares with column equilibration. Returns false when the scaled
// system is rank deficient by the condition-number test.
bool equilibrated_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, Eigen::VectorXd& x) {
  Eigen::VectorXd scale = a.colwise().norm().transpose();
  for (Eigen::Index c = 0; c < scale.size(); ++c) {
    if (!(scale(c) > 0.0) || !std::isfinite(scale(c))) return false;
  }
  const Eigen::MatrixXd scaled = a * scale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (!(smin > 0.0) || smax / smin > kMaxCondition) return false;
  x = svd.solve(b).cwiseQuotient(scale);
  return x.allFinite();
}

double dot_p(const Eigen::Vector3d& dn, const Eigen::Vector2d& p) {
  return dn.x() * p.x() + dn.y() * p.y() + dn.z();
}

Eigen::Matrix3d normalizer(int width, int height) {
  const double s = std::max(std::max(width, height), 1) / 2.0;
  Eigen::Matrix3d t = Eigen::Matrix3d::Identity();
  t(0, 0) = t(1, 1) = 1.0 / s;
  t(0, 2) = -(width / 2.0) / s;
  t(1, 2) = -(height / 2.0) / s;
  return t;
}

Eigen::Vector2d transform(const Eigen::Matrix3d& t, const Eigen::Vector2d& p) {
  const Eigen::Vector3d q = t * Eigen::Vector3d(p.x(), p.y(), 1.0);
  return {q.x() / q.z(), q.y() / q.z()};
}

// Re-expresses a model fitted on t-normalized points in the original coordinates.
EpipolarModel denormalize(const EpipolarModel& m, const Eigen::Matrix3d& t) {
  const Eigen::Matrix3d ti = t.inverse();
  const Eigen::Matrix3d h = ti * m.h1.matrix() * t;
  const double c = h(2, 2);
  EpipolarModel out;
  out.h1 = Homography(h / c);
  out.k = ti * m.k / c;
  out.reference_plane = m.reference_plane;
  for (const Eigen::Vector3d& dn : m.delta_normals) {
    out.delta_normals.push_back(t.transpose() * dn);
  }
  return out;
}

Homography fit_plain(std::span<const Correspondence> pairs) {
  const Eigen::Vector3d zero = Eigen::Vector3d::Zero();
  std::vector<Eigen::Vector3d> normals(1, zero);
  std::vector<Correspondence> single(pairs.begin(), pairs.end());
  for (Correspondence& c : single) c.patch = 0;
  return solve_h1_k(normals, single).h1;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  return v[mid];
}

// Drops gross mismatches using each patch's own homography fit, then
// renumbers patches so that ids stay contiguous.
CorrespondenceSet reject_outliers(const CorrespondenceSet& set, double scale,
                                  const AlignConfig& cfg) {
  CorrespondenceSet kept;
  kept.width = set.width;
  kept.height = set.height;
  for (int p = 0; p < set.patch_count(); ++p) {
    const std::vector<Correspondence> pairs = set.patch(p);
    std::vector<char> keep(pairs.size(), 1);
    if (pairs.size() >= 8) {
      try {
        const Homography h = fit_plain(pairs);
        std::vector<double> residual(pairs.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) {
          residual[i] = scale * (h.apply(pairs[i].a) - pairs[i].b).norm();
        }
        const double limit = std::max(cfg.outlier_floor_px, cfg.outlier_factor * median(residual));
        for (std::size_t i = 0; i < pairs.size(); ++i) {
          keep[i] = residual[i] <= limit;
        }
      } catch (const NumericalError&) {
      }
    }
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (keep[i]) kept.pairs.push_back(pairs[i]);
    }
  }
  std::vector<int> renumber(std::max(set.patch_count(), 1), -1);
  int next = 0;
  for (Correspondence& c : kept.pairs) {
    if (renumber[c.patch] < 0) renumber[c.patch] = next++;
  }
  for (Correspondence& c : kept.pairs) c.patch = renumber[c.patch];
  return kept;
}

EpipolarModel initial_model(const CorrespondenceSet& set) {
  const int planes = set.patch_count();
  std::vector<int> population(planes, 0);
  for (const Correspondence& c : set.pairs) ++population[c.patch];
  const int reference = static_cast<int>(
      std::max_element(population.begin(), population.end()) - population.begin());

  EpipolarModel pooled;
  pooled.h1 = fit_plain(set.pairs);
  pooled.delta_normals.assign(planes, Eigen::Vector3d::Zero());
  pooled.reference_plane = reference;
  if (planes == 1 || population[reference] < 8) {
    return pooled;
  }

  try {
    const Homography href = fit_plain(set.patch(reference));
    std::vector<Homography> per_plane(planes, href);
    for (int p = 0; p < planes; ++p) {
      if (p != reference && population[p] >= 8) {
        per_plane[p] = fit_plain(set.patch(p));
      }
    }
    EpipolarModel factored = decompose_homographies(per_plane, reference);
    if (reprojection_error(factored, set) < reprojection_error(pooled, set)) {
      return factored;
    }
  } catch (const NumericalError&) {
  }
  return pooled;
}

}  // namespace

double EpipolarModel::plane_scale(int plane) const {
  return h1(2, 2) + k.z() * delta_normals.at(plane).z();
}

std::size_t EpipolarModel::parameter_count() const {
  return 11 + 3 * static_cast<std::size_t>(std::max(plane_count() - 1, 0));
}

Eigen::Vector3d solve_delta_n(const EpipolarModel& model, std::span<const Correspondence> patch) {
  if (patch.size() < 2) {
    throw NumericalError("degenerate patch");
  }
  const Eigen::Matrix3d& h = model.h1.matrix();
  const double k1 = model.k.x(), k2 = model.k.y(), k3 = model.k.z();
  const Eigen::Index n = static_cast<Eigen::Index>(patch.size());
  Eigen::MatrixXd a(2 * n, 3);
  Eigen::VectorXd b(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = patch[i].a.x(), y = patch[i].a.y();
    const double xp = patch[i].b.x(), yp = patch[i].b.y();
    const double w = h(2, 0) * x + h(2, 1) * y + h(2, 2);
    a.row(2 * i) << k1 * x - k3 * x * xp, k1 * y - k3 * y * xp, k1 - k3 * xp;
    a.row(2 * i + 1) << k2 * x - k3 * x * yp, k2 * y - k3 * y * yp, k2 - k3 * yp;
    b(2 * i) = xp * w - (h(0, 0) * x + h(0, 1) * y + h(0, 2));
    b(2 * i + 1) = yp * w - (h(1, 0) * x + h(1, 1) * y + h(1, 2));
  }
  Eigen::VectorXd sol;
  if (!equilibrated_solve(a, b, sol)) {
    throw NumericalError("degenerate patch");
  }
  return sol;
}

BasisSolution solve_h1_k(std::span<const Eigen::Vector3d> delta_normals,
                         std::span<const Correspondence> all) {
  if (2 * all.size() < 11) {
    throw NumericalError("degenerate configuration");
  }
  const bool with_k = std::any_of(delta_normals.begin(), delta_normals.end(),
                                  [](const Eigen::Vector3d& dn) { return dn.norm() > 1e-12; });
  const Eigen::Index unknowns = with_k ? 11 : 8;
  const Eigen::Index n = static_cast<Eigen::Index>(all.size());
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(2 * n, unknowns);
  Eigen::VectorXd rhs(2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Correspondence& c = all[i];
    if (c.patch < 0 || c.patch >= static_cast<int>(delta_normals.size())) {
      throw InputError("correspondence refers to an unknown plane");
    }
    const double x = c.a.x(), y = c.a.y();
    const double xp = c.b.x(), yp = c.b.y();
    q.row(2 * i).head(8) << x, y, 1, 0, 0, 0, -x * xp, -y * xp;
    q.row(2 * i + 1).head(8) << 0, 0, 0, x, y, 1, -x * yp, -y * yp;
    if (with_k) {
      const double np = dot_p(delta_normals[c.patch], c.a);
      q.row(2 * i).tail(3) << np, 0, -xp * np;
      q.row(2 * i + 1).tail(3) << 0, np, -yp * np;
    }
    rhs(2 * i) = xp;
    rhs(2 * i + 1) = yp;
  }
  Eigen::VectorXd g;
  if (!equilibrated_solve(q, rhs, g)) {
    throw NumericalError("degenerate configuration");
  }
  Eigen::Matrix3d h;
  h << g(0), g(1), g(2), g(3), g(4), g(5), g(6), g(7), 1.0;
  BasisSolution out;
  out.h1 = Homography(h);
  if (with_k) out.k = g.tail(3);
  return out;
}

Homography compose_homography(const EpipolarModel& model, int plane) {
  const Eigen::Matrix3d m =
      model.h1.matrix() + model.k * model.delta_normals.at(plane).transpose();
  if (m(2, 2) == 0.0) {
    throw NumericalError("improper homography");
  }
  return Homography(m);
}

EpipolarModel decompose_homographies(std::span<const Homography> per_plane, int reference) {
  const int planes = static_cast<int>(per_plane.size());
  if (reference < 0 || reference >= planes) {
    throw InputError("reference plane out of range");
  }
  EpipolarModel model;
  model.h1 = per_plane[reference];
  model.reference_plane = reference;
  model.delta_normals.assign(planes, Eigen::Vector3d::Zero());
  if (planes == 1) {
    return model;
  }
  const Eigen::Matrix3d& h1 = model.h1.matrix();
  Eigen::MatrixXd stacked(3, 3 * (planes - 1));
  std::vector<int> order;
  for (int p = 0; p < planes; ++p) {
    if (p == reference) continue;
    const Eigen::Matrix3d hi = per_plane[p].matrix();
    const Eigen::EigenSolver<Eigen::Matrix3d> es(hi.inverse() * h1);
    const Eigen::Vector3cd ev = es.eigenvalues();
    double best_gap = std::numeric_limits<double>::infinity();
    double d = 1.0;
    for (int i = 0; i < 3; ++i) {
      for (int j = i + 1; j < 3; ++j) {
        const double gap = std::abs(ev(i) - ev(j));
        if (gap < best_gap) {
          best_gap = gap;
          d = 0.5 * (ev(i) + ev(j)).real();
        }
      }
    }
    stacked.block<3, 3>(0, 3 * static_cast<Eigen::Index>(order.size())) = d * hi - h1;
    order.push_back(p);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeThinU);
  const Eigen::Vector3d u = svd.matrixU().col(0);
  model.k = u;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Eigen::Matrix3d di = stacked.block<3, 3>(0, 3 * static_cast<Eigen::Index>(i));
    model.delta_normals[order[i]] = di.transpose() * u;
  }
  return model;
}

double reprojection_error(const Homography& h, std::span<const Correspondence> pairs) {
  if (pairs.empty()) return 0.0;
  double sum = 0.0;
  for (const Correspondence& c : pairs) {
    sum += (h.apply(c.a) - c.b).norm();
  }
  return sum / static_cast<double>(pairs.size());
}

double reprojection_error(const EpipolarModel& model, const CorrespondenceSet& set) {
  if (set.pairs.empty()) return 0.0;
  std::vector<Homography> planes;
  for (int p = 0; p < model.plane_count(); ++p) {
    planes.push_back(compose_homography(model, p));
  }
  double sum = 0.0;
  for (const Correspondence& c : set.pairs) {
    if (c.patch < 0 || c.patch >= model.plane_count()) {
      throw InputError("correspondence refers to an unknown plane");
    }
    sum += (planes[c.patch].apply(c.a) - c.b).norm();
  }
  return sum / static_cast<double>(set.pairs.size());
}

MotionEstimate estimate_motion(const CorrespondenceSet& set, const AlignConfig& cfg) {
  const Eigen::Matrix3d t = normalizer(set.width, set.height);
  const double scale = 1.0 / t(0, 0);

  CorrespondenceSet normalized = set;
  for (Correspondence& c : normalized.pairs) {
    c.a = transform(t, c.a);
    c.b = transform(t, c.b);
  }
  normalized = reject_outliers(normalized, scale, cfg);
  if (normalized.pairs.size() < 6) {
    throw NumericalError("degenerate configuration");
  }

  EpipolarModel model = initial_model(normalized);
  const int planes = model.plane_count();
  std::vector<std::vector<Correspondence>> patches(planes);
  for (int p = 0; p < planes; ++p) patches[p] = normalized.patch(p);

  MotionEstimate out;
  double error = scale * reprojection_error(model, normalized);
  out.round_errors.push_back(error);
  for (int round = 0; round < cfg.max_rounds; ++round) {
    EpipolarModel next = model;
    double next_error = 0.0;
    try {
      if (next.k.norm() > 1e-12) {
        for (int p = 0; p < planes; ++p) {
          if (p == next.reference_plane) continue;
          try {
            next.delta_normals[p] = solve_delta_n(next, patches[p]);
          } catch (const NumericalError&) {
          }
        }
      }
      const BasisSolution basis = solve_h1_k(next.delta_normals, normalized.pairs);
      next.h1 = basis.h1;
      next.k = basis.k;
      next_error = scale * reprojection_error(next, normalized);
    } catch (const NumericalError&) {
      break;
    }
    if (!std::isfinite(next_error) || next_error > error) {
      break;  // keep the better model
    }
    const double gain = error - next_error;
    model = next;
    error = next_error;
    out.round_errors.push_back(error);
    ++out.rounds;
    if (error < cfg.reproj_threshold_px || gain <= 1e-12 * std::max(1.0, error)) {
      break;
    }
  }

  out.model = denormalize(model, t);
  out.final_error_px = error;
  out.converged = error < cfg.reproj_threshold_px;
  out.inliers = normalized;
  for (Correspondence& c : out.inliers.pairs) {
    c.a = transform(t.inverse(), c.a);
    c.b = transform(t.inverse(), c.b);
  }
  return out;
}

}  // namespace dff::align
