#include <cmath>

#include "dff/error.hpp"
#include "dff/optimize.hpp"
#include "dff/parallel.hpp"

namespace dff::opt {

ScalarField to_field(const DepthMap& depth) {
  ScalarField f(depth.width, depth.height);
  f.v = depth.values;
  return f;
}

VectorField gradient(const ScalarField& u) {
  const int w = u.width;
  const int h = u.height;
  VectorField g(w, h);
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      g.x[i] = x + 1 < w ? u.v[i + 1] - u.v[i] : 0.0;
      g.y[i] = y + 1 < h ? u.v[i + w] - u.v[i] : 0.0;
    }
  });
  return g;
}

ScalarField divergence(const VectorField& g) {
  const int w = g.width;
  const int h = g.height;
  ScalarField d(w, h);
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      double v = 0.0;
      if (x + 1 < w) v += g.x[i];
      if (x > 0) v -= g.x[i - 1];
      if (y + 1 < h) v += g.y[i];
      if (y > 0) v -= g.y[i - w];
      d.v[i] = v;
    }
  });
  return d;
}

double inner(const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) s += a.v[i] * b.v[i];
  return s;
}

double inner(const VectorField& a, const VectorField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.x.size(); ++i) s += a.x[i] * b.x[i] + a.y[i] * b.y[i];
  return s;
}

double norm(const ScalarField& a) { return std::sqrt(inner(a, a)); }
double norm(const VectorField& a) { return std::sqrt(inner(a, a)); }

bool all_finite(const ScalarField& a) {
  for (double v : a.v) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool all_finite(const VectorField& a) {
  for (std::size_t i = 0; i < a.x.size(); ++i) {
    if (!std::isfinite(a.x[i]) || !std::isfinite(a.y[i])) return false;
  }
  return true;
}

void DenoiseProblem::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw InputError("lambda must be positive");
  }
  if (observed.width <= 0 || observed.height <= 0 ||
      observed.values.size() != static_cast<std::size_t>(observed.width) * observed.height) {
    throw InputError("observed depth map is empty or inconsistent");
  }
  for (double v : observed.values) {
    if (!std::isfinite(v)) throw InputError("observed depth map has non-finite values");
  }
}

double total_variation(const ScalarField& t) {
  const VectorField g = gradient(t);
  double tv = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    tv += std::sqrt(g.x[i] * g.x[i] + g.y[i] * g.y[i]);
  }
  return tv;
}

double energy(const DenoiseProblem& problem, const ScalarField& t) {
  const std::vector<double>& obs = problem.observed.values;
  if (t.v.size() != obs.size()) {
    throw InputError("field dimensions do not match the problem");
  }
  double fidelity = 0.0;
  if (problem.fidelity == Fidelity::kL1) {
    for (std::size_t i = 0; i < obs.size(); ++i) fidelity += std::abs(t.v[i] - obs[i]);
    fidelity *= problem.lambda;
  } else {
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const double d = t.v[i] - obs[i];
      fidelity += d * d;
    }
    fidelity *= 0.5 * problem.lambda;
  }
  return fidelity + total_variation(t);
}

}  // namespace dff::opt
