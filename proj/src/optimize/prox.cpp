#include <algorithm>
#include <cmath>
#include <random>

#include "dff/error.hpp"
#include "dff/optimize.hpp"
#include "dff/parallel.hpp"

namespace dff::opt {
namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0)) {
    throw InputError("prox scale alpha must be positive");
  }
}

ScalarField random_scalar(int w, int h) {
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ScalarField f(w, h);
  for (double& v : f.v) v = u(rng);
  return f;
}

VectorField random_vector(int w, int h) {
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VectorField f(w, h);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.x[i] = u(rng);
    f.y[i] = u(rng);
  }
  return f;
}

template <typename Field>
void scale_to_unit(Field& f, double n) {
  if (n <= 0.0) return;
  if constexpr (std::is_same_v<Field, ScalarField>) {
    for (double& v : f.v) v /= n;
  } else {
    for (std::size_t i = 0; i < f.size(); ++i) {
      f.x[i] /= n;
      f.y[i] /= n;
    }
  }
}

}  // namespace

ScalarField prox(const ScalarTerm& term, double alpha, const ScalarField& omega) {
  check_alpha(alpha);
  if (term.center && term.center->size() != omega.size()) {
    throw InputError("prox center does not match the field");
  }
  ScalarField out(omega.width, omega.height);
  const double t = alpha * term.weight;
  const auto center = [&](std::size_t i) { return term.center ? term.center->v[i] : 0.0; };
  switch (term.kind) {
    case ScalarTerm::Kind::kL1ToData:
      for (std::size_t i = 0; i < omega.size(); ++i) {
        const double c = center(i);
        const double d = omega.v[i] - c;
        out.v[i] = c + std::copysign(std::max(std::abs(d) - t, 0.0), d);
      }
      return out;
    case ScalarTerm::Kind::kL2ToData:
      for (std::size_t i = 0; i < omega.size(); ++i) {
        out.v[i] = (omega.v[i] + t * center(i)) / (1.0 + t);
      }
      return out;
  }
  throw InputError("unknown proximal term");
}

VectorField prox(const VectorTerm& term, double alpha, const VectorField& omega) {
  VectorField out(omega.width, omega.height);
  switch (term.kind) {
    case VectorTerm::Kind::kGroupNorm: {
      check_alpha(alpha);
      const double t = alpha * term.weight;
      for (std::size_t i = 0; i < omega.size(); ++i) {
        const double n = std::hypot(omega.x[i], omega.y[i]);
        const double s = n > t ? (n - t) / n : 0.0;
        out.x[i] = omega.x[i] * s;
        out.y[i] = omega.y[i] * s;
      }
      return out;
    }
    case VectorTerm::Kind::kUnitBall:
      for (std::size_t i = 0; i < omega.size(); ++i) {
        const double n = std::hypot(omega.x[i], omega.y[i]);
        const double s = n > 1.0 ? 1.0 / n : 1.0;
        out.x[i] = omega.x[i] * s;
        out.y[i] = omega.y[i] * s;
      }
      return out;
  }
  throw InputError("unknown proximal term");
}

VectorField TvConstraint::evaluate(const ScalarField& p, const VectorField& q) const {
  VectorField r = gradient(p);
  for (std::size_t i = 0; i < r.size(); ++i) {
    r.x[i] -= q.x[i];
    r.y[i] -= q.y[i];
  }
  return r;
}

PrimalJacobian TvConstraint::jacobian_p(const ScalarField&, const VectorField&) const {
  PrimalJacobian j;
  j.apply = [](const ScalarField& u) { return gradient(u); };
  j.adjoint = [](const VectorField& g) {
    ScalarField d = divergence(g);
    for (double& v : d.v) v = -v;
    return d;
  };
  return j;
}

SplitJacobian TvConstraint::jacobian_q(const ScalarField&, const VectorField&) const {
  const auto negate = [](const VectorField& g) {
    VectorField out = g;
    for (std::size_t i = 0; i < out.size(); ++i) {
      out.x[i] = -out.x[i];
      out.y[i] = -out.y[i];
    }
    return out;
  };
  return {negate, negate};
}

Linearization linearize(const ConstraintOperator& op, const ScalarField& p_k,
                        const VectorField& q_k, const ScalarField& p_next) {
  return {op.jacobian_p(p_k, q_k), op.jacobian_q(p_next, q_k)};
}

double operator_norm_sq(const PrimalJacobian& w, int width, int height, int iterations) {
  ScalarField u = random_scalar(width, height);
  scale_to_unit(u, norm(u));
  double estimate = 0.0;
  for (int k = 0; k < iterations; ++k) {
    ScalarField next = w.adjoint(w.apply(u));
    estimate = norm(next);
    scale_to_unit(next, estimate);
    u = std::move(next);
  }
  return estimate;
}

double operator_norm_sq(const SplitJacobian& t, int width, int height, int iterations) {
  VectorField u = random_vector(width, height);
  scale_to_unit(u, norm(u));
  double estimate = 0.0;
  for (int k = 0; k < iterations; ++k) {
    VectorField next = t.adjoint(t.apply(u));
    estimate = norm(next);
    scale_to_unit(next, estimate);
    u = std::move(next);
  }
  return estimate;
}

double joint_operator_norm_sq(const PrimalJacobian& w, const SplitJacobian& t, int width,
                              int height, int iterations) {
  // Power iteration on (W, T)(W, T)* = W W* + T T* acting on constraint space.
  VectorField v = random_vector(width, height);
  scale_to_unit(v, norm(v));
  double estimate = 0.0;
  for (int k = 0; k < iterations; ++k) {
    VectorField a = w.apply(w.adjoint(v));
    const VectorField b = t.apply(t.adjoint(v));
    for (std::size_t i = 0; i < a.size(); ++i) {
      a.x[i] += b.x[i];
      a.y[i] += b.y[i];
    }
    estimate = norm(a);
    scale_to_unit(a, estimate);
    v = std::move(a);
  }
  return estimate;
}

}  // namespace dff::opt
