#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <string>

#include "dff/error.hpp"
#include "dff/optimize.hpp"

namespace dff::opt {
namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

double shrink(double v, double t) { return std::copysign(std::max(std::abs(v) - t, 0.0), v); }

// The smoothed dual of one denoising problem.
class Dual {
 public:
  Dual(const DenoiseProblem& problem, double epsilon)
      : observed_(to_field(problem.observed)) {
    if (problem.fidelity == Fidelity::kL1) {
      lambda1_ = problem.lambda;
      mu_ = epsilon;
    } else {
      lambda1_ = 0.0;
      mu_ = problem.lambda;
    }
    if (!(mu_ > 0.0)) {
      throw InputError("baseline smoothing epsilon must be positive");
    }
  }

  double lipschitz() const { return 8.0 / mu_; }

  ScalarField primal(const VectorField& phi) const {
    ScalarField p = divergence(phi);
    for (std::size_t i = 0; i < p.size(); ++i) {
      p.v[i] = observed_.v[i] + shrink(p.v[i], lambda1_) / mu_;
    }
    return p;
  }

  double value(const VectorField& phi) const {
    const ScalarField v = divergence(phi);
    double f = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double s = shrink(v.v[i], lambda1_);
      f += v.v[i] * observed_.v[i] + s * s / (2.0 * mu_);
    }
    return f;
  }

  /// grad F(phi) = -grad p(phi).
  VectorField gradient_at(const VectorField& phi) const {
    VectorField g = gradient(primal(phi));
    for (std::size_t i = 0; i < g.size(); ++i) {
      g.x[i] = -g.x[i];
      g.y[i] = -g.y[i];
    }
    return g;
  }

  /// ||grad p - q|| with q the element of the TV subdifferential at phi
  /// nearest to grad p: zero where |phi| < 1, the non-negative multiple of phi
  /// otherwise.
  double residual(const VectorField& phi, const ScalarField& p) const {
    const VectorField g = gradient(p);
    double sum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      double qx = 0.0, qy = 0.0;
      const double n = std::hypot(phi.x[i], phi.y[i]);
      if (n >= 1.0 - 1e-12) {
        const double c = std::max(g.x[i] * phi.x[i] + g.y[i] * phi.y[i], 0.0);
        qx = c * phi.x[i];
        qy = c * phi.y[i];
      }
      const double dx = g.x[i] - qx;
      const double dy = g.y[i] - qy;
      sum += dx * dx + dy * dy;
    }
    return std::sqrt(sum);
  }

 private:
  ScalarField observed_;
  double lambda1_ = 0.0;
  double mu_ = 1.0;
};

VectorField project(const VectorField& v) { return prox(VectorTerm{VectorTerm::Kind::kUnitBall, 1.0}, 1.0, v); }

// phi - tau * g, projected.
VectorField forward_backward(const VectorField& phi, const VectorField& g, double tau) {
  VectorField step = phi;
  for (std::size_t i = 0; i < step.size(); ++i) {
    step.x[i] -= tau * g.x[i];
    step.y[i] -= tau * g.y[i];
  }
  return project(step);
}

VectorField difference(const VectorField& a, const VectorField& b) {
  VectorField d = a;
  for (std::size_t i = 0; i < d.size(); ++i) {
    d.x[i] -= b.x[i];
    d.y[i] -= b.y[i];
  }
  return d;
}

}  // namespace

Method parse_method(const std::string& name) {
  for (Method m : all_methods()) {
    if (method_name(m) == name) return m;
  }
  throw InputError("unknown method '" + name + "'");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::kPadmm: return "padmm";
    case Method::kFista: return "fista";
    case Method::kClassicalFb: return "classical_fb";
    case Method::kFbs: return "fbs";
    case Method::kAcceleratedFbsRestart: return "accelerated_fbs_restart";
    case Method::kAdaptiveFbs: return "adaptive_fbs";
  }
  throw InputError("unknown method");
}

std::vector<Method> all_methods() {
  return {Method::kPadmm, Method::kFista, Method::kClassicalFb, Method::kFbs,
          Method::kAcceleratedFbsRestart, Method::kAdaptiveFbs};
}

SolveResult baseline_solve(const DenoiseProblem& problem, Method method,
                           const BaselineConfig& cfg) {
  problem.validate();
  if (method == Method::kPadmm) {
    throw InputError("padmm is not a baseline method");
  }
  if (cfg.max_iters < 0) {
    throw InputError("max_iters must be >= 0");
  }
  const auto start = std::chrono::steady_clock::now();
  const Dual dual(problem, cfg.epsilon);
  const double lip = dual.lipschitz();
  const int w = problem.observed.width;
  const int h = problem.observed.height;

  VectorField phi(w, h);
  ScalarField p = dual.primal(phi);
  SolveResult result;
  result.trace.method = method_name(method);
  const double p0 = energy(problem, p);
  result.trace.records.push_back({0, p0, dual.residual(phi, p), 0.0, elapsed_ms(start)});

  // Method state.
  VectorField momentum = phi;  // FISTA extrapolation point
  double t = 1.0;
  double f_prev = dual.value(phi);
  double tau = 1.0 / lip;
  VectorField grad = dual.gradient_at(phi);
  std::deque<double> history{f_prev};

  double previous = p0;
  for (int k = 1; k <= cfg.max_iters; ++k) {
    switch (method) {
      case Method::kClassicalFb:
        phi = forward_backward(phi, dual.gradient_at(phi), 1.0 / lip);
        break;
      case Method::kFbs:
        phi = forward_backward(phi, dual.gradient_at(phi), 1.9 / lip);
        break;
      case Method::kFista:
      case Method::kAcceleratedFbsRestart: {
        VectorField next = forward_backward(momentum, dual.gradient_at(momentum), 1.0 / lip);
        double f_next = dual.value(next);
        if (method == Method::kAcceleratedFbsRestart && f_next > f_prev) {
          t = 1.0;
          momentum = phi;
          next = forward_backward(momentum, dual.gradient_at(momentum), 1.0 / lip);
          f_next = dual.value(next);
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        const double beta = (t - 1.0) / t_next;
        momentum = next;
        for (std::size_t i = 0; i < momentum.size(); ++i) {
          momentum.x[i] += beta * (next.x[i] - phi.x[i]);
          momentum.y[i] += beta * (next.y[i] - phi.y[i]);
        }
        phi = std::move(next);
        t = t_next;
        f_prev = f_next;
        break;
      }
      case Method::kAdaptiveFbs: {
        const double reference = *std::max_element(history.begin(), history.end());
        VectorField next;
        VectorField step;
        double f_next = 0.0;
        for (int tries = 0; tries < 60; ++tries) {
          next = forward_backward(phi, grad, tau);
          f_next = dual.value(next);
          step = difference(next, phi);
          const double bound = reference + inner(step, grad) + inner(step, step) / (2.0 * tau);
          if (f_next <= bound + 1e-12) break;
          tau *= 0.5;
        }
        const VectorField grad_next = dual.gradient_at(next);
        const VectorField dg = difference(grad_next, grad);
        const double ss = inner(step, step);
        const double sg = inner(step, dg);
        const double gg = inner(dg, dg);
        if (sg > 0.0 && gg > 0.0) {
          const double steepest = ss / sg;
          const double minimum_residual = sg / gg;
          tau = 2.0 * minimum_residual > steepest ? minimum_residual
                                                  : steepest - 0.5 * minimum_residual;
        }
        phi = std::move(next);
        grad = grad_next;
        history.push_back(f_next);
        while (static_cast<int>(history.size()) > cfg.restart_memory) history.pop_front();
        break;
      }
      case Method::kPadmm:
        break;
    }
    p = dual.primal(phi);
    if (!all_finite(p) || !all_finite(phi)) {
      throw NumericalError("solver diverged at iteration " + std::to_string(k));
    }
    const double pk = energy(problem, p);
    const double decay = energy_decay(p0, previous, pk);
    result.trace.records.push_back({k, pk, dual.residual(phi, p), decay, elapsed_ms(start)});
    previous = pk;
    if (cfg.tol > 0.0 && k >= 2 && decay <= cfg.tol) {
      break;
    }
  }
  result.solution = problem.observed;
  result.solution.values = p.v;
  return result;
}

}  // namespace dff::opt
