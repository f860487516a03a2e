#include <chrono>
#include <cmath>
#include <string>

#include "dff/error.hpp"
#include "dff/optimize.hpp"

namespace dff::opt {
namespace {

double elapsed_ms(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

void axpy(VectorField& y, double a, const VectorField& x) {
  for (std::size_t i = 0; i < y.size(); ++i) {
    y.x[i] += a * x.x[i];
    y.y[i] += a * x.y[i];
  }
}

}  // namespace

SolveResult padmm_solve(const DenoiseProblem& problem, const PadmmConfig& cfg) {
  problem.validate();
  if (cfg.max_iters < 0) {
    throw InputError("max_iters must be >= 0");
  }
  if (!(cfg.gamma > 0.0)) {
    throw InputError("gamma must be positive");
  }
  const auto start = std::chrono::steady_clock::now();
  const int w = problem.observed.width;
  const int h = problem.observed.height;
  const ScalarField observed = to_field(problem.observed);
  const TvConstraint op;

  ScalarField p = observed;
  VectorField q(w, h);
  VectorField rho(w, h);
  VectorField rho_prev(w, h);

  const Linearization lin0 = linearize(op, p, q, p);
  const double w_sq = operator_norm_sq(lin0.w, w, h, cfg.power_iterations);
  const double t_sq = operator_norm_sq(lin0.t, w, h, cfg.power_iterations);
  double zeta1 = 0.0, zeta2 = 0.0;
  if (!cfg.zeta1 || !cfg.zeta2) {
    const double joint = joint_operator_norm_sq(lin0.w, lin0.t, w, h, cfg.power_iterations);
    zeta1 = 0.9 / (cfg.gamma * joint);
    zeta2 = zeta1;
  }
  if (cfg.zeta1) zeta1 = *cfg.zeta1;
  if (cfg.zeta2) zeta2 = *cfg.zeta2;
  if (!(zeta1 > 0.0) || (w_sq > 0.0 && !(zeta1 < 1.0 / (cfg.gamma * w_sq)))) {
    throw InputError("zeta1 violates the step bound 1 / (gamma ||W||^2)");
  }
  if (!(zeta2 > 0.0) || (t_sq > 0.0 && !(zeta2 < 1.0 / (cfg.gamma * t_sq)))) {
    throw InputError("zeta2 violates the step bound 1 / (gamma ||T||^2)");
  }

  const ScalarTerm fidelity{problem.fidelity == Fidelity::kL1 ? ScalarTerm::Kind::kL1ToData
                                                              : ScalarTerm::Kind::kL2ToData,
                            problem.lambda, &observed};
  const VectorTerm tv{VectorTerm::Kind::kGroupNorm, 1.0};

  SolveResult result;
  result.trace.method = "padmm";
  const double p0 = energy(problem, p);
  result.trace.records.push_back({0, p0, norm(op.evaluate(p, q)), 0.0, elapsed_ms(start)});

  double previous = p0;
  for (int k = 1; k <= cfg.max_iters; ++k) {
    const PrimalJacobian wk = op.jacobian_p(p, q);
    VectorField over = rho;
    for (std::size_t i = 0; i < over.size(); ++i) {
      over.x[i] = 2.0 * rho.x[i] - rho_prev.x[i];
      over.y[i] = 2.0 * rho.y[i] - rho_prev.y[i];
    }
    ScalarField omega_p = p;
    const ScalarField pull = wk.adjoint(over);
    for (std::size_t i = 0; i < omega_p.size(); ++i) omega_p.v[i] -= zeta1 * pull.v[i];
    ScalarField p_next = prox(fidelity, zeta1, omega_p);

    const SplitJacobian tk = op.jacobian_q(p_next, q);
    VectorField s = rho;
    axpy(s, cfg.gamma, op.evaluate(p_next, q));
    VectorField omega_q = q;
    axpy(omega_q, -zeta2, tk.adjoint(s));
    VectorField q_next = prox(tv, zeta2, omega_q);

    const VectorField r = op.evaluate(p_next, q_next);
    rho_prev = rho;
    axpy(rho, cfg.gamma, r);
    p = std::move(p_next);
    q = std::move(q_next);

    if (!all_finite(p) || !all_finite(q) || !all_finite(rho)) {
      throw NumericalError("solver diverged at iteration " + std::to_string(k));
    }
    const double pk = energy(problem, p);
    const double decay = energy_decay(p0, previous, pk);
    result.trace.records.push_back({k, pk, norm(r), decay, elapsed_ms(start)});
    previous = pk;
    if (cfg.tol > 0.0 && k >= 2 && decay <= cfg.tol) {
      break;
    }
  }

  result.solution = problem.observed;
  result.solution.values = p.v;
  return result;
}

SolveResult solve(const DenoiseProblem& problem, Method method, int max_iters, double tol) {
  if (method == Method::kPadmm) {
    PadmmConfig cfg;
    cfg.max_iters = max_iters;
    cfg.tol = tol;
    return padmm_solve(problem, cfg);
  }
  BaselineConfig cfg;
  cfg.max_iters = max_iters;
  cfg.tol = tol;
  return baseline_solve(problem, method, cfg);
}

}  // namespace dff::opt
