#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dff/image.hpp"

namespace dff::opt {

// Fields -----------------------------------------------------------------------

struct ScalarField {
  int width = 0;
  int height = 0;
  std::vector<double> v;

  ScalarField() = default;
  ScalarField(int w, int h, double fill = 0.0)
      : width(w), height(h), v(static_cast<std::size_t>(w) * h, fill) {}

  std::size_t size() const { return v.size(); }
  double& at(int x, int y) { return v[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * width + x]; }
};

/// Two components per pixel, e.g. a gradient.
struct VectorField {
  int width = 0;
  int height = 0;
  std::vector<double> x;
  std::vector<double> y;

  VectorField() = default;
  VectorField(int w, int h, double fill = 0.0)
      : width(w), height(h),
        x(static_cast<std::size_t>(w) * h, fill),
        y(static_cast<std::size_t>(w) * h, fill) {}

  std::size_t size() const { return x.size(); }
};

ScalarField to_field(const DepthMap& depth);

/// Forward differences with a Neumann boundary: the last column of x and the
/// last row of y are zero.
VectorField gradient(const ScalarField& u);

/// Negative adjoint of gradient: <grad u, g> = -<u, div g>.
ScalarField divergence(const VectorField& g);

double inner(const ScalarField& a, const ScalarField& b);
double inner(const VectorField& a, const VectorField& b);
double norm(const ScalarField& a);
double norm(const VectorField& a);
bool all_finite(const ScalarField& a);
bool all_finite(const VectorField& a);

// Problem ----------------------------------------------------------------------

enum class Fidelity { kL1, kL2 };

/// TV-regularized denoising of `observed`.
///   L1: lambda * sum|t - I| + TV(t)
///   L2: lambda / 2 * sum (t - I)^2 + TV(t)
/// with isotropic TV(t) = sum sqrt(dx^2 + dy^2).
struct DenoiseProblem {
  DepthMap observed;
  double lambda = 0.7;
  Fidelity fidelity = Fidelity::kL1;

  /// Throws InputError unless lambda > 0 and the observation is finite and non-empty.
  void validate() const;
};

double total_variation(const ScalarField& t);
double energy(const DenoiseProblem& problem, const ScalarField& t);

// Proximal maps ----------------------------------------------------------------

struct ScalarTerm {
  enum class Kind { kL1ToData, kL2ToData };
  Kind kind = Kind::kL1ToData;
  double weight = 1.0;             // lambda
  const ScalarField* center = nullptr;  // I; null means zero
};

struct VectorTerm {
  enum class Kind { kGroupNorm, kUnitBall };
  Kind kind = Kind::kGroupNorm;
  double weight = 1.0;
};

/// argmin_p alpha * R(p) + 1/2 ||p - omega||^2.
///   L1ToData: soft-threshold towards the center by alpha * weight.
///   L2ToData: (omega + alpha * weight * center) / (1 + alpha * weight).
ScalarField prox(const ScalarTerm& term, double alpha, const ScalarField& omega);

///   GroupNorm (R = weight * sum |q_i|): per-pixel vector shrinkage by alpha * weight.
///   UnitBall (indicator of |q_i| <= 1): per-pixel radial projection; alpha is ignored.
VectorField prox(const VectorTerm& term, double alpha, const VectorField& omega);

// Constraint operator ----------------------------------------------------------

/// Linear map from primal fields to constraint space, with its adjoint.
struct PrimalJacobian {
  std::function<VectorField(const ScalarField&)> apply;
  std::function<ScalarField(const VectorField&)> adjoint;
};

/// Linear map on the splitting variable, with its adjoint.
struct SplitJacobian {
  std::function<VectorField(const VectorField&)> apply;
  std::function<VectorField(const VectorField&)> adjoint;
};

struct Linearization {
  PrimalJacobian w;  // dT/dp at (p_k, q_k)
  SplitJacobian t;   // dT/dq at (p_{k+1}, q_k)
};

/// Constraint T(p, q) = l coupling the primal and splitting variables.
class ConstraintOperator {
 public:
  virtual ~ConstraintOperator() = default;
  virtual VectorField evaluate(const ScalarField& p, const VectorField& q) const = 0;
  virtual PrimalJacobian jacobian_p(const ScalarField& p, const VectorField& q) const = 0;
  virtual SplitJacobian jacobian_q(const ScalarField& p, const VectorField& q) const = 0;
};

/// T(p, q) = grad p - q.
class TvConstraint final : public ConstraintOperator {
 public:
  VectorField evaluate(const ScalarField& p, const VectorField& q) const override;
  PrimalJacobian jacobian_p(const ScalarField& p, const VectorField& q) const override;
  SplitJacobian jacobian_q(const ScalarField& p, const VectorField& q) const override;
};

Linearization linearize(const ConstraintOperator& op, const ScalarField& p_k,
                        const VectorField& q_k, const ScalarField& p_next);

/// ||W||^2 estimated by power iteration on W* W, from a fixed pseudo-random start.
double operator_norm_sq(const PrimalJacobian& w, int width, int height, int iterations = 50);
double operator_norm_sq(const SplitJacobian& t, int width, int height, int iterations = 50);

/// ||(W, T)||^2 for the joint map (p, q) -> W p + T q.
double joint_operator_norm_sq(const PrimalJacobian& w, const SplitJacobian& t, int width,
                              int height, int iterations = 50);

// Traces -----------------------------------------------------------------------

struct TraceRecord {
  int iter = 0;
  double energy = 0.0;
  double residual_norm = 0.0;
  double energy_decay = 0.0;  // |P_k - P_{k-1}| / max(P_0, eps); 0 at k = 0
  double wall_ms = 0.0;       // since the solve started
};

/// Record 0 is the initial iterate; then one record per iteration.
struct SolverTrace {
  std::string method;
  std::vector<TraceRecord> records;
};

struct TraceMetrics {
  std::vector<double> energy_decay;  // k = 1 .. n-1
  std::vector<double> residual;      // k = 0 .. n-1
  double residual_mean = 0.0;
  double residual_std = 0.0;
};

/// Throws InputError on an empty trace.
TraceMetrics trace_metrics(const SolverTrace& trace);

/// |P_k - P_{k-1}| / max(P_0, 1e-12).
double energy_decay(double p0, double previous, double current);

/// First k >= 2 with energy_decay <= tol, if any.
std::optional<int> convergence_iteration(const SolverTrace& trace, double tol);

/// CSV: iter,energy,residual_norm,energy_decay,wall_ms
void write_trace_csv(const SolverTrace& trace, const std::filesystem::path& path);

// Solvers ----------------------------------------------------------------------

enum class Method { kPadmm, kFista, kClassicalFb, kFbs, kAcceleratedFbsRestart, kAdaptiveFbs };

/// padmm, fista, classical_fb, fbs, accelerated_fbs_restart, adaptive_fbs.
Method parse_method(const std::string& name);
std::string method_name(Method m);
std::vector<Method> all_methods();

struct PadmmConfig {
  double gamma = 1.0;
  std::optional<double> zeta1;  // defaults to 0.9 / (gamma ||(W, T)||^2)
  std::optional<double> zeta2;
  int max_iters = 300;
  double tol = 0.01;  // energy-decay stop; 0 runs the full budget
  int power_iterations = 50;
};

struct SolveResult {
  DepthMap solution;
  SolverTrace trace;
};

/// Linearized preconditioned ADMM with R(p) = fidelity, S(q) = sum |q_i|,
/// T(p, q) = grad p - q, l = 0:
///   p+ = prox_{z1 R}(p - z1 W*(2 rho - rho_prev))
///   q+ = prox_{z2 S}(q - z2 T*(rho + gamma (T(p+, q) - l)))
///   rho+ = rho + gamma (T(p+, q+) - l)
/// starting from p = I, q = 0, rho = rho_prev = 0. Stops when energy_decay <= tol
/// (checked from k = 2) or after max_iters. Throws InputError on step sizes that
/// violate z1 < 1/(gamma ||W||^2), z2 < 1/(gamma ||T||^2), NumericalError on divergence.
SolveResult padmm_solve(const DenoiseProblem& problem, const PadmmConfig& cfg = {});

struct BaselineConfig {
  int max_iters = 300;
  double tol = 0.0;
  /// Strong-convexity weight added to the L1 fidelity so that its conjugate is
  /// smooth: h(w) = lambda |w| + epsilon / 2 w^2.
  double epsilon = 0.05;
  int restart_memory = 10;  // adaptive_fbs: non-monotone line-search window
};

/// First-order methods on the dual of the fidelity-smoothed problem,
///   min over |phi_i| <= 1 of  F(phi) = sum h*(div phi) + <div phi, I>,
/// whose primal point is p(phi) = I + shrink(div phi, lambda_1) / mu. For L1,
/// (lambda_1, mu) = (lambda, epsilon); for L2, (0, lambda), which is the ROF dual.
/// The residual recorded is ||grad p - q|| with q the subgradient of the TV
/// norm at phi that lies closest to grad p.
SolveResult baseline_solve(const DenoiseProblem& problem, Method method,
                           const BaselineConfig& cfg = {});

/// Dispatches to padmm_solve or baseline_solve with a shared iteration budget.
SolveResult solve(const DenoiseProblem& problem, Method method, int max_iters, double tol);

}  // namespace dff::opt
